"""Scenario files, experiment runs and result persistence.

A scenario is a YAML document whose keys carry their unit as a suffix
(``rho_kg_m3``, ``interval_s``, ``entry_cone_half_angle_deg``). Every field
not given in the file is filled from a default and the origin of each value
is kept in ``ScenarioSpec.provenance``. See ``docs/scenario_format.md``.
"""

from __future__ import annotations

import csv
import io
import os
import tempfile
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .constraints import ConstraintSpec, evaluate_all
from .kinematics import BucketGeometry, ExcavatorModel, forward_kinematics
from .seed import TaskSpec, seed_trajectory
from .soil import SoilParams, TerrainProfile, depth_below_surface
from .solver import IterationRecord, OptimizationReport, SolverConfig, optimize
from .trajectory import KeypointTrajectory, rollout

__all__ = [
    "BUNDLED_SCENARIOS",
    "ResultBundle",
    "SCHEMA_VERSION",
    "ScenarioError",
    "ScenarioSpec",
    "VerificationResult",
    "dump_scenario",
    "emit_results",
    "evaluate_trajectory",
    "make_seed",
    "load_scenario",
    "parse_scenario",
    "read_csv",
    "run",
    "verify",
]

SCHEMA_VERSION = 1
RESULT_FILES = ("trajectory.csv", "trace.csv", "summary.yaml", "tip_path.csv")
BUNDLED_SCENARIOS = (
    "experiment1",
    "experiment2_fixed",
    "experiment2_variable",
    "experiment3_soft",
    "experiment3_hard",
)


class ScenarioError(ValueError):
    """Malformed or invalid scenario; the message names the offending field."""


# --------------------------------------------------------------------------
# parsing


class _Section:
    """Reads one mapping, recording where each value came from."""

    def __init__(self, data, path, provenance, origin="scenario"):
        if data is None:
            data = {}
        if not isinstance(data, dict):
            raise ScenarioError(f"{path or 'scenario'}: expected a mapping, got {type(data).__name__}")
        self.data = data
        self.path = path
        self.provenance = provenance
        self.origin = origin
        self.used = set()

    def _name(self, key):
        return f"{self.path}.{key}" if self.path else key

    def get(self, key, default=None, conv=float, required=False):
        name = self._name(key)
        self.used.add(key)
        if key not in self.data:
            if required:
                raise ScenarioError(f"{name}: required field is missing")
            self.provenance[name] = "default"
            return default
        self.provenance[name] = self.origin
        try:
            return conv(self.data[key])
        except (TypeError, ValueError) as exc:
            raise ScenarioError(f"{name}: {exc}") from None

    def section(self, key):
        self.used.add(key)
        return _Section(self.data.get(key), self._name(key), self.provenance, self.origin)

    def finish(self):
        extra = sorted(set(self.data) - self.used)
        if extra:
            raise ScenarioError(f"{self.path or 'scenario'}: unknown field(s) {', '.join(extra)}")


def _number(v):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ValueError(f"expected a number, got {v!r}")
    out = float(v)
    if not np.isfinite(out):
        raise ValueError(f"expected a finite number, got {v!r}")
    return out


def _integer(v):
    if isinstance(v, bool) or not isinstance(v, int):
        raise ValueError(f"expected an integer, got {v!r}")
    return v


def _boolean(v):
    if not isinstance(v, bool):
        raise ValueError(f"expected true or false, got {v!r}")
    return v


def _vector(n=None):
    def conv(v):
        if not isinstance(v, (list, tuple)):
            raise ValueError(f"expected a list of numbers, got {v!r}")
        out = [_number(x) for x in v]
        if n is not None and len(out) != n:
            raise ValueError(f"expected {n} values, got {len(out)}")
        return out
    return conv


def _matrix(rows, cols):
    def conv(v):
        if not isinstance(v, (list, tuple)) or len(v) != rows:
            raise ValueError(f"expected {rows} rows of {cols} numbers")
        return [_vector(cols)(r) for r in v]
    return conv


def _validated(name, factory, **kwargs):
    try:
        return factory(**kwargs)
    except ValueError as exc:
        raise ScenarioError(f"{name}: {exc}") from None


def _read_yaml(text, source):
    try:
        return yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" (line {mark.line + 1}, column {mark.column + 1})" if mark else ""
        problem = getattr(exc, "problem", None) or str(exc)
        raise ScenarioError(f"{source}{where}: YAML parse error: {problem}") from None


_DEFAULT_BUCKET = BucketGeometry()


def _parse_bucket(sec):
    d = _DEFAULT_BUCKET
    bucket = _validated(
        sec.path,
        BucketGeometry,
        width=sec.get("width_m", d.width, _number),
        back_plane_length=sec.get("back_plane_length_m", d.back_plane_length, _number),
        separation_plane_length=sec.get("separation_plane_length_m", d.separation_plane_length, _number),
        plane_angle=np.radians(sec.get("plane_angle_deg", np.degrees(d.plane_angle), _number)),
        tooth_direction=sec.get("tooth_direction", d.tooth_direction.tolist(), _vector(2)),
    )
    sec.finish()
    return bucket


def _parse_excavator(sec):
    sec.get("schema_version", SCHEMA_VERSION, _integer)
    kwargs = dict(
        link_lengths=sec.get("link_lengths_m", conv=_vector(3), required=True),
        link_masses=sec.get("link_masses_kg", conv=_vector(3), required=True),
        link_com_offsets=sec.get("link_com_offsets_m", conv=_matrix(3, 2), required=True),
        link_inertias=sec.get("link_inertias_kg_m2", conv=_vector(3), required=True),
        joint_velocity_limits=sec.get("joint_velocity_limits_rad_s", conv=_vector(4), required=True),
        joint_torque_limits=sec.get("joint_torque_limits_N_m", conv=_vector(4), required=True),
        swing_angle=sec.get("swing_angle_rad", 0.0, _number),
        base_position=sec.get("base_position_m", [0.0, 0.0], _vector(2)),
        gravity=sec.get("gravity_m_s2", 9.81, _number),
        bucket=_parse_bucket(sec.section("bucket")),
    )
    sec.finish()
    return _validated(sec.path, ExcavatorModel, **kwargs)


def _parse_soil(sec):
    kwargs = dict(
        rho=sec.get("rho_kg_m3", conv=_number, required=True),
        k_p=sec.get("k_p", conv=_number, required=True),
        k_v=sec.get("k_v_N_s_m3", conv=_number, required=True),
        k_s=sec.get("k_s", conv=_number, required=True),
        gravity=sec.get("gravity_m_s2", 9.81, _number),
        velocity_eps=sec.get("velocity_eps_m_s", SoilParams.velocity_eps, _number),
    )
    sec.finish()
    try:
        return SoilParams(**kwargs)
    except ValueError as exc:
        msg = str(exc)
        field_ = next((k for k in ("rho", "k_p", "k_v", "k_s", "velocity_eps", "gravity") if k in msg), None)
        name = f"{sec.path}.{field_}" if field_ else sec.path
        raise ScenarioError(f"{name}: {msg}") from None


def _parse_terrain(sec):
    if "flat_height_m" in sec.data:
        height = sec.get("flat_height_m", conv=_number)
        lo, hi = sec.get("x_range_m", [-20.0, 20.0], _vector(2))
        sec.finish()
        return _validated(sec.path, TerrainProfile.flat, height=height, x_min=lo, x_max=hi)
    x = sec.get("x_m", conv=_vector(), required=True)
    z = sec.get("z_m", conv=_vector(), required=True)
    sec.finish()
    return _validated(sec.path, TerrainProfile, x=x, z=z)


def _parse_task(sec):
    d = TaskSpec()
    task = _validated(
        sec.path,
        TaskSpec,
        dig_start_x=sec.get("dig_start_x_m", d.dig_start_x, _number),
        dig_end_x=sec.get("dig_end_x_m", d.dig_end_x, _number),
        target_depth=sec.get("target_depth_m", d.target_depth, _number),
        penetration_fraction=sec.get("penetration_fraction", d.penetration_fraction, _number),
        exit_run=sec.get("exit_run_m", d.exit_run, _number),
        lift_height=sec.get("lift_height_m", d.lift_height, _number),
        rotation_keypoints=sec.get("rotation_keypoints", d.rotation_keypoints, _integer),
        interval=sec.get("interval_s", d.interval, _number),
        penetration_turn_deg=sec.get("penetration_turn_deg", d.penetration_turn_deg, _number),
        drag_turn_deg=sec.get("drag_turn_deg", d.drag_turn_deg, _number),
        exit_turn_deg=sec.get("exit_turn_deg", d.exit_turn_deg, _number),
    )
    c = ConstraintSpec()
    volume = (sec.get("volume_min_m3", c.volume_min, _number), sec.get("volume_max_m3", c.volume_max, _number))
    window = sec.get("depth_window_m", list(c.depth_window), _vector(2))
    sec.finish()
    return task, volume, window


def _parse_constraints(sec, volume, window):
    d = ConstraintSpec()
    optional = lambda key: sec.get(key, None, _vector(4)) if key in sec.data else sec.get(key, None)  # noqa: E731
    kwargs = dict(
        volume_min=volume[0],
        volume_max=volume[1],
        depth_window=tuple(window),
        entry_cone_half_angle=np.radians(
            sec.get("entry_cone_half_angle_deg", np.degrees(d.entry_cone_half_angle), _number)),
        lift_cone_half_angle=np.radians(
            sec.get("lift_cone_half_angle_deg", np.degrees(d.lift_cone_half_angle), _number)),
        rotation_sign=sec.get("rotation_sign", d.rotation_sign, _integer),
        min_interval=sec.get("min_interval_s", d.min_interval, _number),
        boundary_velocity_pins=sec.get("boundary_velocity_pins", d.boundary_velocity_pins, _boolean),
        velocity_limits=optional("velocity_limits_rad_s"),
        torque_limits=optional("torque_limits_N_m"),
    )
    sec.finish()
    return _validated(sec.path, ConstraintSpec, **kwargs)


_SOLVER_KEYS = {
    "fd_step_angle_rad": ("fd_step_angle", _number),
    "fd_step_interval_s": ("fd_step_interval", _number),
    "trust_region_init": ("trust_region_init", _number),
    "trust_region_min": ("trust_region_min", _number),
    "trust_region_max": ("trust_region_max", _number),
    "shrink_factor": ("shrink_factor", _number),
    "grow_factor": ("grow_factor", _number),
    "penalty_init": ("penalty_init", _number),
    "penalty_growth": ("penalty_growth", _number),
    "penalty_max": ("penalty_max", _number),
    "constraint_tolerance": ("constraint_tolerance", _number),
    "cost_tolerance": ("cost_tolerance", _number),
    "max_iterations": ("max_iterations", _integer),
    "max_penalty_rounds": ("max_penalty_rounds", _integer),
    "time_variable": ("time_variable", _boolean),
    "smoothing_schedule_m_s": ("smoothing_schedule", _vector()),
}


def _parse_solver(sec):
    d = SolverConfig()
    kwargs = {attr: sec.get(key, getattr(d, attr), conv) for key, (attr, conv) in _SOLVER_KEYS.items()}
    sec.finish()
    return _validated(sec.path, SolverConfig, **kwargs)


def _parse_seed(value, dt, provenance):
    if value is None:
        provenance["seed"] = "default"
        return "heuristic"
    provenance["seed"] = "scenario"
    if value == "heuristic":
        return value
    if not isinstance(value, dict):
        raise ScenarioError("seed: expected 'heuristic' or a mapping with labels, keypoints_rad, intervals_s")
    sec = _Section(value, "seed", provenance)
    labels = sec.get("labels", conv=lambda v: [str(x) for x in v], required=True)
    kp = sec.get("keypoints_rad", conv=lambda v: [_vector(4)(r) for r in v], required=True)
    T = sec.get("intervals_s", conv=_vector(), required=True)
    sec.finish()
    return _validated("seed", KeypointTrajectory, keypoints=kp, intervals=T, labels=labels, dt=dt)


@dataclass(frozen=True, eq=False)
class ScenarioSpec:
    """Everything needed to reproduce one optimisation run."""

    name: str
    model: ExcavatorModel
    soil: SoilParams
    terrain: TerrainProfile
    task: TaskSpec
    constraints: ConstraintSpec
    solver: SolverConfig
    dt: float = 0.05
    n_elements: int = 40
    seed: object = "heuristic"
    description: str = ""
    provenance: dict = field(default_factory=dict)

    def with_solver(self, **changes):
        kw = {a: getattr(self.solver, a) for a, _ in _SOLVER_KEYS.values()}
        kw.update(changes)
        return ScenarioSpec(**{**self.__dict__, "solver": SolverConfig(**kw)})

    def to_dict(self):
        """Fully explicit form; loading it back yields the same scenario."""
        constraints = self.constraints.to_dict()
        task = self.task.to_dict()
        task["volume_min_m3"] = constraints.pop("volume_min_m3")
        task["volume_max_m3"] = constraints.pop("volume_max_m3")
        task["depth_window_m"] = constraints.pop("depth_window_m")
        excavator = {"schema_version": SCHEMA_VERSION, **self.model.to_dict()}
        out = {
            "schema_version": SCHEMA_VERSION,
            "name": self.name,
            "description": self.description,
            "excavator": excavator,
            "soil": self.soil.to_dict(),
            "terrain": self.terrain.to_dict(),
            "task": task,
            "constraints": constraints,
            "solver": self.solver.to_dict(),
            "trajectory": {"dt_s": float(self.dt), "n_elements": int(self.n_elements)},
        }
        if isinstance(self.seed, KeypointTrajectory):
            s = self.seed.to_dict()
            s.pop("dt_s")
            out["seed"] = s
        else:
            out["seed"] = self.seed
        return out


def _resolve_reference(ref, base_dir):
    candidates = []
    if base_dir is not None:
        candidates += [Path(base_dir) / ref, Path(base_dir) / f"{ref}.yaml"]
    candidates += [Path(ref)]
    for c in candidates:
        if c.is_file():
            return c.read_text(), str(c)
    bundled = resources.files("excavtraj") / "scenarios" / (ref if ref.endswith(".yaml") else f"{ref}.yaml")
    if bundled.is_file():
        return bundled.read_text(), f"bundled:{bundled.name}"
    raise ScenarioError(f"excavator: reference {ref!r} does not resolve to a file")


def parse_scenario(data, base_dir=None, source="scenario"):
    """Validate a scenario mapping (as loaded from YAML) into a ``ScenarioSpec``."""
    provenance = {}
    top = _Section(data, "", provenance)
    version = top.get("schema_version", conv=_integer, required=True)
    if version != SCHEMA_VERSION:
        raise ScenarioError(f"schema_version: unsupported version {version} (expected {SCHEMA_VERSION})")
    name = top.get("name", Path(source).stem, str)
    description = top.get("description", "", str)

    top.used.add("excavator")
    exc = top.data.get("excavator")
    if exc is None:
        raise ScenarioError("excavator: required field is missing")
    if isinstance(exc, str):
        text, where = _resolve_reference(exc, base_dir)
        model = _parse_excavator(_Section(_read_yaml(text, where), "excavator", provenance, where))
    else:
        model = _parse_excavator(top.section("excavator"))

    soil = _parse_soil(top.section("soil"))
    terrain = _parse_terrain(top.section("terrain"))
    task, volume, window = _parse_task(top.section("task"))
    constraints = _parse_constraints(top.section("constraints"), volume, window)
    solver = _parse_solver(top.section("solver"))
    traj = top.section("trajectory")
    dt = traj.get("dt_s", 0.05, _number)
    n_elements = traj.get("n_elements", 40, _integer)
    traj.finish()
    if not dt > 0:
        raise ScenarioError("trajectory.dt_s: must be positive")
    if n_elements < 1:
        raise ScenarioError("trajectory.n_elements: must be at least 1")
    top.used.add("seed")
    seed = _parse_seed(top.data.get("seed"), dt, provenance)
    top.finish()
    return ScenarioSpec(
        name=name,
        model=model,
        soil=soil,
        terrain=terrain,
        task=task,
        constraints=constraints,
        solver=solver,
        dt=dt,
        n_elements=n_elements,
        seed=seed,
        description=description,
        provenance=provenance,
    )


def load_scenario(path):
    """Load a scenario from ``path`` or by bundled name (e.g. ``"experiment1"``)."""
    p = Path(path)
    if p.is_file():
        text, base, source = p.read_text(), p.parent, str(p)
    else:
        name = p.name if p.suffix == ".yaml" else f"{p.name}.yaml"
        bundled = resources.files("excavtraj") / "scenarios" / name
        if str(path) != p.name or not bundled.is_file():
            raise ScenarioError(f"{path}: no such scenario file or bundled scenario")
        text, base, source = bundled.read_text(), None, f"bundled:{name}"
    return parse_scenario(_read_yaml(text, source), base_dir=base, source=source)


def dump_scenario(spec):
    """Serialise ``spec`` to YAML text with every field explicit."""
    return yaml.safe_dump(spec.to_dict(), sort_keys=False, default_flow_style=None, width=100)


# --------------------------------------------------------------------------
# runs and results


@dataclass(frozen=True, eq=False)
class ResultBundle:
    scenario: ScenarioSpec
    seed: KeypointTrajectory
    trajectory: KeypointTrajectory
    report: OptimizationReport
    rollout: object
    constraints: object

    @property
    def status(self):
        return self.report.status

    @property
    def cost(self):
        return self.rollout.cost


def evaluate_trajectory(spec, traj):
    """Rollout and constraint report of ``traj`` under ``spec``."""
    roll = rollout(traj, spec.model, spec.terrain, spec.soil, spec.n_elements)
    rep = evaluate_all(traj, spec.constraints, spec.model, spec.terrain, spec.soil, spec.n_elements, roll=roll)
    return roll, rep


def make_seed(spec):
    """Initial trajectory of ``spec``: explicit, or built from the task geometry."""
    if isinstance(spec.seed, KeypointTrajectory):
        return spec.seed
    return seed_trajectory(spec.constraints, spec.model, spec.terrain, spec.task, dt=spec.dt)


def run(spec, out_dir=None, *, fixed_time=False, max_iterations=None, optimize_=True):
    """Seed and optimise ``spec``; write results to ``out_dir`` when given.

    With ``optimize_=False`` the seed itself is evaluated and reported with
    status ``"seed"``.
    """
    if fixed_time:
        spec = spec.with_solver(time_variable=False)
    if max_iterations is not None:
        spec = spec.with_solver(max_iterations=int(max_iterations))
    initial = make_seed(spec)
    if optimize_:
        report = optimize(initial, spec.constraints, spec.model, spec.terrain, spec.soil,
                          spec.solver, spec.n_elements)
        traj = report.trajectory
    else:
        traj = initial
        report = None
    roll, rep = evaluate_trajectory(spec, traj)
    if report is None:
        record = IterationRecord(0, roll.cost, float("nan"), rep.max_violation(), float("nan"),
                                 float("nan"), True, float("nan"), rep.values.copy())
        report = OptimizationReport(x=np.zeros(0), status="seed", history=[record], wall_time=0.0,
                                    constraint_names=rep.names, trajectory=traj)
    bundle = ResultBundle(scenario=spec, seed=initial, trajectory=traj, report=report,
                          rollout=roll, constraints=rep)
    if out_dir is not None:
        emit_results(bundle, out_dir)
    return bundle


def _fmt(v):
    return "%.17g" % v


def _csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def _atomic_write(path, text):
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


TRAJECTORY_COLUMNS = (
    ["t_s"]
    + [f"q{j}_rad" for j in range(4)]
    + [f"qd{j}_rad_s" for j in range(4)]
    + [f"tau{j}_N_m" for j in range(4)]
    + ["Fx_N", "Fz_N", "My_N_m", "tip_x_m", "tip_z_m"]
)
TIP_PATH_COLUMNS = ["t_s", "x_m", "z_m", "rotation_rad", "depth_m"]
TRACE_COLUMNS = ["iteration", "stage", "cost", "merit", "max_violation", "trust_radius",
                 "penalty", "accepted", "ratio"]


def _summary(bundle):
    spec = bundle.scenario
    rep = bundle.constraints
    hist = bundle.report.history
    return {
        "schema_version": SCHEMA_VERSION,
        "generator": f"excavtraj {__version__}",
        "scenario_name": spec.name,
        "status": bundle.status,
        "final_cost": float(bundle.cost),
        "duration_s": float(bundle.trajectory.duration),
        "swept_volume_m3": float(rep.info["swept_volume_m3"]),
        "max_tip_depth_m": float(rep.info["max_tip_depth_m"]),
        "max_violation": rep.max_violation(),
        "iterations": int(hist[-1].iteration),
        "trajectory": bundle.trajectory.to_dict(),
        "seed_trajectory": bundle.seed.to_dict(),
        "residuals": rep.residuals,
        "scenario": spec.to_dict(),
        "provenance": dict(sorted(spec.provenance.items())),
    }


def emit_results(bundle, out_dir):
    """Write the four result files into ``out_dir``; return ``{name: size_bytes}``."""
    hist = bundle.report.history
    if not hist:
        raise ValueError("result bundle has an empty iteration history")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    roll = bundle.rollout
    dense = roll.dense
    pose = forward_kinematics(bundle.scenario.model, dense.q)
    w = roll.wrench
    traj_rows = np.column_stack([dense.t, dense.q, dense.qd, roll.tau, w[:, 1], w[:, 2], w[:, 0],
                                 pose.position])
    depth = depth_below_surface(bundle.scenario.terrain, pose.position)
    tip_rows = np.column_stack([dense.t, pose.position, pose.rotation, depth])
    names = bundle.constraints.names
    trace_rows = [
        [r.iteration, r.stage, float(r.cost), float(r.merit), float(r.max_violation),
         float(r.trust_radius), float(r.penalty), int(r.accepted), float(r.ratio),
         *[float(v) for v in r.constraints]]
        for r in hist
    ]
    texts = {
        "trajectory.csv": _csv_text(TRAJECTORY_COLUMNS, [[float(v) for v in row] for row in traj_rows]),
        "trace.csv": _csv_text(TRACE_COLUMNS + list(names), trace_rows),
        "summary.yaml": yaml.safe_dump(_summary(bundle), sort_keys=False, default_flow_style=None, width=100),
        "tip_path.csv": _csv_text(TIP_PATH_COLUMNS, [[float(v) for v in row] for row in tip_rows]),
    }
    manifest = {}
    for name in RESULT_FILES:
        _atomic_write(out / name, texts[name])
        manifest[name] = (out / name).stat().st_size
    return manifest


def read_csv(path):
    """Parse a result CSV into ``(header, float array)``."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array([[float(v) for v in r] for r in rows[1:]], dtype=float)


@dataclass(frozen=True)
class VerificationResult:
    cost_rel_error: float
    residual_abs_error: float
    tau_rel_error: float
    ok: bool


def verify(out_dir, cost_rtol=1e-9, residual_atol=1e-9):
    """Re-evaluate a stored result from its own summary and compare.

    The summary embeds the fully explicit scenario, so no other input is
    needed. Torques in ``trajectory.csv`` are compared relative to the
    largest stored torque.
    """
    out = Path(out_dir)
    summary = _read_yaml((out / "summary.yaml").read_text(), str(out / "summary.yaml"))
    spec = parse_scenario(summary["scenario"], source=str(out / "summary.yaml"))
    traj = KeypointTrajectory.from_dict(summary["trajectory"])
    roll, rep = evaluate_trajectory(spec, traj)
    stored_cost = float(summary["final_cost"])
    cost_err = abs(roll.cost - stored_cost) / max(abs(stored_cost), 1e-300)
    stored_res = summary["residuals"]
    if set(stored_res) != set(rep.names):
        raise ValueError("stored residual names do not match the re-evaluated constraint set")
    res_err = max((abs(rep[n] - float(v)) for n, v in stored_res.items()), default=0.0)
    header, data = read_csv(out / "trajectory.csv")
    cols = [header.index(f"tau{j}_N_m") for j in range(4)]
    stored_tau = data[:, cols]
    if stored_tau.shape != roll.tau.shape:
        tau_err = float("inf")
    else:
        tau_err = float(np.max(np.abs(stored_tau - roll.tau)) / max(np.max(np.abs(stored_tau)), 1e-300))
    ok = cost_err <= cost_rtol and res_err <= residual_atol and tau_err <= cost_rtol
    return VerificationResult(cost_err, res_err, tau_err, ok)
