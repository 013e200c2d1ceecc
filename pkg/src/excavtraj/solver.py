"""l1 exact-penalty sequential convex optimisation with a box trust region.

Each iteration linearises the cost residuals and constraint residuals by
central finite differences and solves the convex subproblem

    min_d  |r + J d|^2 / c0 + mu * sum_k s_k * hinge_k(c + A d)
    s.t.   |d|_inf <= radius,  lower <= x + d <= upper

where ``hinge`` is ``max(., 0)`` for inequalities and ``|.|`` for
equalities. Steps are accepted on the ratio of true to predicted merit
decrease; the penalty ``mu`` grows while constraints remain violated.
"""

from __future__ import annotations

import logging
import time
import warnings
from dataclasses import dataclass, field, replace

import cvxpy as cp
import numpy as np

from .constraints import evaluate_all
from .trajectory import rollout, segment_counts

__all__ = [
    "Evaluation",
    "EvaluationError",
    "ExcavationProblem",
    "IterationRecord",
    "OptimizationReport",
    "SolverConfig",
    "finite_difference_jacobian",
    "optimize",
    "sqp_solve",
]

log = logging.getLogger(__name__)

SHRINK_BELOW = 0.25
GROW_ABOVE = 0.75


class EvaluationError(RuntimeError):
    """An evaluator failed at a perturbed point."""


@dataclass(frozen=True)
class SolverConfig:
    fd_step_angle: float = 1e-4
    fd_step_interval: float = 1e-3
    trust_region_init: float = 0.1
    trust_region_min: float = 1e-4
    trust_region_max: float = 1.0
    shrink_factor: float = 0.3
    grow_factor: float = 2.0
    penalty_init: float = 10.0
    penalty_growth: float = 10.0
    penalty_max: float = 1e8
    constraint_tolerance: float = 1e-4
    cost_tolerance: float = 1e-5
    max_iterations: int = 300
    max_penalty_rounds: int = 8
    time_variable: bool = True
    # Soil velocity regularisations (m/s) solved in turn before the final
    # pass on the unmodified soil model; empty means a single pass.
    smoothing_schedule: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "smoothing_schedule",
                           tuple(float(e) for e in self.smoothing_schedule))
        if any(not e > 0 for e in self.smoothing_schedule):
            raise ValueError("solver.smoothing_schedule entries must be positive")
        positive = ("fd_step_angle", "fd_step_interval", "trust_region_init",
                    "trust_region_min", "trust_region_max", "penalty_init", "penalty_max",
                    "constraint_tolerance", "cost_tolerance", "max_iterations")
        for name in positive:
            if not getattr(self, name) > 0:
                raise ValueError(f"solver.{name} must be positive")
        if not 0 < self.shrink_factor < 1 < self.grow_factor:
            raise ValueError("need 0 < shrink_factor < 1 < grow_factor")
        if not self.penalty_growth > 1:
            raise ValueError("penalty_growth must exceed 1")
        if self.max_penalty_rounds < 0:
            raise ValueError("max_penalty_rounds must be non-negative")

    def to_dict(self):
        return {
            "fd_step_angle_rad": self.fd_step_angle,
            "fd_step_interval_s": self.fd_step_interval,
            "trust_region_init": self.trust_region_init,
            "trust_region_min": self.trust_region_min,
            "trust_region_max": self.trust_region_max,
            "shrink_factor": self.shrink_factor,
            "grow_factor": self.grow_factor,
            "penalty_init": self.penalty_init,
            "penalty_growth": self.penalty_growth,
            "penalty_max": self.penalty_max,
            "constraint_tolerance": self.constraint_tolerance,
            "cost_tolerance": self.cost_tolerance,
            "max_iterations": int(self.max_iterations),
            "max_penalty_rounds": int(self.max_penalty_rounds),
            "time_variable": bool(self.time_variable),
            "smoothing_schedule_m_s": list(self.smoothing_schedule),
        }


@dataclass
class Evaluation:
    """Cost residuals (cost = r . r) and signed constraint residuals at one point."""

    residuals: np.ndarray
    constraints: np.ndarray
    equality: np.ndarray
    scales: np.ndarray
    payload: object = None

    @property
    def cost(self):
        return float(self.residuals @ self.residuals)

    def violations(self):
        v = np.where(self.equality, np.abs(self.constraints), np.maximum(self.constraints, 0.0))
        return v * self.scales

    def max_violation(self):
        return float(np.max(self.violations(), initial=0.0))


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    cost: float
    merit: float
    max_violation: float
    trust_radius: float
    penalty: float
    accepted: bool
    ratio: float
    constraints: np.ndarray = field(repr=False, default=None)
    stage: int = 0


@dataclass
class OptimizationReport:
    x: np.ndarray
    status: str
    history: list
    wall_time: float
    constraint_names: tuple = ()
    trajectory: object = None
    final: Evaluation | None = None

    @property
    def converged(self):
        return self.status == "converged"


def finite_difference_jacobian(f, x, steps):
    """Central-difference Jacobian of vector ``f`` at ``x``, one column per variable."""
    x = np.asarray(x, dtype=float)
    steps = np.broadcast_to(np.asarray(steps, dtype=float), x.shape)
    cols = []
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = steps[j]
        try:
            fp = np.atleast_1d(np.asarray(f(x + e), dtype=float))
            fm = np.atleast_1d(np.asarray(f(x - e), dtype=float))
        except Exception as exc:
            raise EvaluationError(f"evaluation failed while perturbing variable {j}") from exc
        cols.append((fp - fm) / (2.0 * steps[j]))
    return np.stack(cols, axis=-1)


class _Subproblem:
    """Convex model of the penalised merit around the current iterate."""

    def __init__(self, ev, J_r, J_c, lower, upper, x, c0):
        n = x.size
        self.r = ev.residuals / np.sqrt(c0)
        self.J_r = J_r / np.sqrt(c0)
        # Normalised constraints keep the subproblem well conditioned.
        self.c = ev.constraints * ev.scales
        self.J_c = J_c * ev.scales[:, None]
        self.eq = ev.equality
        self.d = cp.Variable(n)
        self.radius = cp.Parameter(nonneg=True)
        self.mu = cp.Parameter(nonneg=True)
        lin = self.c + self.J_c @ self.d
        ineq, eq = ~self.eq, self.eq
        penalty = 0
        if ineq.any():
            penalty = penalty + cp.sum(cp.pos(lin[np.flatnonzero(ineq)]))
        if eq.any():
            penalty = penalty + cp.sum(cp.abs(lin[np.flatnonzero(eq)]))
        obj = cp.sum_squares(self.r + self.J_r @ self.d) + self.mu * penalty
        cons = [self.d <= self.radius, self.d >= -self.radius]
        lo = np.where(np.isfinite(lower), lower - x, -1e9)
        hi = np.where(np.isfinite(upper), upper - x, 1e9)
        cons += [self.d >= np.minimum(lo, 0.0), self.d <= np.maximum(hi, 0.0)]
        self.problem = cp.Problem(cp.Minimize(obj), cons)

    def model(self, d, mu):
        lin = self.c + self.J_c @ d
        v = np.where(self.eq, np.abs(lin), np.maximum(lin, 0.0))
        res = self.r + self.J_r @ d
        return float(res @ res + mu * v.sum())

    def solve(self, radius, mu):
        self.radius.value = radius
        self.mu.value = mu
        for solver in ("CLARABEL", "OSQP", "SCS"):
            try:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore")
                    self.problem.solve(solver=solver)
            except cp.SolverError:
                continue
            if self.problem.status in ("optimal", "optimal_inaccurate") and self.d.value is not None:
                return np.clip(np.asarray(self.d.value, dtype=float), -radius, radius)
        return None


def sqp_solve(problem, x0, config, max_iterations=None):
    """Run the penalty SQP on a generic ``problem``.

    ``problem`` provides ``evaluate(x, frozen=None) -> Evaluation``,
    ``freeze(x)``, hard bounds ``lower``/``upper`` and ``fd_steps``.
    """
    max_iterations = config.max_iterations if max_iterations is None else max_iterations
    start = time.perf_counter()
    x = np.array(x0, dtype=float)
    lower = np.broadcast_to(np.asarray(problem.lower, dtype=float), x.shape)
    upper = np.broadcast_to(np.asarray(problem.upper, dtype=float), x.shape)
    ev = problem.evaluate(x)
    c0 = ev.cost if ev.cost > 0 else 1.0
    mu = config.penalty_init
    radius = config.trust_region_init

    def merit(e):
        return e.cost / c0 + mu * float(np.sum(e.violations()))

    history = [IterationRecord(0, ev.cost, merit(ev), ev.max_violation(), radius, mu, True,
                               float("nan"), ev.constraints.copy())]
    it = 0
    rounds = 0
    status = None
    while status is None:
        inner_done = False
        while not inner_done:
            if it >= max_iterations:
                status = "max_iterations"
                break
            frozen = problem.freeze(x)
            base = ev

            def stacked(z, frozen=frozen):
                e = problem.evaluate(z, frozen)
                return np.concatenate([e.residuals, e.constraints])

            J = finite_difference_jacobian(stacked, x, problem.fd_steps)
            nr = base.residuals.size
            sub = _Subproblem(base, J[:nr], J[nr:], lower, upper, x, c0)
            m0 = sub.model(np.zeros_like(x), mu)
            while True:
                if it >= max_iterations:
                    status = "max_iterations"
                    break
                it += 1
                d = sub.solve(radius, mu)
                if d is None:
                    pred = 0.0
                else:
                    pred = m0 - sub.model(d, mu)
                if pred <= config.cost_tolerance * max(1.0, abs(m0)):
                    history.append(IterationRecord(it, ev.cost, merit(ev), ev.max_violation(), radius,
                                                   mu, False, float("nan"), ev.constraints.copy()))
                    inner_done = True
                    break
                try:
                    trial = problem.evaluate(x + d)
                    actual = merit(ev) - merit(trial)
                except ValueError:
                    trial, actual = None, -np.inf
                ratio = actual / pred
                if ratio < SHRINK_BELOW:
                    radius *= config.shrink_factor
                    history.append(IterationRecord(it, ev.cost, merit(ev), ev.max_violation(), radius,
                                                   mu, False, ratio, ev.constraints.copy()))
                    if radius < config.trust_region_min:
                        inner_done = True
                        break
                    continue
                x = x + d
                ev = trial
                if ratio > GROW_ABOVE:
                    radius = min(radius * config.grow_factor, config.trust_region_max)
                history.append(IterationRecord(it, ev.cost, merit(ev), ev.max_violation(), radius,
                                               mu, True, ratio, ev.constraints.copy()))
                log.debug("iter %d cost %.6g viol %.3g radius %.3g mu %.3g",
                          it, ev.cost, ev.max_violation(), radius, mu)
                break
        if status is not None:
            break
        if ev.max_violation() <= config.constraint_tolerance:
            status = "converged"
        elif rounds >= config.max_penalty_rounds or mu * config.penalty_growth > config.penalty_max:
            status = "infeasible_stall"
        else:
            mu *= config.penalty_growth
            rounds += 1
            radius = config.trust_region_init
    return OptimizationReport(
        x=x,
        status=status,
        history=history,
        wall_time=time.perf_counter() - start,
        final=ev,
    )


class ExcavationProblem:
    """Stacks articulated keypoint angles (and optionally intervals) into one vector."""

    def __init__(self, initial, spec, model, terrain, soil, config, n_elements=40):
        self.initial = initial
        self.spec = spec
        self.model = model
        self.terrain = terrain
        self.soil = soil
        self.n_elements = n_elements
        self.time_variable = config.time_variable
        n_kp = initial.keypoints.shape[0]
        self.n_angles = 3 * n_kp
        n = self.n_angles + (n_kp - 1 if self.time_variable else 0)
        steps = np.full(n, config.fd_step_angle)
        steps[self.n_angles:] = config.fd_step_interval
        self.fd_steps = steps
        self.lower = np.full(n, -np.inf)
        self.upper = np.full(n, np.inf)
        self.lower[self.n_angles:] = spec.min_interval

    def pack(self, traj):
        x = traj.keypoints[:, 1:4].ravel()
        if self.time_variable:
            x = np.concatenate([x, traj.intervals])
        return x

    def unpack(self, x):
        k = self.initial.keypoints.copy()
        k[:, 1:4] = np.asarray(x[: self.n_angles]).reshape(-1, 3)
        T = x[self.n_angles:] if self.time_variable else self.initial.intervals
        return self.initial.replace(keypoints=k, intervals=np.array(T, dtype=float))

    def freeze(self, x):
        return segment_counts(self.unpack(x))

    def evaluate(self, x, frozen=None):
        traj = self.unpack(x)
        roll = rollout(traj, self.model, self.terrain, self.soil, self.n_elements, frozen)
        report = evaluate_all(traj, self.spec, self.model, self.terrain, self.soil,
                              self.n_elements, roll=roll)
        r = (np.sqrt(roll.weights)[:, None] * roll.tau[:, 1:4]).ravel()
        return Evaluation(r, report.values, report.equality, report.scales, (traj, report, roll))


def optimize(initial, spec, model, terrain, soil, config, n_elements=40):
    """Minimum-torque trajectory through the excavation constraints.

    With a ``smoothing_schedule`` the problem is first solved on soil models
    with larger velocity regularisation, each pass warm-starting the next;
    the last pass always uses ``soil`` unchanged. Iteration records carry
    their pass index in ``stage`` and ``max_iterations`` applies per pass.
    """
    soils = [soil.smoothed(e) for e in config.smoothing_schedule] + [soil]
    start = time.perf_counter()
    current = initial
    history = []
    for stage, stage_soil in enumerate(soils):
        problem = ExcavationProblem(current, spec, model, terrain, stage_soil, config, n_elements)
        report = sqp_solve(problem, problem.pack(current), config)
        offset = history[-1].iteration + 1 if history else 0
        history += [replace(r, iteration=r.iteration + offset, stage=stage) for r in report.history]
        current, final_report, _ = report.final.payload
    report.history = history
    report.wall_time = time.perf_counter() - start
    report.trajectory = current
    report.constraint_names = final_report.names
    return report
