"""Excavation task constraints as signed residuals over keypoints and intervals.

Inequality residuals are satisfied when ``<= 0``; equality residuals when
``== 0``. Geometric constraints are evaluated at keypoints only; velocity and
torque limits at every dense waypoint, reported as the worst waypoint of each
segment.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .kinematics import cross2, forward_kinematics, rot2, tip_frame
from .soil import depth_below_surface, surface_normal
from .trajectory import rollout

__all__ = [
    "ConstraintReport",
    "ConstraintSpec",
    "DegenerateGeometryError",
    "cone_normals",
    "direction_halfplane_residual",
    "evaluate_all",
    "heading_direction",
    "limit_residuals",
    "monotonic_direction_residuals",
    "swept_volume",
    "translation_direction",
]


class DegenerateGeometryError(ValueError):
    """Task geometry for which a constraint is undefined."""


@dataclass(frozen=True)
class ConstraintSpec:
    volume_min: float = 0.8
    volume_max: float = 1.0
    depth_window: tuple = (0.3, 1.2)
    entry_cone_half_angle: float = np.radians(20.0)
    lift_cone_half_angle: float = np.radians(15.0)
    rotation_sign: int = 1
    min_interval: float = 0.2
    boundary_velocity_pins: bool = False
    velocity_limits: tuple | None = None
    torque_limits: tuple | None = None

    def __post_init__(self):
        if not 0 < self.volume_min <= self.volume_max:
            raise ValueError("need 0 < volume_min <= volume_max")
        z1, z2 = self.depth_window
        if not z1 < z2:
            raise ValueError("depth_window must satisfy Z1 < Z2")
        if self.rotation_sign not in (1, -1):
            raise ValueError("rotation_sign must be +1 or -1")
        if not self.min_interval > 0:
            raise ValueError("min_interval must be positive")
        for name in ("entry_cone_half_angle", "lift_cone_half_angle"):
            if not 0 < getattr(self, name) < np.pi / 2:
                raise ValueError(f"{name} must lie in (0, pi/2)")
        object.__setattr__(self, "depth_window", (float(z1), float(z2)))

    def limits(self, model):
        v = model.joint_velocity_limits if self.velocity_limits is None else self.velocity_limits
        t = model.joint_torque_limits if self.torque_limits is None else self.torque_limits
        return np.asarray(v, dtype=float), np.asarray(t, dtype=float)

    def to_dict(self):
        d = {
            "volume_min_m3": float(self.volume_min),
            "volume_max_m3": float(self.volume_max),
            "depth_window_m": list(self.depth_window),
            "entry_cone_half_angle_deg": float(np.degrees(self.entry_cone_half_angle)),
            "lift_cone_half_angle_deg": float(np.degrees(self.lift_cone_half_angle)),
            "rotation_sign": int(self.rotation_sign),
            "min_interval_s": float(self.min_interval),
            "boundary_velocity_pins": bool(self.boundary_velocity_pins),
        }
        if self.velocity_limits is not None:
            d["velocity_limits_rad_s"] = [float(v) for v in self.velocity_limits]
        if self.torque_limits is not None:
            d["torque_limits_N_m"] = [float(v) for v in self.torque_limits]
        return d


@dataclass(frozen=True, eq=False)
class ConstraintReport:
    """Named residuals with their kind and the scale used to normalise them."""

    names: tuple
    values: np.ndarray
    equality: np.ndarray
    scales: np.ndarray
    info: dict = field(default_factory=dict)

    @property
    def residuals(self):
        return dict(zip(self.names, self.values.tolist()))

    def violations(self, scaled=True):
        v = np.where(self.equality, np.abs(self.values), np.maximum(self.values, 0.0))
        return v * self.scales if scaled else v

    def max_violation(self, scaled=True):
        return float(np.max(self.violations(scaled), initial=0.0))

    def __getitem__(self, name):
        return float(self.values[self.names.index(name)])


def _shoelace(pts):
    x, z = pts[:, 0], pts[:, 1]
    return 0.5 * float(np.dot(x, np.roll(z, -1)) - np.dot(np.roll(x, -1), z))


def _segments_cross(p1, p2, p3, p4):
    o1 = cross2(p2 - p1, p3 - p1)
    o2 = cross2(p2 - p1, p4 - p1)
    o3 = cross2(p4 - p3, p1 - p3)
    o4 = cross2(p4 - p3, p2 - p3)
    return o1 * o2 < 0 and o3 * o4 < 0


def quadrilateral_area(a, b, c, d, check=True):
    pts = np.array([a, b, c, d], dtype=float)
    if check and (_segments_cross(pts[0], pts[1], pts[2], pts[3])
                  or _segments_cross(pts[1], pts[2], pts[3], pts[0])):
        raise DegenerateGeometryError("swept-volume quadrilateral abcd self-intersects")
    return abs(_shoelace(pts))


def swept_volume(traj, model, check=True):
    """Swept soil volume: area of tip quadrilateral (entry, penetration end,
    drag end, exit) times bucket width."""
    idx = [traj.index(n) for n in ("entry", "penetration_end", "drag_end", "exit")]
    _, p = tip_frame(model, traj.keypoints[idx])
    return quadrilateral_area(*p, check=check) * model.bucket.width


def direction_halfplane_residual(v, n):
    """``v . n``: negative when ``v`` lies in the half-plane opposite ``n``."""
    return np.sum(np.asarray(v, dtype=float) * np.asarray(n, dtype=float), axis=-1)


def cone_normals(axis, half_angle):
    """Two half-plane normals whose intersection is the cone ``|angle(v, axis)| < half_angle``."""
    axis = np.asarray(axis, dtype=float)
    return (
        rot2(half_angle + np.pi / 2) @ axis,
        rot2(-half_angle - np.pi / 2) @ axis,
    )


def heading_direction(q, model):
    """Tooth direction ``R(q) d_h^B`` in the base frame."""
    phi, _ = tip_frame(model, q)
    return np.einsum("...ij,j->...i", rot2(phi), model.bucket.tooth_direction)


def translation_direction(p_i, p_next):
    """Tip displacement between consecutive keypoints (unnormalised)."""
    d = np.asarray(p_next, dtype=float) - np.asarray(p_i, dtype=float)
    if np.linalg.norm(d) < 1e-9:
        raise DegenerateGeometryError("consecutive keypoints share a tip position")
    return d


def monotonic_direction_residuals(traj, model, rotation_sign=1):
    """Residuals ``d_{i+1} . R90 d_i`` for headings and for translations.

    Returns ``(heading, translation)`` arrays of lengths ``n - 1`` and
    ``n - 2`` for ``n`` keypoints.
    """
    r90 = rot2(rotation_sign * np.pi / 2)
    heads = heading_direction(traj.keypoints, model)
    _, tips = tip_frame(model, traj.keypoints)
    moves = np.array([translation_direction(tips[i], tips[i + 1]) for i in range(len(tips) - 1)])
    h = np.sum(heads[1:] * (heads[:-1] @ r90.T), axis=-1)
    t = np.sum(moves[1:] * (moves[:-1] @ r90.T), axis=-1)
    return h, t


def limit_residuals(dense, torques, model, limits=None):
    """Per-waypoint, per-joint ``qd^2 - v_max^2`` and ``tau^2 - tau_max^2``.

    Both arrays cover the articulated joints and have shape ``(n_waypoints, 3)``.
    """
    v_max, t_max = (model.joint_velocity_limits, model.joint_torque_limits) if limits is None else limits
    vel = dense.qd[:, 1:4] ** 2 - np.asarray(v_max)[1:4] ** 2
    tau = np.asarray(torques)[:, 1:4] ** 2 - np.asarray(t_max)[1:4] ** 2
    return vel, tau


_JOINTS = ("boom", "stick", "bucket")


def evaluate_all(traj, spec, model, terrain, soil, n_elements=40, counts=None, roll=None):
    """Evaluate every excavation constraint on ``traj``.

    ``counts`` freezes the dense waypoint layout; ``roll`` reuses an existing
    rollout of the same trajectory.
    """
    if roll is None:
        roll = rollout(traj, model, terrain, soil, n_elements, counts)
    names, vals, eq, scales = [], [], [], []

    def add(name, value, scale=1.0, equality=False):
        names.append(name)
        vals.append(float(value))
        eq.append(equality)
        scales.append(scale)

    ia, ib, ic, id_ = (traj.index(n) for n in ("entry", "penetration_end", "drag_end", "exit"))
    pose = forward_kinematics(model, traj.keypoints)
    tips = pose.position
    volume = swept_volume(traj, model)
    add("SweptVolumeCstr", spec.volume_min - volume)
    add("SweptVolumeMaxCstr", volume - spec.volume_max)

    depth = depth_below_surface(terrain, tips)
    z1, z2 = spec.depth_window
    for label, i in (("penetration_end", ib), ("drag_end", ic)):
        add(f"DepthCstr[{label},min]", z1 - depth[i])
        add(f"DepthCstr[{label},max]", depth[i] - z2)
    add("EntrySurfaceCstr", depth[ia], equality=True)
    add("ExitSurfaceCstr", depth[id_], equality=True)

    heads = heading_direction(traj.keypoints, model)
    n_entry = surface_normal(terrain, tips[ia, 0])
    for j, n in enumerate(cone_normals(-n_entry, spec.entry_cone_half_angle)):
        add(f"EHDirCstr[{j}]", direction_halfplane_residual(heads[ia], n))
    add("PTDirCstr", direction_halfplane_residual(tips[ib] - tips[ia], n_entry))
    lift_normals = cone_normals(np.array([0.0, 1.0]), spec.lift_cone_half_angle)
    for i, label in enumerate(traj.labels):
        if label == "lift_end":
            for j, n in enumerate(lift_normals):
                add(f"LHDirCstr[{i},{j}]", direction_halfplane_residual(heads[i], n))

    h_mono, t_mono = monotonic_direction_residuals(traj, model, spec.rotation_sign)
    for i, r in enumerate(h_mono):
        add(f"HDirMonoCstr[{i}]", r)
    for i, r in enumerate(t_mono):
        tag = "PDR" if i + 2 <= id_ else "L"
        add(f"TDirMonoCstr{tag}[{i}]", r)

    dense = roll.dense
    limits = spec.limits(model)
    vel, tau = limit_residuals(dense, roll.tau, model, limits)
    starts = np.concatenate([[0], np.cumsum(dense.counts)[:-1]])
    vel_seg = np.maximum.reduceat(vel, starts, axis=0)
    tau_seg = np.maximum.reduceat(tau, starts, axis=0)
    for s in range(len(starts)):
        for j, joint in enumerate(_JOINTS):
            add(f"JointVelCstr[{s},{joint}]", vel_seg[s, j], 1.0 / limits[0][j + 1] ** 2)
    for s in range(len(starts)):
        for j, joint in enumerate(_JOINTS):
            add(f"JointTorqueCstr[{s},{joint}]", tau_seg[s, j], 1.0 / limits[1][j + 1] ** 2)
    for i, T in enumerate(traj.intervals):
        add(f"IntervalCstr[{i}]", spec.min_interval - T)
    if spec.boundary_velocity_pins:
        for end, row in (("start", 0), ("end", -1)):
            for j, joint in enumerate(_JOINTS):
                add(f"BoundaryVelCstr[{end},{joint}]", dense.qd[row, j + 1], equality=True)

    return ConstraintReport(
        names=tuple(names),
        values=np.array(vals),
        equality=np.array(eq, dtype=bool),
        scales=np.array(scales),
        info={
            "swept_volume_m3": volume,
            "max_tip_depth_m": float(np.max(depth_below_surface(terrain, forward_kinematics(model, dense.q).position))),
            "duration_s": traj.duration,
        },
    )
