"""Planar kinematics of the excavator arm.

All motion lives in the vertical excavation plane with coordinates ``(x, z)``:
``x`` points away from the cabin, ``z`` points up. Angles are measured
counter-clockwise in that plane. The swing joint ``theta0`` is frozen, so
only boom, stick and bucket (``q[1:4]``) move.

Twists and wrenches are planar 3-vectors ordered ``(angular, x, z)``. They
are referred to the bucket-tip point with axes parallel to the base frame,
which keeps ``J(q) qd`` directly comparable to finite differences of the
tip pose.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "BucketGeometry",
    "ExcavatorModel",
    "IKError",
    "JointState",
    "PlanarPose",
    "body_twist",
    "cross2",
    "forward_kinematics",
    "inverse_kinematics",
    "joint_positions",
    "perp",
    "point_velocity",
    "rot2",
    "spatial_jacobian",
    "tip_frame",
    "wrap_angle",
]


class IKError(ValueError):
    """Raised when a tip pose lies outside the arm's workspace."""


def wrap_angle(a):
    """Wrap angles into ``(-pi, pi]``."""
    return np.pi - np.mod(np.pi - np.asarray(a, dtype=float), 2.0 * np.pi)


def rot2(phi):
    """Rotation matrices for planar angles, shape ``(..., 2, 2)``."""
    phi = np.asarray(phi, dtype=float)
    c, s = np.cos(phi), np.sin(phi)
    return np.stack([np.stack([c, -s], -1), np.stack([s, c], -1)], -2)


def perp(v):
    """Rotate planar vectors by +90 degrees: ``(x, z) -> (-z, x)``."""
    v = np.asarray(v, dtype=float)
    return np.stack([-v[..., 1], v[..., 0]], -1)


def cross2(a, b):
    """Scalar planar cross product ``a_x b_z - a_z b_x`` (CCW positive)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def _as_vec(x, n, name):
    arr = np.array(x, dtype=float).reshape(-1)
    if arr.shape != (n,):
        raise ValueError(f"{name} must have {n} entries, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    return arr


@dataclass(frozen=True, eq=False)
class BucketGeometry:
    """Two-segment bucket profile expressed in the tip frame B.

    The separation plane starts at the tip and runs back along
    ``-tooth_direction``; the back plane continues from its far end, turning
    so the two segments enclose ``plane_angle``.
    """

    width: float = 1.0
    back_plane_length: float = 1.0
    separation_plane_length: float = 1.0
    plane_angle: float = np.pi / 2
    tooth_direction: np.ndarray = field(
        default_factory=lambda: np.array([np.sqrt(0.5), -np.sqrt(0.5)])
    )

    def __post_init__(self):
        d = _as_vec(self.tooth_direction, 2, "tooth_direction")
        if abs(np.linalg.norm(d) - 1.0) > 1e-9:
            raise ValueError("tooth_direction must have unit norm")
        object.__setattr__(self, "tooth_direction", d)
        if not self.width > 0:
            raise ValueError("bucket width must be positive")
        if not (self.back_plane_length > 0 and self.separation_plane_length > 0):
            raise ValueError("bucket plane lengths must be positive")
        if not 0 < self.plane_angle < np.pi:
            raise ValueError("plane_angle must lie in (0, pi)")

    def segments(self):
        """Endpoints ``{name: (start, end)}`` of both planes in frame B."""
        u_sep = -self.tooth_direction
        corner = self.separation_plane_length * u_sep
        u_back = rot2(np.pi - self.plane_angle) @ u_sep
        end = corner + self.back_plane_length * u_back
        return {
            "separation": (np.zeros(2), corner),
            "back": (corner, end),
        }

    def to_dict(self):
        return {
            "width_m": float(self.width),
            "back_plane_length_m": float(self.back_plane_length),
            "separation_plane_length_m": float(self.separation_plane_length),
            "plane_angle_deg": float(np.degrees(self.plane_angle)),
            "tooth_direction": [float(v) for v in self.tooth_direction],
        }


@dataclass(frozen=True, eq=False)
class ExcavatorModel:
    """Boom/stick/bucket chain with a frozen swing joint.

    Link ``i`` is attached at joint ``i``; its frame has its x-axis along the
    link toward the next joint (or the bucket tip). COM offsets are given in
    that frame, inertias about the COM.
    """

    link_lengths: np.ndarray
    link_masses: np.ndarray
    link_com_offsets: np.ndarray
    link_inertias: np.ndarray
    joint_velocity_limits: np.ndarray
    joint_torque_limits: np.ndarray
    bucket: BucketGeometry = field(default_factory=BucketGeometry)
    swing_angle: float = 0.0
    base_position: np.ndarray = field(default_factory=lambda: np.zeros(2))
    gravity: float = 9.81

    def __post_init__(self):
        set_ = lambda k, v: object.__setattr__(self, k, v)  # noqa: E731
        set_("link_lengths", _as_vec(self.link_lengths, 3, "link_lengths"))
        set_("link_masses", _as_vec(self.link_masses, 3, "link_masses"))
        set_("link_inertias", _as_vec(self.link_inertias, 3, "link_inertias"))
        com = np.array(self.link_com_offsets, dtype=float)
        if com.shape != (3, 2) or not np.all(np.isfinite(com)):
            raise ValueError("link_com_offsets must be a finite 3x2 array")
        set_("link_com_offsets", com)
        set_(
            "joint_velocity_limits",
            _as_vec(self.joint_velocity_limits, 4, "joint_velocity_limits"),
        )
        set_(
            "joint_torque_limits",
            _as_vec(self.joint_torque_limits, 4, "joint_torque_limits"),
        )
        set_("base_position", _as_vec(self.base_position, 2, "base_position"))
        for name in ("link_lengths", "link_masses", "link_inertias",
                     "joint_velocity_limits", "joint_torque_limits"):
            if np.any(getattr(self, name) <= 0):
                raise ValueError(f"{name} must be strictly positive")
        if not np.isfinite(self.swing_angle):
            raise ValueError("swing_angle must be finite")
        if not self.gravity >= 0:
            raise ValueError("gravity must be non-negative")

    @property
    def reach(self):
        return float(self.link_lengths.sum())

    def to_dict(self):
        return {
            "link_lengths_m": self.link_lengths.tolist(),
            "link_masses_kg": self.link_masses.tolist(),
            "link_com_offsets_m": self.link_com_offsets.tolist(),
            "link_inertias_kg_m2": self.link_inertias.tolist(),
            "joint_velocity_limits_rad_s": self.joint_velocity_limits.tolist(),
            "joint_torque_limits_N_m": self.joint_torque_limits.tolist(),
            "swing_angle_rad": float(self.swing_angle),
            "base_position_m": self.base_position.tolist(),
            "gravity_m_s2": float(self.gravity),
            "bucket": self.bucket.to_dict(),
        }


@dataclass(frozen=True)
class PlanarPose:
    """Bucket-tip pose in the base frame; ``rotation`` wrapped to (-pi, pi]."""

    rotation: float | np.ndarray
    position: np.ndarray


@dataclass(frozen=True, eq=False)
class JointState:
    q: np.ndarray
    qd: np.ndarray = field(default_factory=lambda: np.zeros(4))
    qdd: np.ndarray = field(default_factory=lambda: np.zeros(4))

    def __post_init__(self):
        for name in ("q", "qd", "qdd"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape[-1:] != (4,) or not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} must be finite with 4 joint entries")
            object.__setattr__(self, name, arr)


def link_angles(q):
    """Absolute angle of each articulated link, shape ``(..., 3)``."""
    q = np.asarray(q, dtype=float)
    return np.cumsum(q[..., 1:4], axis=-1)


def joint_positions(model, q):
    """Positions of boom pivot, stick pivot, bucket pivot and tip, ``(..., 4, 2)``."""
    phi = link_angles(q)
    steps = model.link_lengths[:, None] * np.stack([np.cos(phi), np.sin(phi)], -1)
    origin = np.broadcast_to(model.base_position, steps[..., :1, :].shape)
    return np.concatenate([origin, origin + np.cumsum(steps, axis=-2)], axis=-2)


def tip_frame(model, q):
    """Unwrapped bucket rotation and tip position (batched helper)."""
    return link_angles(q)[..., 2], joint_positions(model, q)[..., 3, :]


def forward_kinematics(model, q):
    """Bucket-tip pose ``g_B`` for joint angles ``q = [theta0..theta3]``."""
    phi, p = tip_frame(model, q)
    return PlanarPose(rotation=wrap_angle(phi), position=p)


def spatial_jacobian(model, q):
    """Map articulated joint rates to the tip twist ``(omega, v_x, v_z)``.

    Returns an array of shape ``(..., 3, 3)``; column ``k`` is the twist
    produced by a unit rate of joint ``k + 1``.
    """
    pts = joint_positions(model, q)
    arm = pts[..., 3:4, :] - pts[..., :3, :]
    lin = perp(arm)
    ang = np.ones(lin.shape[:-1])
    return np.concatenate([ang[..., None, :], np.swapaxes(lin, -1, -2)], axis=-2)


def body_twist(model, q, qd):
    """Tip twist ``J(q) qd`` for 4-joint rate vectors."""
    qd = np.asarray(qd, dtype=float)
    return np.einsum("...ij,...j->...i", spatial_jacobian(model, q), qd[..., 1:4])


def point_velocity(twist, r):
    """Velocity of a bucket-fixed point at offset ``r`` from the tip."""
    twist = np.asarray(twist, dtype=float)
    return twist[..., 1:3] + twist[..., 0:1] * perp(r)


def inverse_kinematics(model, position, rotation):
    """Joint angles placing the tip at ``position`` with bucket angle ``rotation``.

    Uses the boom-up branch (stick folded toward the ground, ``theta2 <= 0``).
    The returned ``theta3`` is not wrapped, so ``theta1 + theta2 + theta3``
    equals ``rotation`` exactly.
    """
    l1, l2, l3 = model.link_lengths
    p = np.asarray(position, dtype=float)
    wrist = p - l3 * np.array([np.cos(rotation), np.sin(rotation)])
    d = wrist - model.base_position
    cos2 = (d @ d - l1**2 - l2**2) / (2 * l1 * l2)
    if not -1.0 <= cos2 <= 1.0:
        raise IKError(
            f"tip pose at {p.tolist()} with rotation {rotation:.4f} rad is outside the workspace"
        )
    t2 = -np.arccos(cos2)
    t1 = np.arctan2(d[1], d[0]) - np.arctan2(l2 * np.sin(t2), l1 + l2 * np.cos(t2))
    t3 = rotation - t1 - t2
    return np.array([model.swing_angle, t1, t2, t3])
