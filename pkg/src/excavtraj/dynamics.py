"""Recursive Newton-Euler inverse dynamics for the planar boom/stick/bucket chain."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .kinematics import JointState, cross2, joint_positions, link_angles, perp, rot2

__all__ = [
    "ExternalWrench",
    "gravity_torques",
    "inverse_dynamics",
    "mass_matrix",
    "rnea",
]


@dataclass(frozen=True, eq=False)
class ExternalWrench:
    """Force the environment applies on the bucket, referred to the tip point.

    ``moment`` is the CCW moment about the tip; ``force`` uses base-frame axes.
    """

    force: np.ndarray = field(default_factory=lambda: np.zeros(2))
    moment: float = 0.0

    def as_array(self):
        f = np.asarray(self.force, dtype=float)
        return np.array([self.moment, f[0], f[1]])

    @classmethod
    def from_array(cls, w):
        w = np.asarray(w, dtype=float)
        return cls(force=w[1:3].copy(), moment=float(w[0]))


def rnea(model, q, qd, qdd, wrench=None):
    """Joint torques ``tau = M qdd + C qd + V - J^T R`` for batched states.

    ``q``, ``qd``, ``qdd`` have shape ``(..., 4)``; ``wrench`` has shape
    ``(..., 3)`` ordered ``(moment, f_x, f_z)``. The swing torque is
    reported as zero.
    """
    q = np.asarray(q, dtype=float)
    qd = np.asarray(qd, dtype=float)
    qdd = np.asarray(qdd, dtype=float)
    batch = np.broadcast_shapes(q.shape, qd.shape, qdd.shape)[:-1]

    omega = np.broadcast_to(np.cumsum(qd[..., 1:4], axis=-1), batch + (3,))
    alpha = np.broadcast_to(np.cumsum(qdd[..., 1:4], axis=-1), batch + (3,))
    pts = np.broadcast_to(joint_positions(model, q), batch + (4, 2))
    com = np.einsum("...kij,kj->...ki", rot2(link_angles(q)), model.link_com_offsets)
    com = np.broadcast_to(com, batch + (3, 2))

    # Gravity enters as an upward acceleration of the base.
    acc = np.zeros(batch + (2,))
    acc[..., 1] = model.gravity
    com_acc = []
    for i in range(3):
        w2 = omega[..., i, None] ** 2
        a = alpha[..., i, None]
        com_acc.append(acc + a * perp(com[..., i, :]) - w2 * com[..., i, :])
        r = pts[..., i + 1, :] - pts[..., i, :]
        acc = acc + a * perp(r) - w2 * r

    if wrench is None:
        f_next = np.zeros(batch + (2,))
        n_next = np.zeros(batch)
    else:
        wrench = np.broadcast_to(np.asarray(wrench, dtype=float), batch + (3,))
        f_next = -wrench[..., 1:3]
        n_next = -wrench[..., 0]

    tau = np.zeros(batch + (4,))
    for i in (2, 1, 0):
        c_world = pts[..., i, :] + com[..., i, :]
        f = model.link_masses[i] * com_acc[i] + f_next
        n = (
            model.link_inertias[i] * alpha[..., i]
            + n_next
            - cross2(pts[..., i, :] - c_world, f)
            + cross2(pts[..., i + 1, :] - c_world, f_next)
        )
        tau[..., i + 1] = n
        f_next, n_next = f, n
    return tau


def inverse_dynamics(model, state: JointState, wrench: ExternalWrench | None = None):
    """Torques realising ``state`` while the bucket receives ``wrench``."""
    w = None if wrench is None else wrench.as_array()
    return rnea(model, state.q, state.qd, state.qdd, w)


def gravity_torques(model, q):
    """Static holding torques ``V(q)``."""
    q = np.asarray(q, dtype=float)
    zero = np.zeros_like(q)
    return rnea(model, q, zero, zero)


def mass_matrix(model, q):
    """Articulated 3x3 mass matrix assembled from unit-acceleration probes."""
    q = np.asarray(q, dtype=float)
    zero = np.zeros(4)
    bias = rnea(model, q, zero, zero)
    probes = np.eye(4)[1:]
    cols = rnea(model, np.broadcast_to(q, (3, 4)), np.zeros((3, 4)), probes) - bias
    return cols[:, 1:].T
