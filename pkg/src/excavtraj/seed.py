"""Heuristic initial trajectories: a geometric dig path solved by planar IK."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kinematics import IKError, inverse_kinematics, wrap_angle
from .soil import surface_normal
from .trajectory import KeypointTrajectory

__all__ = ["SeedError", "TaskSpec", "seed_trajectory"]


class SeedError(RuntimeError):
    pass


@dataclass(frozen=True)
class TaskSpec:
    """Where and how deep to dig. ``dig_start_x`` is the far end (entry)."""

    dig_start_x: float = 6.0
    dig_end_x: float = 4.0
    target_depth: float = 0.5
    penetration_fraction: float = 0.25
    exit_run: float = 0.5
    lift_height: float = 1.5
    rotation_keypoints: int = 2
    interval: float = 1.0
    # Tooth-direction turn (deg, clockwise positive) relative to the entry heading.
    penetration_turn_deg: float = 20.0
    drag_turn_deg: float = 55.0
    exit_turn_deg: float = 155.0

    def __post_init__(self):
        if not self.dig_start_x > self.dig_end_x:
            raise ValueError("dig_start_x must exceed dig_end_x (digging toward the cabin)")
        if not self.target_depth > 0:
            raise ValueError("target_depth must be positive")
        if not 0 < self.penetration_fraction < 1:
            raise ValueError("penetration_fraction must lie in (0, 1)")
        if self.rotation_keypoints < 0:
            raise ValueError("rotation_keypoints must be non-negative")
        if not (self.interval > 0 and self.lift_height > 0 and self.exit_run > 0):
            raise ValueError("interval, lift_height and exit_run must be positive")

    def to_dict(self):
        return {
            "dig_start_x_m": float(self.dig_start_x),
            "dig_end_x_m": float(self.dig_end_x),
            "target_depth_m": float(self.target_depth),
            "penetration_fraction": float(self.penetration_fraction),
            "exit_run_m": float(self.exit_run),
            "lift_height_m": float(self.lift_height),
            "rotation_keypoints": int(self.rotation_keypoints),
            "interval_s": float(self.interval),
            "penetration_turn_deg": float(self.penetration_turn_deg),
            "drag_turn_deg": float(self.drag_turn_deg),
            "exit_turn_deg": float(self.exit_turn_deg),
        }


def _tip_targets(task, terrain):
    """Tip positions, tooth-direction angles (unwrapped) and labels of the dig path."""
    xs, xe = task.dig_start_x, task.dig_end_x
    a = np.array([xs, terrain.height(xs)])
    xb = xs - task.penetration_fraction * (xs - xe)
    b = np.array([xb, terrain.height(xb) - task.target_depth])
    c = np.array([xe, terrain.height(xe) - task.target_depth])
    xd = xe - task.exit_run
    d = np.array([xd, terrain.height(xd)])
    # Quadratic Bezier from c to d: leaves c horizontally, meets d vertically.
    ctrl = np.array([d[0], c[1]])
    m = task.rotation_keypoints
    s = np.arange(1, m + 1) / (m + 1)
    mids = ((1 - s) ** 2)[:, None] * c + (2 * s * (1 - s))[:, None] * ctrl + (s**2)[:, None] * d
    lift = d + np.array([0.0, task.lift_height])

    n = surface_normal(terrain, xs)
    h0 = np.arctan2(-n[1], -n[0])
    turn = np.radians(
        [0.0, task.penetration_turn_deg, task.drag_turn_deg]
        + list(np.linspace(task.drag_turn_deg, task.exit_turn_deg, m + 2)[1:-1])
        + [task.exit_turn_deg]
    )
    headings = np.concatenate([h0 - turn, [h0 - np.pi]])
    # Upright teeth at lift end, unwrapped to stay clockwise of the exit heading.
    headings[-1] = np.pi / 2 + 2 * np.pi * np.floor((headings[-2] - np.pi / 2) / (2 * np.pi))
    pts = np.vstack([a, b, c, *mids, d, lift])
    labels = ("entry", "penetration_end", "drag_end") + ("rotation_mid",) * m + ("exit", "lift_end")
    return pts, headings, labels


def seed_trajectory(spec, model, terrain, task, dt=0.05):
    """Initial keypoint trajectory for ``task`` with uniform intervals.

    ``spec`` is accepted for interface symmetry with the optimiser; the seed
    is built from geometry alone and may violate constraints.
    """
    pts, headings, labels = _tip_targets(task, terrain)
    beta = np.arctan2(model.bucket.tooth_direction[1], model.bucket.tooth_direction[0])
    rotations = headings - beta
    rotations = rotations + (wrap_angle(rotations[0]) - rotations[0])
    keypoints = []
    for i, (p, phi) in enumerate(zip(pts, rotations)):
        try:
            keypoints.append(inverse_kinematics(model, p, phi))
        except IKError as exc:
            raise SeedError(f"keypoint {i} ({labels[i]}): {exc}") from exc
    return KeypointTrajectory(
        keypoints=np.array(keypoints),
        intervals=np.full(len(keypoints) - 1, task.interval),
        labels=labels,
        dt=dt,
    )
