"""Keypoint trajectories with variable time intervals and their dense rollout."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dynamics import rnea
from .kinematics import forward_kinematics
from .soil import soil_wrench

__all__ = [
    "DenseTrajectory",
    "KeypointTrajectory",
    "PHASE_LABELS",
    "REQUIRED_LABELS",
    "Rollout",
    "interpolate",
    "rollout",
    "segment_counts",
    "tip_path",
    "torque_cost",
]

PHASE_LABELS = ("entry", "penetration_end", "drag_end", "rotation_mid", "exit", "lift_end")
REQUIRED_LABELS = ("entry", "penetration_end", "drag_end", "exit")


@dataclass(frozen=True, eq=False)
class KeypointTrajectory:
    """Joint-space keypoints joined by linear segments of duration ``intervals``."""

    keypoints: np.ndarray
    intervals: np.ndarray
    labels: tuple
    dt: float = 0.05

    def __post_init__(self):
        k = np.array(self.keypoints, dtype=float)
        T = np.array(self.intervals, dtype=float).reshape(-1)
        labels = tuple(self.labels)
        if k.ndim != 2 or k.shape[1] != 4 or k.shape[0] < 5:
            raise ValueError("keypoints must be an (n >= 5, 4) array")
        if T.shape != (k.shape[0] - 1,):
            raise ValueError("need exactly one interval per pair of consecutive keypoints")
        if not (np.all(np.isfinite(k)) and np.all(np.isfinite(T))):
            raise ValueError("keypoints and intervals must be finite")
        if np.any(T <= 0):
            raise ValueError("time intervals must be positive")
        if not 0 < self.dt <= T.min():
            raise ValueError("dt must be positive and no longer than the shortest interval")
        if len(labels) != k.shape[0]:
            raise ValueError("one phase label per keypoint is required")
        unknown = set(labels) - set(PHASE_LABELS)
        if unknown:
            raise ValueError(f"unknown phase labels: {sorted(unknown)}")
        pos = []
        for name in REQUIRED_LABELS:
            if labels.count(name) != 1:
                raise ValueError(f"label {name!r} must appear exactly once")
            pos.append(labels.index(name))
        if pos != sorted(pos):
            raise ValueError("entry, penetration_end, drag_end and exit must appear in order")
        object.__setattr__(self, "keypoints", k)
        object.__setattr__(self, "intervals", T)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "dt", float(self.dt))

    @property
    def duration(self):
        return float(self.intervals.sum())

    def index(self, label):
        return self.labels.index(label)

    def replace(self, keypoints=None, intervals=None):
        return KeypointTrajectory(
            keypoints=self.keypoints if keypoints is None else keypoints,
            intervals=self.intervals if intervals is None else intervals,
            labels=self.labels,
            dt=self.dt,
        )

    def to_dict(self):
        return {
            "dt_s": self.dt,
            "labels": list(self.labels),
            "keypoints_rad": [[float(v) for v in row] for row in self.keypoints],
            "intervals_s": [float(v) for v in self.intervals],
        }

    @classmethod
    def from_dict(cls, d, dt=None):
        return cls(
            keypoints=d["keypoints_rad"],
            intervals=d["intervals_s"],
            labels=d["labels"],
            dt=d.get("dt_s", dt) if dt is None else dt,
        )


@dataclass(frozen=True, eq=False)
class DenseTrajectory:
    """Uniformly interpolated waypoints with forward-difference derivatives.

    ``step[n]`` is the time step from waypoint ``n`` to ``n + 1`` and
    ``segment[n]`` the keypoint segment that owns waypoint ``n``; the last
    waypoint belongs to the last segment.
    """

    q: np.ndarray
    qd: np.ndarray
    qdd: np.ndarray
    t: np.ndarray
    step: np.ndarray
    segment: np.ndarray
    counts: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))

    @property
    def n_waypoints(self):
        return self.q.shape[0]


def segment_counts(traj):
    """Waypoint steps per segment, ``round(T_i / dt)``."""
    return np.floor(traj.intervals / traj.dt + 0.5).astype(int)


def interpolate(traj, counts=None):
    """Linear interpolation of ``traj`` at (roughly) ``dt`` spacing.

    ``counts`` overrides the per-segment step counts; the solver uses this to
    hold the waypoint layout fixed while differentiating.
    """
    Q = segment_counts(traj) if counts is None else np.asarray(counts, dtype=int)
    if Q.shape != traj.intervals.shape:
        raise ValueError("counts must match the number of segments")
    if np.any(Q < 2):
        bad = int(np.argmax(Q < 2))
        raise ValueError(
            f"segment {bad} has {Q[bad]} steps; interval {traj.intervals[bad]:.4g} s "
            f"is too short for dt = {traj.dt:.4g} s"
        )
    k = traj.keypoints
    qs, steps, segs, ts = [], [], [], []
    t0 = 0.0
    for i, n in enumerate(Q):
        frac = np.arange(n)[:, None] / n
        qs.append(k[i] + frac * (k[i + 1] - k[i]))
        h = traj.intervals[i] / n
        steps.append(np.full(n, h))
        segs.append(np.full(n, i))
        ts.append(t0 + h * np.arange(n))
        t0 += traj.intervals[i]
    qs.append(k[-1:])
    segs.append([len(Q) - 1])
    ts.append([t0])
    q = np.concatenate(qs)
    step = np.concatenate(steps)
    step = np.append(step, step[-1])

    qd = np.empty_like(q)
    qd[:-1] = np.diff(q, axis=0) / step[:-1, None]
    qd[-1] = qd[-2]
    qdd = np.empty_like(q)
    qdd[:-1] = np.diff(qd, axis=0) / step[:-1, None]
    qdd[-1] = qdd[-2]
    return DenseTrajectory(
        q=q,
        qd=qd,
        qdd=qdd,
        t=np.concatenate(ts),
        step=step,
        segment=np.concatenate(segs).astype(int),
        counts=Q,
    )


@dataclass(frozen=True, eq=False)
class Rollout:
    """Dense trajectory with soil wrench, torques and per-waypoint cost weights."""

    dense: DenseTrajectory
    wrench: np.ndarray
    tau: np.ndarray
    weights: np.ndarray

    @property
    def cost(self):
        return float(np.sum(self.weights * np.sum(self.tau[:, 1:] ** 2, axis=1)))


def rollout(traj, model, terrain, soil, n_elements=40, counts=None):
    """Interpolate ``traj`` and evaluate soil wrench and inverse dynamics per waypoint.

    Each waypoint of segment ``i`` is weighted by ``T_i / (Q_i dt)``: this is
    exactly 1 when ``T_i`` is a multiple of ``dt`` and otherwise makes the
    waypoint count vary continuously with the interval length.
    """
    dense = interpolate(traj, counts)
    wrench = soil_wrench(model, terrain, dense.q, dense.qd, soil, n_elements)
    tau = rnea(model, dense.q, dense.qd, dense.qdd, wrench)
    seg_weight = traj.intervals / (dense.counts * traj.dt)
    return Rollout(dense=dense, wrench=wrench, tau=tau, weights=seg_weight[dense.segment])


def torque_cost(traj, model, terrain, soil, n_elements=40):
    """Sum of squared articulated joint torques over all waypoints."""
    return rollout(traj, model, terrain, soil, n_elements).cost


def tip_path(dense, model):
    """Bucket-tip poses along a dense trajectory (batched ``PlanarPose``)."""
    return forward_kinematics(model, dense.q)
