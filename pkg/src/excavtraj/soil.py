"""Bucket-soil resistance: terrain queries, per-element forces and the resultant wrench.

The bucket is a pair of flat plates (separation and back plane). Each plate
is cut into elements; a submerged element feels a normal force driven by
hydrostatic pressure plus a velocity term, and a Coulomb-like friction force
along the plate. Element forces are summed into a wrench at the bucket tip.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .kinematics import JointState, body_twist, cross2, perp, rot2, tip_frame

__all__ = [
    "SoilParams",
    "SoilWrench",
    "TerrainProfile",
    "VELOCITY_EPS",
    "bucket_soil_wrench",
    "depth_below_surface",
    "element_friction_force",
    "element_normal_force",
    "soil_wrench",
    "surface_normal",
]

#: Regularisation (m/s) of the velocity direction in the force laws.
VELOCITY_EPS = 1e-6


@dataclass(frozen=True)
class SoilParams:
    rho: float
    k_p: float
    k_v: float
    k_s: float
    gravity: float = 9.81
    velocity_eps: float = VELOCITY_EPS

    def __post_init__(self):
        if not self.rho > 0:
            raise ValueError("soil density rho must be positive")
        for name in ("k_p", "k_v", "k_s"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"soil coefficient {name} must be non-negative")
        if not self.gravity > 0:
            raise ValueError("gravity must be positive")
        if not self.velocity_eps > 0:
            raise ValueError("velocity_eps must be positive")

    def smoothed(self, velocity_eps):
        return replace(self, velocity_eps=velocity_eps)

    def to_dict(self):
        return {
            "rho_kg_m3": float(self.rho),
            "k_p": float(self.k_p),
            "k_v_N_s_m3": float(self.k_v),
            "k_s": float(self.k_s),
            "gravity_m_s2": float(self.gravity),
            "velocity_eps_m_s": float(self.velocity_eps),
        }


@dataclass(frozen=True, eq=False)
class TerrainProfile:
    """Piecewise-linear surface ``z(x)``, flat beyond the sampled range."""

    x: np.ndarray
    z: np.ndarray

    def __post_init__(self):
        x = np.array(self.x, dtype=float).reshape(-1)
        z = np.array(self.z, dtype=float).reshape(-1)
        if x.size < 2 or x.shape != z.shape:
            raise ValueError("terrain needs at least two (x, z) samples of equal length")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(z))):
            raise ValueError("terrain samples must be finite")
        if np.any(np.diff(x) <= 0):
            raise ValueError("terrain x samples must be strictly increasing")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "z", z)
        d = np.stack([np.diff(x), np.diff(z)], -1)
        seg_n = perp(d / np.linalg.norm(d, axis=-1, keepdims=True))
        flat = np.array([[0.0, 1.0]])
        object.__setattr__(self, "_normals", np.concatenate([flat, seg_n, flat]))

    @classmethod
    def flat(cls, height=0.0, x_min=-20.0, x_max=20.0):
        return cls(x=[x_min, x_max], z=[height, height])

    def height(self, x):
        return np.interp(x, self.x, self.z)

    def to_dict(self):
        return {"x_m": self.x.tolist(), "z_m": self.z.tolist()}


@dataclass(frozen=True, eq=False)
class SoilWrench:
    force: np.ndarray
    moment: float

    def as_array(self):
        return np.array([self.moment, self.force[0], self.force[1]])


def depth_below_surface(terrain, p):
    """Depth ``h = z_surface(x) - z``; negative above ground."""
    p = np.asarray(p, dtype=float)
    return terrain.height(p[..., 0]) - p[..., 1]


def surface_normal(terrain, x):
    """Outward unit surface normal at ``x``; bisector at sample kinks."""
    x = np.asarray(x, dtype=float)
    idx = np.searchsorted(terrain.x, x, side="right")
    n = terrain._normals[idx]
    at_kink = np.isin(x, terrain.x)
    if np.any(at_kink):
        b = terrain._normals[idx - 1] + terrain._normals[idx]
        b = b / np.linalg.norm(b, axis=-1, keepdims=True)
        n = np.where(at_kink[..., None], b, n)
    return n


def element_normal_force(P, v_n, S, soil):
    """Normal resistance ``-(K_p P + K_v |v_n|) S v_n / |v_n|`` (regularised)."""
    v_n = np.asarray(v_n, dtype=float)
    speed = np.linalg.norm(v_n, axis=-1, keepdims=True)
    mag = (soil.k_p * np.asarray(P)[..., None] + soil.k_v * speed) * np.asarray(S)[..., None]
    return -mag * v_n / (speed + soil.velocity_eps)


def element_friction_force(N, v_t, soil):
    """Friction ``-K_s |N| v_t / |v_t|`` opposing tangential sliding."""
    v_t = np.asarray(v_t, dtype=float)
    speed = np.linalg.norm(v_t, axis=-1, keepdims=True)
    n_mag = np.linalg.norm(N, axis=-1, keepdims=True)
    return -soil.k_s * n_mag * v_t / (speed + soil.velocity_eps)


def _plate_mesh(bucket, n_elements):
    t = np.linspace(0.0, 1.0, n_elements + 1)[:, None]
    nodes, normals, lengths = [], [], []
    for start, end in bucket.segments().values():
        nodes.append(start + t * (end - start))
        d = end - start
        normals.append(perp(d / np.linalg.norm(d)))
        lengths.append(np.linalg.norm(d) / n_elements)
    return np.stack(nodes), np.stack(normals), np.array(lengths)


def soil_wrench(model, terrain, q, qd, soil, n_elements=40, reference=None):
    """Batched soil wrench ``(moment, F_x, F_z)`` on the bucket.

    The moment is taken about the bucket tip unless ``reference`` (a world
    point, broadcastable to the batch) is given. Elements crossing the
    surface contribute only their submerged sub-segment.
    """
    if n_elements < 1:
        raise ValueError("n_elements must be at least 1")
    q = np.asarray(q, dtype=float)
    phi, tip = tip_frame(model, q)
    twist = body_twist(model, q, qd)
    nodes_b, normals_b, elem_len = _plate_mesh(model.bucket, n_elements)

    rot = rot2(phi)
    r_nodes = np.einsum("...ij,pkj->...pki", rot, nodes_b)
    world = tip[..., None, None, :] + r_nodes
    h = depth_below_surface(terrain, world)
    h0, h1 = h[..., :-1], h[..., 1:]
    with np.errstate(divide="ignore", invalid="ignore"):
        cross_t = np.clip(np.where(h0 != h1, h0 / (h0 - h1), 0.0), 0.0, 1.0)
    lo = np.where(h0 > 0, 0.0, cross_t)
    hi = np.where(h1 > 0, 1.0, cross_t)
    wet = (h0 > 0) | (h1 > 0)

    # The force direction flips where the normal or tangential velocity
    # changes sign. Both are affine along a plate, so the submerged part of
    # each element is cut there too and every piece has one sign.
    n_face = np.einsum("...ij,pj->...pi", rot, normals_b)[..., None, :]
    v_nodes = twist[..., None, None, 1:3] + twist[..., None, None, 0:1] * perp(r_nodes)
    cuts = []
    for s in (np.sum(v_nodes * n_face, axis=-1), cross2(n_face, v_nodes)):
        s0, s1 = s[..., :-1], s[..., 1:]
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(s0 != s1, s0 / (s0 - s1), 0.0)
        cuts.append(np.clip(t, lo, hi))
    bounds = np.concatenate([lo[..., None], np.sort(np.stack(cuts, -1), -1), hi[..., None]], -1)
    frac = np.where(wet[..., None], np.clip(np.diff(bounds, axis=-1), 0.0, 1.0), 0.0)
    mid = 0.5 * (bounds[..., :-1] + bounds[..., 1:])[..., None]
    r_c = r_nodes[..., :-1, None, :] + mid * (r_nodes[..., 1:, None, :] - r_nodes[..., :-1, None, :])

    area = frac * elem_len[:, None, None] * model.bucket.width
    depth_c = np.maximum(depth_below_surface(terrain, tip[..., None, None, None, :] + r_c), 0.0)
    pressure = soil.rho * soil.gravity * depth_c

    v = twist[..., None, None, None, 1:3] + twist[..., None, None, None, 0:1] * perp(r_c)
    n_face = n_face[..., None, :]
    vn = np.sum(v * n_face, axis=-1, keepdims=True) * n_face
    vt = v - vn
    N = element_normal_force(pressure, vn, area, soil)
    R = N + element_friction_force(N, vt, soil)

    force = R.sum(axis=(-4, -3, -2))
    if reference is None:
        moment = cross2(r_c, R).sum(axis=(-3, -2, -1))
    else:
        arm = tip[..., None, None, None, :] + r_c - np.asarray(reference, dtype=float)[..., None, None, None, :]
        moment = cross2(arm, R).sum(axis=(-3, -2, -1))
    return np.concatenate([moment[..., None], force], axis=-1)


def bucket_soil_wrench(model, terrain, state: JointState, soil, n_elements=40):
    """Resultant soil wrench at the bucket tip for a single joint state."""
    w = soil_wrench(model, terrain, state.q, state.qd, soil, n_elements)
    return SoilWrench(force=w[1:3], moment=float(w[0]))
