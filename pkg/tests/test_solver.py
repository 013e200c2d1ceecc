from dataclasses import dataclass

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from excavtraj.constraints import ConstraintSpec
from excavtraj.seed import SeedError, TaskSpec, seed_trajectory
from excavtraj.soil import TerrainProfile
from excavtraj.solver import (
    EvaluationError,
    Evaluation,
    ExcavationProblem,
    SolverConfig,
    finite_difference_jacobian,
    optimize,
    sqp_solve,
)
from excavtraj.kinematics import forward_kinematics
from conftest import SOFT
from oracles import default_model

MODEL = default_model()
FLAT = TerrainProfile.flat()
SPEC = ConstraintSpec()


@dataclass
class Toy:
    """min (x - a)^2 subject to x <= b, written in the solver's problem protocol."""

    a: float = 1.0
    b: float = 0.5
    lower: float = -np.inf
    upper: float = np.inf
    fd_steps: float = 1e-4

    def freeze(self, x):
        return None

    def evaluate(self, x, frozen=None):
        return Evaluation(np.array([x[0] - self.a]), np.array([x[0] - self.b]),
                          np.array([False]), np.array([1.0]))


def test_toy_problem_reaches_active_bound():
    rep = sqp_solve(Toy(), [0.0], SolverConfig(trust_region_init=1.0))
    assert rep.status == "converged"
    assert rep.x[0] == pytest.approx(0.5, abs=1e-6)


def test_toy_problem_inactive_constraint():
    rep = sqp_solve(Toy(b=2.0), [0.0], SolverConfig(trust_region_init=0.2))
    assert rep.status == "converged"
    assert rep.x[0] == pytest.approx(1.0, abs=1e-6)


def test_toy_problem_respects_iteration_budget():
    rep = sqp_solve(Toy(), [-50.0], SolverConfig(trust_region_init=0.01, trust_region_max=0.01), max_iterations=3)
    assert rep.status == "max_iterations"
    assert sum(r.iteration > 0 for r in rep.history) == 3


def test_fd_examples():
    J = finite_difference_jacobian(lambda x: x @ x, np.array([3.0]), 1e-3)
    assert J[0, 0] == pytest.approx(6.0, rel=1e-12)
    A = np.array([[1.0, -2.0, 0.5], [4.0, 0.0, 3.0]])
    J = finite_difference_jacobian(lambda x: A @ x, np.array([0.3, -1.0, 2.0]), 1e-2)
    np.testing.assert_allclose(J, A, atol=1e-12)


def test_fd_failure_is_wrapped():
    def f(x):
        if x[0] > 0.5:
            raise ValueError("out of domain")
        return x

    with pytest.raises(EvaluationError, match="variable 0"):
        finite_difference_jacobian(f, np.array([0.5]), 0.1)


@pytest.fixture(scope="module")
def problem():
    tr = seed_trajectory(SPEC, MODEL, FLAT, TaskSpec(target_depth=0.45))
    return ExcavationProblem(tr, SPEC, MODEL, FLAT, SOFT.smoothed(0.01), SolverConfig())


def test_pack_unpack_roundtrip(problem):
    x = problem.pack(problem.initial)
    assert x.size == 3 * 7 + 6
    back = problem.unpack(x)
    np.testing.assert_array_equal(back.keypoints, problem.initial.keypoints)
    np.testing.assert_array_equal(back.intervals, problem.initial.intervals)


def test_cost_gradient_step_halving(problem):
    x = problem.pack(problem.initial)
    frozen = problem.freeze(x)

    def cost(z):
        return np.array([problem.evaluate(z, frozen).cost])

    g1 = finite_difference_jacobian(cost, x, problem.fd_steps)[0]
    g2 = finite_difference_jacobian(cost, x, problem.fd_steps / 2)[0]
    assert np.linalg.norm(g1 - g2) <= 1e-3 * np.linalg.norm(g1)


def test_fixed_time_keeps_intervals():
    tr = seed_trajectory(SPEC, MODEL, FLAT, TaskSpec(target_depth=0.45))
    cfg = SolverConfig(time_variable=False, max_iterations=4, smoothing_schedule=(0.01,))
    rep = optimize(tr, SPEC, MODEL, FLAT, SOFT, cfg)
    np.testing.assert_array_equal(rep.trajectory.intervals, tr.intervals)
    assert rep.trajectory.keypoints[:, 0].tolist() == tr.keypoints[:, 0].tolist()


@pytest.fixture(scope="module")
def short_run():
    tr = seed_trajectory(SPEC, MODEL, FLAT, TaskSpec(target_depth=0.45))
    cfg = SolverConfig(max_iterations=10, smoothing_schedule=(0.01,))
    return tr, optimize(tr, SPEC, MODEL, FLAT, SOFT, cfg)


def test_short_run_does_not_worsen_merit(short_run):
    tr, rep = short_run
    last = [r for r in rep.history if r.stage == 1 and r.penalty == rep.history[-1].penalty]
    assert last[-1].merit <= last[0].merit
    assert rep.trajectory.intervals.min() >= SPEC.min_interval
    assert len(rep.constraint_names) == rep.history[-1].constraints.size


def test_merit_never_increases_on_accepted_steps(short_run):
    _, rep = short_run
    h = rep.history
    for prev, cur in zip(h, h[1:]):
        if cur.stage == prev.stage and cur.penalty == prev.penalty and cur.accepted and cur.iteration > 0:
            assert cur.merit <= prev.merit * (1 + 1e-12)


def test_history_iterations_are_increasing(short_run):
    _, rep = short_run
    its = [r.iteration for r in rep.history]
    assert its == sorted(its) and len(set(its)) == len(its)
    assert {r.stage for r in rep.history} == {0, 1}


def test_seed_tip_positions():
    tr = seed_trajectory(SPEC, MODEL, FLAT, TaskSpec(target_depth=0.5))
    pose = forward_kinematics(MODEL, tr.keypoints)
    np.testing.assert_allclose(pose.position[tr.index("entry")], [6.0, 0.0], atol=1e-9)
    np.testing.assert_allclose(pose.position[tr.index("drag_end")], [4.0, -0.5], atol=1e-9)
    assert tr.labels.count("rotation_mid") == 2
    np.testing.assert_array_equal(tr.intervals, 1.0)


def test_seed_unreachable_target():
    with pytest.raises(SeedError, match="entry"):
        seed_trajectory(SPEC, MODEL, FLAT, TaskSpec(dig_start_x=50.0, dig_end_x=4.0))


@given(st.floats(0.2, 0.8))
def test_seed_reaches_requested_depth(depth):
    tr = seed_trajectory(SPEC, MODEL, FLAT, TaskSpec(target_depth=depth))
    z = forward_kinematics(MODEL, tr.keypoints).position[:, 1]
    assert z.min() == pytest.approx(-depth, abs=1e-9)


@pytest.mark.parametrize(
    "kw",
    [
        {"trust_region_init": 0.0},
        {"shrink_factor": 1.5},
        {"grow_factor": 0.5},
        {"penalty_growth": 1.0},
        {"max_penalty_rounds": -1},
        {"smoothing_schedule": (0.01, -1.0)},
    ],
)
def test_config_validation(kw):
    with pytest.raises(ValueError):
        SolverConfig(**kw)


def test_config_dict_is_plain():
    d = SolverConfig(smoothing_schedule=[0.05, 0.01]).to_dict()
    assert d["smoothing_schedule_m_s"] == [0.05, 0.01]
    assert all(isinstance(v, (int, float, bool, list)) for v in d.values())
