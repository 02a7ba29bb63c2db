import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from carosac.config import default_config_path, load_rig_config
from carosac.errors import InvalidRig, NonConvergence, ParseError
from carosac.kinematics import (FkSolver, FkSolverConfig, GuessPolicy, RigGeometry, fk_residual,
                                forward_kinematics, inverse_kinematics, inverse_kinematics_batch,
                                least_squares_position)

SQRT24 = 4.898979485566356  # |(2, 2, -4)|

coord = st.floats(-1.0, 1.0, allow_nan=False)
workspace_point = st.tuples(st.floats(-2.0, 2.0), st.floats(-2.0, 2.0), st.floats(0.0, 2.0)).map(np.array)


def test_ik_symmetric_origin(symmetric_rig):
    L = inverse_kinematics(np.zeros(3), symmetric_rig)
    np.testing.assert_allclose(L, SQRT24, rtol=0, atol=1e-12)


def test_ik_zero_when_attachment_at_anchor(rig):
    p = rig.anchors[0] - rig.offsets[0]
    assert inverse_kinematics(p, rig)[0] == pytest.approx(0.0, abs=1e-12)


@given(st.tuples(coord, coord, coord), st.tuples(coord, coord, coord))
def test_ik_translation_invariance(p, shift):
    p, shift = np.array(p), np.array(shift)
    anchors = np.array([[2.0, 2.0, 4.0], [-2.0, 2.0, 4.0], [-2.0, -2.0, 4.0], [2.0, -2.0, 4.0]])
    offsets = np.full((4, 3), 0.05)
    box = (np.array([-1.0, -1.0, -1.0]), np.array([1.0, 1.0, 1.0]))
    a = RigGeometry(anchors, offsets, *box, (0.0, 10.0))
    b = RigGeometry(anchors + shift, offsets, box[0] + shift, box[1] + shift, (0.0, 10.0))
    np.testing.assert_allclose(inverse_kinematics(p, a), inverse_kinematics(p + shift, b), atol=1e-12)


@given(workspace_point, workspace_point)
def test_ik_is_one_lipschitz(p, q):
    from carosac.kinematics import default_rig
    rig = default_rig()
    gap = np.max(np.abs(inverse_kinematics(p, rig) - inverse_kinematics(q, rig)))
    assert gap <= np.linalg.norm(p - q) + 1e-12


def test_ik_batch_matches_single(rig):
    P = rig.sample_positions(np.random.default_rng(1), 20)
    np.testing.assert_array_equal(inverse_kinematics_batch(P, rig), [inverse_kinematics(p, rig) for p in P])


def test_residual_zero_at_solution(rig):
    p = np.array([0.3, -0.7, 1.2])
    assert fk_residual(p, inverse_kinematics(p, rig), rig) == pytest.approx(0.0, abs=1e-28)


def test_residual_hand_value(symmetric_rig):
    # four cables each 0.1 m longer than the straight distance: 4 * 0.1^2
    assert fk_residual(np.zeros(3), np.full(4, SQRT24 + 0.1), symmetric_rig) == pytest.approx(0.04, abs=1e-12)


@given(workspace_point, st.lists(st.floats(0.0, 10.0), min_size=4, max_size=4))
def test_residual_nonnegative(p, L):
    from carosac.kinematics import default_rig
    assert fk_residual(p, np.array(L), default_rig()) >= 0.0


def test_fk_symmetric_origin(symmetric_rig):
    p = forward_kinematics(np.full(4, SQRT24), symmetric_rig)
    assert np.linalg.norm(p) < 1e-6


def test_fk_round_trip_1000(rig):
    P = rig.sample_positions(np.random.default_rng(7), 1000)
    solver = FkSolver(rig)
    worst = max(np.linalg.norm(solver.solve(inverse_kinematics(p, rig)) - p) for p in P)
    assert worst < 1e-6


@settings(max_examples=50, deadline=None)
@given(workspace_point)
def test_fk_local_optimality(p):
    from carosac.kinematics import default_rig
    rig = default_rig()
    L = inverse_kinematics(p, rig) + 0.01  # inconsistent lengths: a non-zero minimum
    q, E, _ = least_squares_position(L, rig, rig.workspace_center)
    probes = q + np.random.default_rng(0).uniform(-0.01, 0.01, (20, 3))
    assert all(E <= fk_residual(x, L, rig) + 1e-15 for x in probes)


def test_fk_unreachable_lengths_raise(rig):
    with pytest.raises(NonConvergence):
        forward_kinematics(np.full(4, 0.1), rig)


def test_fk_nan_rejected(rig):
    with pytest.raises(NonConvergence):
        forward_kinematics(np.array([4.0, np.nan, 4.0, 4.0]), rig)


def test_fk_deterministic(rig):
    L = inverse_kinematics(np.array([0.5, 0.1, 0.9]), rig) + 0.003
    a, b = FkSolver(rig), FkSolver(rig)
    assert np.array_equal(a.best_fit(L)[0], b.best_fit(L)[0])


def test_solver_previous_solution_policy(rig):
    solver = FkSolver(rig, FkSolverConfig(initial_guess_policy=GuessPolicy.PREVIOUS_SOLUTION))
    p = np.array([1.5, -1.5, 0.3])
    solver.solve(inverse_kinematics(p, rig))
    np.testing.assert_allclose(solver.previous, p, atol=1e-9)
    solver.reset()
    assert solver.previous is None


def test_fk_config_validation():
    with pytest.raises(ValueError):
        FkSolverConfig(max_iterations=0)
    with pytest.raises(ValueError):
        FkSolverConfig(residual_tolerance=0.0)


def test_default_rig_is_statically_feasible(rig):
    """Every workspace corner lies inside the hull of the effective anchors."""
    eff = rig.anchors - rig.offsets
    for c in rig.corners():
        assert abs(c[0]) <= np.max(eff[:, 0]) and abs(c[1]) <= np.max(eff[:, 1])


def test_shipped_config_loads():
    rig = load_rig_config(default_config_path())
    assert rig.anchors.shape == (4, 3)
    np.testing.assert_array_equal(np.abs(rig.offsets[:, :2]), 0.05)
    np.testing.assert_array_equal(rig.workspace_min, [-2.0, -2.0, 0.0])
    np.testing.assert_array_equal(rig.workspace_max, [2.0, 2.0, 2.0])


def test_three_anchors_rejected(write_config):
    text = ("[rig]\nanchors = [[2.0, 2.0, 4.0], [-2.0, 2.0, 4.0], [-2.0, -2.0, 4.0]]\n"
            "offsets = [[0.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]]\n"
            "workspace = [[-1.0, -1.0, 0.0], [1.0, 1.0, 1.0]]\nlength_bounds = [1.0, 7.0]\n")
    with pytest.raises(InvalidRig, match="exactly 4 anchors"):
        load_rig_config(write_config(text))


def test_duplicate_anchors_rejected(write_config):
    text = ("[rig]\nanchors = [[2.0, 2.0, 4.0], [2.0, 2.0, 4.0], [-2.0, -2.0, 4.0], [2.0, -2.0, 4.0]]\n"
            "offsets = [[0.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]]\n"
            "workspace = [[-1.0, -1.0, 0.0], [1.0, 1.0, 1.0]]\nlength_bounds = [1.0, 7.0]\n")
    with pytest.raises(InvalidRig, match="pairwise distinct"):
        load_rig_config(write_config(text))


@pytest.mark.parametrize("mutation, message", [
    (lambda d: d.update(workspace_min=np.array([1.0, 0.0, 0.0]), workspace_max=np.array([0.0, 1.0, 1.0])),
     "workspace_min"),
    (lambda d: d.update(length_bounds=(3.0, 4.0)), "outside length_bounds"),
    (lambda d: d.update(workspace_max=np.array([1.0, 1.0, 5.0])), "above workspace_max"),
])
def test_invariant_violations_named(mutation, message):
    d = dict(anchors=np.array([[2.0, 2.0, 4.0], [-2.0, 2.0, 4.0], [-2.0, -2.0, 4.0], [2.0, -2.0, 4.0]]),
             offsets=np.zeros((4, 3)), workspace_min=np.array([-1.0, -1.0, 0.0]),
             workspace_max=np.array([1.0, 1.0, 1.0]), length_bounds=(1.0, 7.0))
    mutation(d)
    with pytest.raises(InvalidRig, match=message):
        RigGeometry(**d)


def test_parse_errors(write_config, tmp_path):
    with pytest.raises(ParseError):
        load_rig_config(tmp_path / "missing.toml")
    with pytest.raises(ParseError):
        load_rig_config(write_config("[rig\nanchors = 1"))
    with pytest.raises(ParseError):
        load_rig_config(write_config("[rig]\nanchors = []\n"))


def test_corner_lengths_within_bounds(rig):
    lo, hi = rig.length_bounds
    for c in rig.corners():
        L = inverse_kinematics(c, rig)
        assert np.all(L >= lo) and np.all(L <= hi)
    assert math.isclose(rig.workspace_diagonal, math.sqrt(4 ** 2 + 4 ** 2 + 2 ** 2))
