import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gstar.measure import (AtomicMeasure, Ball, Cube, SampledFunction, ball_masses, check_power_bound,
                           has_small_boundary, is_doubling_cube, mass, maximal_function, variation)


def test_duplicates_merge_in_first_occurrence_order():
    mu = AtomicMeasure([[1.0], [0.0], [1.0]], [1.0, 2.0, 0.5])
    assert mu.points.ravel().tolist() == [1.0, 0.0]
    assert mu.weights.tolist() == [1.5, 2.0]


def test_signed_cancellation_drops_atom():
    nu = AtomicMeasure([[0.0], [0.0], [1.0]], [1.0, -1.0, 2.0], signed=True)
    assert nu.size == 1 and nu.total_variation == 2.0


@pytest.mark.parametrize("w", [[0.0], [-1.0], [np.nan]])
def test_unsigned_rejects_bad_weights(w):
    with pytest.raises(ValueError):
        AtomicMeasure([[0.0]], w)


def test_json_round_trip():
    nu = AtomicMeasure([[0.1, 0.2], [0.3, 0.4]], [1.0, -2.0], signed=True)
    back = AtomicMeasure.from_json(nu.to_json())
    assert back.signed and np.array_equal(back.points, nu.points)
    assert np.array_equal(back.weights, nu.weights)


def test_from_json_row_length_checked():
    with pytest.raises(ValueError):
        AtomicMeasure.from_json({"n": 2, "atoms": [[0.0, 1.0]]})


def test_cube_is_half_open_and_ball_closed():
    Q = Cube((0.5,), 1.0)
    assert Q.contains([[0.0], [0.999], [1.0]]).tolist() == [True, True, False]
    B = Ball((0.0,), 1.0)
    assert B.contains([[1.0], [-1.0], [1.0000001]]).tolist() == [True, True, False]


def test_mass_and_variation():
    nu = AtomicMeasure([[0.1], [0.2], [2.0]], [1.0, -3.0, 5.0], signed=True)
    Q = Cube((0.5,), 1.0)
    assert mass(nu, Q) == -2.0
    assert variation(nu, Q) == 4.0


def test_cube_distance_and_boundary():
    A, B = Cube((0.0, 0.0), 2.0), Cube((4.0, 5.0), 2.0)
    assert A.distance_to(B) == pytest.approx(np.sqrt(13.0))
    assert Cube((0.0,), 2.0).boundary_distance([[0.25], [3.0]]).tolist() == [0.75, 2.0]


@given(st.lists(st.floats(-5, 5), min_size=1, max_size=30), st.floats(0.01, 10))
@settings(max_examples=50)
def test_ball_masses_match_direct_count(xs, r):
    mu = AtomicMeasure(np.array(xs)[:, None], np.ones(len(xs)))
    direct = mass(mu, Ball((0.3,), r))
    assert ball_masses(mu, [0.3], [r])[0] == pytest.approx(direct)


def test_power_bound_on_lattice():
    h = 1.0 / 64
    mu = AtomicMeasure(((np.arange(64) + 0.5) * h)[:, None], np.full(64, h))
    rep = check_power_bound(mu, 1.0, samples=400, seed=1)
    # a ball of radius r holds at most 2r/h + 1 atoms of mass h
    assert rep.constant <= 2.0 + h / (h / 4)
    assert rep.samples_used == 400


def test_explicit_power_bound_samples():
    mu = AtomicMeasure([[0.0]], [3.0])
    rep = check_power_bound(mu, 1.0, samples=[((0.0,), 0.5), ((0.0,), 3.0)])
    assert rep.constant == 6.0 and rep.witness == ((0.0,), 0.5)


def test_doubling_and_small_boundary():
    mu = AtomicMeasure([[0.0], [0.9]], [1.0, 1.0])
    ok, ratio = is_doubling_cube(mu, Cube((0.0,), 1.0), 3.0, 1.5)
    assert not ok and ratio == 2.0
    assert has_small_boundary(mu, Cube((0.0,), 0.2), C=8.0)
    # an atom right on the boundary band fails for small xi
    assert not has_small_boundary(AtomicMeasure([[0.4999]], [1.0]), Cube((0.0,), 1.0), C=1.0)


def test_maximal_function_dominates_values():
    rng = np.random.default_rng(0)
    mu = AtomicMeasure(rng.uniform(0, 1, (40, 1)), rng.uniform(0.5, 1, 40))
    f = SampledFunction(mu, rng.standard_normal(40))
    M = maximal_function(mu, f, mu.points)
    # the smallest radius isolates each atom, so M f >= |f| there
    assert np.all(M >= np.abs(f.values) - 1e-12)


def test_sampled_function_algebra():
    mu = AtomicMeasure([[0.0], [1.0]], [1.0, 3.0])
    f = SampledFunction(mu, [2.0, -1.0])
    assert (2 * f).values.tolist() == [4.0, -2.0]
    assert f.integral() == -1.0
    assert f.lp_norm(2) == pytest.approx(np.sqrt(4 + 3))
    assert f.lp_norm(np.inf) == 2.0
    assert f.as_measure().weights.tolist() == [2.0, -3.0]
