from fractions import Fraction as Fr

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from predseq.errors import ConfigError, SizeError
from predseq.fpl import (
    PerturbedLeader, SignPerturbation, bruteforce_minmax, gap_event, l1_closed_form,
    minmax_objective, rademacher_complexity, simplex_closed_form, calibrate_perturbation,
)


def fr(*vals):
    return np.array([Fr(v) for v in vals], dtype=object)


def test_l1_vertex_by_hand():
    R, M = fr(3, 1), fr(0, 0)
    f = l1_closed_form(R, M, Fr(1))
    assert list(f) == [-1, 0]
    assert minmax_objective(f, R, M, Fr(1)) == 3
    _, best = bruteforce_minmax(R, M, Fr(1))
    assert best == 3


def test_l1_moves_along_a_confident_hint():
    # |M[i*]| exceeds sigma plus the lean along j*, so the move follows the hint
    f = l1_closed_form(fr(0, 5), fr(3, 0), Fr(1, 2))
    assert list(f) == [-1, 0]


def test_simplex_vertex_by_hand():
    R = np.array([1.0, 2.0, 0.0])
    np.testing.assert_array_equal(simplex_closed_form(R, np.array([0.0, 0.0, 5.0]), 1.0), [1, 0, 0])
    np.testing.assert_array_equal(simplex_closed_form(R, np.array([0.0, 0.0, 1.0]), 1.0), [0, 0, 1])


def test_gap_event_threshold():
    R = np.array([5.0, -1.0, 0.0])
    assert gap_event(R, 1.0)
    assert not gap_event(R, 1.01)
    assert gap_event(np.array([2.0]), 10.0)


def test_bruteforce_limits():
    with pytest.raises(SizeError):
        bruteforce_minmax([0] * 7, [0] * 7, 1)
    with pytest.raises(ConfigError):
        bruteforce_minmax([0], [0], 1, geometry="simplex")


quarter = st.integers(-24, 24).map(lambda k: Fr(k, 4))


@settings(deadline=None, max_examples=150)
@given(st.lists(quarter, min_size=3, max_size=3), st.lists(st.integers(-4, 4).map(lambda k: Fr(k, 4)),
       min_size=3, max_size=3), st.integers(1, 4).map(lambda k: Fr(k, 4)))
def test_closed_form_is_optimal_under_gap(R, M, sigma):
    R, M = np.array(R, dtype=object), np.array(M, dtype=object)
    f = l1_closed_form(R, M, sigma)
    _, best = bruteforce_minmax(R, M, sigma)
    value = minmax_objective(f, R, M, sigma)
    assert value >= best
    if gap_event(R, sigma):
        assert value == best


@given(st.lists(quarter, min_size=4, max_size=4), st.lists(quarter, min_size=4, max_size=4),
       st.integers(-1000, 1000))
def test_simplex_vertex_ignores_common_shifts(R, M, B):
    R, M = np.array(R, dtype=object), np.array(M, dtype=object)
    np.testing.assert_array_equal(simplex_closed_form(R, M, Fr(1, 4)),
                                  simplex_closed_form(R + B, M, Fr(1, 4)))


def test_calibration_picks_four_in_two_dims():
    rep = calibrate_perturbation(SignPerturbation(), 2, rng=np.random.default_rng(0))
    assert rep.constant == 4
    assert not rep.passed[2]


def test_calibration_size_limit():
    with pytest.raises(SizeError):
        calibrate_perturbation(dim=11)


def test_leader_without_noise_leans_against_the_hint():
    L = PerturbedLeader("l1", 2, np.zeros(3), constant=4)
    np.testing.assert_array_equal(L.decide(np.array([0.0, 0.5])), [0, -1])
    L.observe(np.array([-1.0, 0.0]))
    # the move sign follows the hint, not the totals; a zero hint makes every vertex tie
    np.testing.assert_array_equal(L.decide(np.array([0.25, 0.0])), [-1, 0])
    L.observe(np.zeros(2))
    L.decide()
    L.observe(np.zeros(2))
    with pytest.raises(ConfigError):
        L.decide()


def test_leader_config_errors():
    with pytest.raises(ConfigError):
        PerturbedLeader("l2", 2, [0.1])
    with pytest.raises(ConfigError):
        PerturbedLeader("l1", 2, [0.1], constant=1)
    with pytest.raises(ConfigError):
        PerturbedLeader("l1", 2, [-0.1], constant=4)


def test_batched_leader_gives_vertices():
    L = PerturbedLeader("simplex", 3, np.full(10, 0.2), constant=4, batch=(5,),
                        rng=np.random.default_rng(0))
    for _ in range(10):
        f = L.decide(np.zeros((5, 3)))
        assert f.shape == (5, 3)
        np.testing.assert_array_equal(f.sum(axis=1), np.ones(5))
        L.observe(np.full((5, 3), 0.1))


def test_rademacher_complexity_without_noise():
    assert rademacher_complexity(np.zeros(5), 3, 4)[0] == 0.0
    mean, se = rademacher_complexity(np.ones(1), 3, 4)
    assert mean == 4.0 and se == 0.0
