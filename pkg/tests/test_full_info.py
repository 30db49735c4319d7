import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from predseq.errors import ConfigError
from predseq.full_info import (
    LocalExpWeights, OptimisticFTRL, OptimisticMirrorDescent, barrier_comparator_bound, make_full_info,
)
from predseq.geometry import barrier_argmin, l2_geometry, simplex_geometry

ball = l2_geometry(2)
ball_barrier = l2_geometry(2, "logbarrier")


def play(learner, xs, hints):
    """hints[t] is M_{t+1}; returns total learner loss."""
    total = 0.0
    for x, nxt in zip(xs, hints):
        total += float(learner.decision @ x)
        learner.step(x, nxt)
    return total


def test_omd_two_rounds_by_hand():
    L = OptimisticMirrorDescent(ball, 0.5, first_hint=np.array([0.4, 0.0]))
    np.testing.assert_allclose(L.decision, [-0.2, 0.0])
    L.step(np.array([1.0, 0.0]), np.array([0.0, 1.0]))
    # g_1 = -0.5 x_1, f_2 = g_1 - 0.5 M_2
    np.testing.assert_allclose(L.secondary, [-0.5, 0.0])
    np.testing.assert_allclose(L.decision, [-0.5, -0.5])
    L.step(np.array([-2.0, 0.0]) / 2, None)
    np.testing.assert_allclose(L.secondary, [0.0, 0.0], atol=1e-15)


def test_omd_projects_when_leaving_the_ball():
    L = OptimisticMirrorDescent(ball, 10.0, first_hint=np.array([0.6, 0.8]))
    np.testing.assert_allclose(L.decision, [-0.6, -0.8])


def test_ew_local_is_softmax_of_cumulative_plus_hint():
    geom = simplex_geometry(3)
    L = LocalExpWeights(geom, 0.7, first_hint=np.array([1.0, 0.0, 0.0]))
    x = np.array([0.2, -0.4, 1.0])
    M = np.array([0.0, 0.5, 0.0])
    L.step(x, M)
    w = np.exp(-0.7 * (x + M))
    np.testing.assert_allclose(L.decision, w / w.sum(), atol=1e-15)


def test_oftrl_first_decision_is_barrier_minimizer_of_hint():
    M = np.array([0.3, -0.6])
    L = OptimisticFTRL(ball_barrier, 2.0, first_hint=M)
    f = barrier_argmin(ball_barrier.regularizer, 2.0 * M, np.zeros(2))
    np.testing.assert_allclose(L.decision, f, atol=1e-12)


def test_local_norm_on_simplex_is_weighted_variance():
    geom = simplex_geometry(2)
    L = LocalExpWeights(geom, 0.1)
    # uniform weights, deviation (1, -1): variance 1, raw second moment 1
    assert L.local_error_sq(np.array([1.0, -1.0]), np.zeros(2)) == pytest.approx(1.0)
    # constant shift leaves the centred value unchanged
    assert L.local_error_sq(np.array([1.0, 1.0]), np.zeros(2)) == pytest.approx(0.0)
    assert L.local_error_sq_uncentred(np.array([1.0, 1.0]), np.zeros(2)) == pytest.approx(1.0)


def test_precondition_monitor():
    L = OptimisticFTRL(ball_barrier, 1.0)
    # at the centre H = 2I, so the local dual norm of (1, 0) is 1/sqrt(2)
    assert L.local_error_sq(np.array([1.0, 0.0]), np.zeros(2)) == pytest.approx(0.5)
    assert not L.precondition_ok(np.array([1.0, 0.0]), np.zeros(2))
    assert L.precondition_ok(np.array([0.3, 0.0]), np.zeros(2))


def test_barrier_comparator_bound_is_theta_log_t():
    L = OptimisticFTRL(simplex_geometry(4, "logbarrier"), 1.0)
    assert barrier_comparator_bound(L, 100) == pytest.approx(4 * math.log(100))


@pytest.mark.parametrize("name,geom", [
    ("oftrl", simplex_geometry(3)),
    ("omd", l2_geometry(3, "logbarrier")),
    ("ew-local", l2_geometry(3)),
    ("nope", l2_geometry(3)),
])
def test_incompatible_geometry(name, geom):
    with pytest.raises(ConfigError):
        make_full_info(name, geom, 0.1)


def test_nonpositive_step_size():
    with pytest.raises(ConfigError):
        OptimisticMirrorDescent(ball, 0.0)


def test_batch_matches_individual_runs():
    rng = np.random.default_rng(3)
    xs = ball.outcome_set.project(rng.normal(size=(20, 3, 2)))
    for name, geom in (("omd", ball), ("oftrl", ball_barrier)):
        etas = np.array([0.1, 0.5, 1.0])
        batch = make_full_info(name, geom, etas, batch=(3,))
        singles = [make_full_info(name, geom, e) for e in etas]
        for t in range(19):
            batch.step(xs[t], xs[t + 1])
            for r, s in enumerate(singles):
                s.step(xs[t, r], xs[t + 1, r])
        for r, s in enumerate(singles):
            np.testing.assert_allclose(batch.decision[r], s.decision, atol=1e-10)


def test_restart_touches_only_masked_rows():
    L = OptimisticMirrorDescent(ball, np.array([0.5, 0.5]), batch=(2,))
    L.step(np.array([[1.0, 0.0], [0.0, 1.0]]), None)
    before = L.decision.copy()
    L.restart(np.array([True, False]), None, np.array([0.25, 9.0]))
    np.testing.assert_allclose(L.decision[0], [0, 0])
    np.testing.assert_allclose(L.decision[1], before[1])
    np.testing.assert_allclose(L.eta, [0.25, 0.5])


outcomes = arrays(float, (12, 3), elements=st.floats(-1, 1))
rates = st.floats(0.05, 2.0)


@settings(deadline=None, max_examples=40)
@given(outcomes, outcomes, rates)
def test_omd_regret_bound_per_sequence(xs, noise, eta):
    geom = simplex_geometry(3)
    hints = np.clip(xs + 0.3 * noise, -1, 1)
    L = OptimisticMirrorDescent(geom, eta, first_hint=hints[0])
    loss = play(L, xs, list(hints[1:]) + [None])
    regret = loss - geom.best_value(xs.sum(axis=0))
    err = np.abs(xs - hints).max(axis=1) ** 2
    assert regret <= geom.rmax_sq / eta + eta / 2 * err.sum() + 1e-9


@settings(deadline=None, max_examples=40)
@given(outcomes, rates)
def test_omd_with_exact_hints_pays_only_the_regularizer(xs, eta):
    geom = l2_geometry(3)
    xs = geom.outcome_set.project(xs)
    L = OptimisticMirrorDescent(geom, eta, first_hint=xs[0])
    loss = play(L, xs, list(xs[1:]) + [None])
    assert loss - geom.best_value(xs.sum(axis=0)) <= geom.rmax_sq / eta + 1e-9


@settings(deadline=None, max_examples=40)
@given(outcomes, outcomes, st.floats(0.01, 0.2))
def test_ew_local_bound_per_sequence(xs, noise, eta):
    geom = simplex_geometry(3)
    hints = np.clip(xs + 0.5 * noise, -1, 1)
    L = LocalExpWeights(geom, eta, first_hint=hints[0])
    loss, local = 0.0, 0.0
    for t in range(len(xs)):
        local += float(L.local_error_sq(xs[t], hints[t]))
        loss += float(L.decision @ xs[t])
        L.step(xs[t], hints[t + 1] if t + 1 < len(xs) else None)
    regret = loss - geom.best_value(xs.sum(axis=0))
    assert regret <= 2 * eta * local + math.log(3) / eta + 1e-9


@settings(deadline=None, max_examples=25)
@given(outcomes, outcomes, st.floats(0.05, 0.3))
def test_oftrl_bound_at_tightest_comparator(xs, noise, eta):
    geom = l2_geometry(3, "logbarrier")
    reg = geom.regularizer
    xs = geom.outcome_set.project(xs)
    hints = geom.outcome_set.project(xs + 0.2 * noise)
    L = OptimisticFTRL(geom, eta, first_hint=hints[0])
    loss, local, fired = 0.0, 0.0, False
    for t in range(len(xs)):
        local += float(L.local_error_sq(xs[t], hints[t]))
        fired |= not bool(L.precondition_ok(xs[t], hints[t]))
        loss += float(L.decision @ xs[t])
        L.step(xs[t], hints[t + 1] if t + 1 < len(xs) else None)
    if fired:
        return
    S = xs.sum(axis=0)
    star = barrier_argmin(reg, eta * S, np.zeros(3))
    gap = loss - star @ S - reg.value(star) / eta
    assert gap <= 2 * eta * local + 1e-9


@given(outcomes, outcomes)
def test_psi_increments_nonnegative(xs, hints):
    geom = simplex_geometry(3)
    for L in (OptimisticMirrorDescent(geom, 0.3), LocalExpWeights(geom, 0.3)):
        for x, M in zip(xs, hints):
            assert L.psi_increment(x, M) >= 0
            L.step(x, M)
