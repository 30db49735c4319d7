import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from predseq.errors import ConfigError, DomainError, InvalidVector, SolverError
from predseq.geometry import (
    HalfSqL2, LogBarrierBall, LogBarrierSimplex, NegEntropy, Norm, Simplex, UnitBall,
    as_vector, barrier_argmin, bregman, hessian_eigs, l1_geometry, l2_geometry, local_context,
    local_dual_norm, local_norm, make_geometry, mirror_argmin, newton_minimize, norm,
    project_simplex, simplex_geometry,
)

finite = st.floats(-5, 5, allow_nan=False, allow_infinity=False)


def vec(d):
    return arrays(float, d, elements=finite)


# -- oracles with closed-form values ---------------------------------------

def test_kl_between_two_point_distributions():
    f, g = np.array([0.5, 0.5]), np.array([0.25, 0.75])
    expect = 0.5 * math.log(0.5 / 0.25) + 0.5 * math.log(0.5 / 0.75)
    assert bregman(NegEntropy(2), f, g) == pytest.approx(expect, abs=1e-14)


def test_entropy_mirror_step_is_softmax():
    geom = simplex_geometry(2)
    out = mirror_argmin(geom, np.array([1.0, 0.0]), np.array([0.5, 0.5]))
    e = math.exp(1.0)
    np.testing.assert_allclose(out, [1 / (1 + e), e / (1 + e)], atol=1e-15)


def test_entropy_mirror_step_keeps_zero_weights_at_zero():
    geom = simplex_geometry(3)
    out = mirror_argmin(geom, np.array([0.3, -0.2, 1.0]), np.array([0.0, 0.4, 0.6]))
    assert out[0] == 0.0 and out.sum() == pytest.approx(1.0)


def test_ball_projection_of_diagonal_point():
    out = UnitBall(Norm.L2, 2).project(np.array([1.0, 1.0]))
    np.testing.assert_allclose(out, [1 / math.sqrt(2)] * 2, atol=1e-15)


def test_ball_barrier_minimizer_along_a_direction():
    # minimize t*a - log(1 - a^2) on (-1, 1): a = (1 - sqrt(1 + t^2)) / t
    for t in (1.0, 2.0, -7.5):
        f = barrier_argmin(LogBarrierBall(1), np.array([t]), np.zeros(1))
        assert f[0] == pytest.approx((1 - math.sqrt(1 + t * t)) / t, abs=1e-10)
    f = barrier_argmin(LogBarrierBall(2), np.array([1.0, 0.0]), np.zeros(2))
    np.testing.assert_allclose(f, [1 - math.sqrt(2), 0.0], atol=1e-10)


def test_simplex_barrier_centre_and_offset():
    reg = LogBarrierSimplex(3)
    np.testing.assert_allclose(barrier_argmin(reg, np.zeros(3), np.full(3, 1 / 3)), [1 / 3] * 3)
    assert reg.value(np.full(3, 1 / 3)) == pytest.approx(0.0, abs=1e-12)


def test_barrier_argmin_ignores_constant_shift_on_simplex():
    reg = LogBarrierSimplex(4)
    theta = np.array([0.3, -1.0, 2.0, 0.5])
    a = barrier_argmin(reg, theta, reg.minimizer())
    b = barrier_argmin(reg, theta + 7.0, reg.minimizer())
    np.testing.assert_allclose(a, b, atol=1e-10)


def test_local_dual_norm_of_identity_hessian():
    ctx = local_context(np.eye(3))
    assert local_dual_norm(ctx, np.array([0.0, 1.0, 0.0])) == pytest.approx(1.0)


def test_rmax_values():
    assert simplex_geometry(10).rmax_sq == pytest.approx(math.log(10))
    assert l2_geometry(4).rmax_sq == pytest.approx(0.5)
    assert simplex_geometry(4, "sq").rmax_sq == pytest.approx(0.5 - 0.5 / 4)


def test_best_response_per_geometry():
    S = np.array([3.0, -2.0, 1.0])
    f, v = simplex_geometry(3).best_response(S)
    np.testing.assert_array_equal(f, [0, 1, 0])
    assert v == -2.0
    f, v = l2_geometry(3).best_response(S)
    assert v == pytest.approx(-math.sqrt(14))
    f, v = l1_geometry(3).best_response(S)
    np.testing.assert_array_equal(f, [-1, 0, 0])
    assert v == -3.0


# -- errors -----------------------------------------------------------------

def test_non_finite_vector_rejected():
    with pytest.raises(InvalidVector):
        as_vector([1.0, np.nan])


def test_barrier_outside_domain():
    with pytest.raises(DomainError):
        LogBarrierBall(2).value(np.array([1.0, 0.0]))


def test_newton_iteration_cap_raises_with_decrement():
    with pytest.raises(SolverError) as info:
        newton_minimize(LogBarrierBall(2), np.array([50.0, 0.0]), np.zeros(2), max_iter=1)
    assert info.value.decrement is not None


def test_unknown_geometry_and_bad_pairs():
    with pytest.raises(ConfigError):
        make_geometry("torus", 3)
    with pytest.raises(ConfigError):
        make_geometry("l1", 3, "sq")
    with pytest.raises(ConfigError):
        mirror_argmin(l1_geometry(3), np.zeros(3), np.zeros(3))


def test_singular_hessian_rejected():
    with pytest.raises(DomainError):
        local_context(np.zeros((2, 2)))


# -- properties -------------------------------------------------------------

@given(vec(5))
def test_simplex_projection_lands_on_simplex(v):
    p = project_simplex(v)
    assert Simplex(5).contains(p)


@given(vec(4))
def test_simplex_projection_is_idempotent(v):
    p = project_simplex(v)
    np.testing.assert_allclose(project_simplex(p), p, atol=1e-12)


@given(vec(3), st.sampled_from(list(Norm)))
def test_ball_projection_inside_and_fixed_points(v, kind):
    ball = UnitBall(kind, 3)
    p = ball.project(v)
    assert ball.contains(p)
    np.testing.assert_allclose(ball.project(p), p, atol=1e-12)


@given(vec(4), vec(4))
def test_holder_inequality(a, b):
    for kind in Norm:
        assert abs(a @ b) <= norm(kind, a) * norm(kind.dual, b) + 1e-9


@given(arrays(float, 3, elements=st.floats(0.05, 1)), arrays(float, 3, elements=st.floats(0.05, 1)))
def test_bregman_nonnegative_and_zero_on_diagonal(a, b):
    f, g = a / a.sum(), b / b.sum()
    for reg in (NegEntropy(3), HalfSqL2(3)):
        assert bregman(reg, f, g) >= 0
        assert bregman(reg, f, f) == pytest.approx(0.0, abs=1e-12)


@settings(deadline=None)
@given(arrays(float, 3, elements=st.floats(-20, 20)))
def test_barrier_argmin_satisfies_first_order_condition(theta):
    reg = LogBarrierBall(3)
    f = barrier_argmin(reg, theta, np.zeros(3))
    assert reg.interior(f)
    np.testing.assert_allclose(reg.gradient(f), -theta, atol=1e-6 * (1 + np.abs(theta).max()))


@settings(deadline=None)
@given(arrays(float, 4, elements=st.floats(0.05, 1)), vec(3))
def test_local_norms_are_dual(a, g):
    reg = LogBarrierSimplex(4)
    ctx = hessian_eigs(reg, a / a.sum())
    np.testing.assert_allclose(ctx.reconstruct(), ctx.hessian, atol=1e-8 * np.abs(ctx.hessian).max())
    x = ctx.hessian @ g
    assert local_dual_norm(ctx, x) == pytest.approx(local_norm(ctx, g), rel=1e-6, abs=1e-9)


@given(vec(3))
def test_batched_projection_matches_rowwise(v):
    stack = np.stack([v, 2 * v, -v])
    np.testing.assert_allclose(project_simplex(stack), [project_simplex(r) for r in stack], atol=1e-12)


def test_newton_stops_at_the_precision_floor_near_the_boundary():
    # recorded from a long bandit run: huge linear term, warm start 1e-7 from the boundary
    reg = LogBarrierSimplex(4)
    theta = np.array([-7125512.368805855, -8755902.328421881, -11729045.267585514])
    warm = np.array([5.2360754987322788e-07, 9.9999906008749406e-01,
                     1.4794574573276796e-07, 2.6835921029810805e-07])
    u, dec, _ = newton_minimize(reg, theta, warm)
    assert u.min() > 0 and u.sum() == pytest.approx(1.0)
    # native stationarity: theta_i = 1/u_i - 1/u_last
    resid = theta - (1.0 / u[:3] - 1.0 / u[3])
    assert np.abs(resid).max() <= 1e-6 * np.abs(theta).max()
