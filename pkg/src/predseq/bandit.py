"""Barrier-based bandit learners with one-point loss estimates.

The learner never sees the outcome vector.  A round is split in two:
``act()`` samples an eigen-direction of the barrier Hessian and returns the
point to play, ``observe(loss)`` takes the scalar loss of that point and
updates the barrier centre.  Loss oracles wrap the hidden outcome and answer
scalar queries only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, FeedbackError
from .geometry import Geometry, LogBarrierSimplex, as_vector, barrier_argmin


class LossOracle:
    """Scalar loss <f, x> for a hidden outcome x (one per replica)."""

    def __init__(self, x):
        self._x = as_vector(x)
        self.queries = 0

    def query(self, f) -> np.ndarray:
        self.queries += 1
        return np.einsum("...i,...i->...", np.asarray(f, dtype=float), self._x)


class ArmLossOracle:
    """Loss of a single arm, x[j], for a hidden loss vector x."""

    def __init__(self, x):
        self._x = as_vector(x)
        self.queries = 0

    def query(self, arm) -> np.ndarray:
        self.queries += 1
        arm = np.asarray(arm)
        return np.take_along_axis(self._x, arm[..., None], axis=-1)[..., 0]


@dataclass
class EstimateRecord:
    """Draw and estimate for one round; ``estimate`` is in barrier coordinates."""

    axis: np.ndarray
    sign: np.ndarray
    eigval: np.ndarray
    eigvec: np.ndarray
    loss: np.ndarray
    hint: np.ndarray
    estimate: np.ndarray
    hint_native: np.ndarray
    scale: int

    def rebuild(self, played) -> np.ndarray:
        """Recompute the estimate from the stored fields and the played point."""
        centred = self.loss - np.einsum("...i,...i->...", played, self.hint)
        step = self.scale * centred * self.sign * np.sqrt(self.eigval)
        return step[..., None] * self.eigvec + self.hint_native


class _Barriered:
    """Shared machinery: batch of barrier centres and Dikin sampling."""

    def _setup(self, barrier, eta, batch, rng):
        self.barrier = barrier
        self.n = barrier.native_dim
        self.dim = barrier.dim
        self.batch = tuple(batch)
        self.size = int(np.prod(self.batch, dtype=int))
        eta = np.broadcast_to(np.asarray(eta, dtype=float), self.batch).reshape(self.size).copy()
        if not np.all(eta > 0) or not np.all(np.isfinite(eta)):
            raise ConfigError("step size must be positive and finite")
        self.eta = eta
        self.rng = rng if rng is not None else np.random.default_rng()
        self.rounds = 0
        self._pending = None

    def _rows(self, a, scalar=False):
        shape = self.batch if scalar else self.batch + (a.shape[-1],)
        a = np.broadcast_to(a, shape)
        return a.reshape((self.size,) if scalar else (self.size, shape[-1])).copy()

    def _out(self, rows):
        return rows.reshape(self.batch + rows.shape[1:])

    def _eig(self):
        w, V = np.linalg.eigh(self.barrier.hessian(self.h))
        return w, V

    def _draw(self, draws):
        if draws is None:
            axis = self.rng.integers(self.n, size=self.size)
            sign = 2 * self.rng.integers(2, size=self.size) - 1
        else:
            axis, sign = draws
            axis = self._rows(np.asarray(axis, dtype=int), True)
            sign = self._rows(np.asarray(sign, dtype=int), True)
            if np.any((axis < 0) | (axis >= self.n)) or np.any(np.abs(sign) != 1):
                raise ConfigError("explicit draws need axis in [0, n) and sign in {-1, +1}")
        return axis, sign

    def _perturb(self, draws):
        """Sample (axis, sign) and return the perturbed native point."""
        w, V = self._eig()
        axis, sign = self._draw(draws)
        rows = np.arange(self.size)
        lam = w[rows, axis]
        vec = V[rows, :, axis]
        u = self.h + (sign / np.sqrt(lam))[:, None] * vec
        return axis, sign, lam, vec, u

    def dikin_points(self):
        """All 2n points h +- lambda_i^{-1/2} v_i at the current centre (ambient)."""
        w, V = self._eig()
        steps = V / np.sqrt(w)[:, None, :]
        pts = np.concatenate([self.h[:, None, :] + steps.transpose(0, 2, 1),
                              self.h[:, None, :] - steps.transpose(0, 2, 1)], axis=1)
        return self._out(self.barrier.lift(pts))

    @property
    def centre(self):
        return self._out(self.barrier.lift(self.h))


class Scrible(_Barriered):
    """SCRiBLe with an optional predictable process of hints.

    With all hints zero this is the plain algorithm.  ``n`` is the barrier's
    native dimension: ``d`` on a ball, ``d - 1`` on the simplex.
    """

    name = "scrible-hint"

    def __init__(self, geom: Geometry, eta, batch=(), rng=None, first_hint=None):
        reg = geom.regularizer
        if reg is None or not reg.is_barrier:
            raise ConfigError("SCRiBLe needs a self-concordant barrier")
        self.geom = geom
        self._setup(reg, eta, batch, rng)
        self.total = np.zeros((self.size, self.n))
        self.h = np.zeros((self.size, self.n))
        self.hint = np.zeros((self.size, self.dim))
        self._start(np.ones(self.size, bool), self._hint_rows(first_hint))

    def _hint_rows(self, hint):
        if hint is None:
            return np.zeros((self.size, self.dim))
        return self._rows(as_vector(hint))

    def _start(self, mask, hint):
        centre = np.tile(self.barrier.reduce(self.barrier.minimizer()), (int(mask.sum()), 1))
        theta = self.eta[mask, None] * self._native_dual(hint[mask])
        self.total[mask] = 0.0
        self.h[mask] = self.barrier.reduce(barrier_argmin(self.barrier, theta, centre))
        self.hint[mask] = hint[mask]

    def restart(self, mask=None, first_hint=None, eta=None):
        mask = np.ones(self.size, bool) if mask is None else self._rows(np.asarray(mask, bool), True)
        if eta is not None:
            self.eta = np.where(mask, self._rows(np.asarray(eta, float), True), self.eta)
        if mask.any():
            self._start(mask, self._hint_rows(first_hint))

    def _native_dual(self, v):
        return self.barrier.reduce_dual(v) if self.n != self.dim else v

    def act(self, draws=None) -> np.ndarray:
        axis, sign, lam, vec, u = self._perturb(draws)
        f = self.barrier.lift(u)
        self._pending = (axis, sign, lam, vec, f)
        return self._out(f)

    def estimate_for(self, draws, loss):
        """One-point estimate for given draws and scalar loss; no state change."""
        axis, sign, lam, vec, u = self._perturb(draws)
        f = self.barrier.lift(u)
        return self._estimate(sign, lam, vec, f, self._rows(np.asarray(loss, float), True))

    def _estimate(self, sign, lam, vec, f, loss):
        centred = loss - np.einsum("ij,ij->i", f, self.hint)
        return (self.n * centred * sign * np.sqrt(lam))[:, None] * vec + self._native_dual(self.hint)

    def observe(self, loss, next_hint=None) -> EstimateRecord:
        if self._pending is None:
            raise FeedbackError("observe() called before act()")
        loss = self._rows(np.asarray(loss, dtype=float), True)
        if not np.all(np.isfinite(loss)):
            raise FeedbackError("loss oracle returned a non-finite value")
        axis, sign, lam, vec, f = self._pending
        self._pending = None
        est = self._estimate(sign, lam, vec, f, loss)
        rec = EstimateRecord(self._out(axis), self._out(sign), self._out(lam), self._out(vec),
                             self._out(loss), self._out(self.hint), self._out(est),
                             self._out(self._native_dual(self.hint)), self.n)
        self.last_centred = loss - np.einsum("ij,ij->i", f, self.hint)
        nxt = self._hint_rows(next_hint)
        self.total += est
        theta = self.eta[:, None] * (self.total + self._native_dual(nxt))
        self.h = self.barrier.reduce(barrier_argmin(self.barrier, theta, self.barrier.lift(self.h)))
        self.hint = nxt
        self.rounds += 1
        return rec

    def play_round(self, oracle, next_hint=None, draws=None):
        f = self.act(draws)
        loss = oracle.query(f)
        return f, self.observe(loss, next_hint)

    def psi_increment(self) -> np.ndarray:
        """2 n^2 <f_t, x_t - M_t>^2 for the round just observed."""
        return self._out(2.0 * self.n**2 * self.last_centred**2)


def mab_step_limit(arms: int, s: float) -> float:
    return 1.0 / (4.0 * s * arms**2)


class ScribleMAB(_Barriered):
    """Multi-armed bandit via SCRiBLe on the first d-1 simplex coordinates.

    q_t = (f_t, 1 - sum f_t) is the arm distribution.  Losses must lie in
    [0, s].  The estimate is scaled by the barrier dimension d - 1, which
    keeps it unbiased for the reduced loss vector.
    """

    name = "scrible-mab"

    def __init__(self, arms: int, s: float = 1.0, eta=None, batch=(), rng=None):
        arms = int(arms)
        if arms < 1:
            raise ConfigError("need at least one arm")
        if s <= 0:
            raise ConfigError("loss range s must be positive")
        self.arms = arms
        self.s = float(s)
        if eta is None:
            eta = 1.0 / (8.0 * s * arms**2)
        if np.any(np.asarray(eta) >= mab_step_limit(arms, s)):
            raise ConfigError(f"MAB step size must be below 1/(4 s d^2) = {mab_step_limit(arms, s):.4g}")
        self._setup(LogBarrierSimplex(arms), eta, batch, rng)
        self.total = np.zeros((self.size, self.n))
        self.h = np.tile(self.barrier.reduce(self.barrier.minimizer()), (self.size, 1))
        self.q = np.full((self.size, arms), 1.0 / arms)

    def restart(self, mask=None):
        mask = np.ones(self.size, bool) if mask is None else self._rows(np.asarray(mask, bool), True)
        self.total[mask] = 0.0
        self.h[mask] = self.barrier.reduce(self.barrier.minimizer())

    @property
    def distribution(self) -> np.ndarray:
        return self._out(self.q)

    def act(self, draws=None, uniform=None):
        """Sample an arm; returns (arm index, distribution q_t)."""
        if self.n == 0:
            self.q = np.ones((self.size, 1))
            self._pending = ()
            return self._out(np.zeros(self.size, dtype=int)), self._out(self.q)
        axis, sign, lam, vec, u = self._perturb(draws)
        q = np.maximum(self.barrier.lift(u), 0.0)
        q /= q.sum(axis=1, keepdims=True)
        self.q = q
        if uniform is None:
            uniform = self.rng.random(self.size)
        else:
            uniform = self._rows(np.asarray(uniform, float), True)
        cdf = np.cumsum(q, axis=1)
        arm = np.minimum((cdf < uniform[:, None]).sum(axis=1), self.arms - 1)
        self._pending = (axis, sign, lam, vec)
        return self._out(arm), self._out(q)

    def observe(self, loss):
        if self._pending is None:
            raise FeedbackError("observe() called before act()")
        loss = self._rows(np.asarray(loss, dtype=float), True)
        if not np.all(np.isfinite(loss)) or np.any(loss < 0) or np.any(loss > self.s):
            raise FeedbackError(f"arm loss must lie in [0, {self.s}]")
        pending, self._pending = self._pending, None
        self.rounds += 1
        if self.n == 0:
            return None
        axis, sign, lam, vec = pending
        est = (self.n * loss * sign * np.sqrt(lam))[:, None] * vec
        self.total += est
        self.h = self.barrier.reduce(barrier_argmin(
            self.barrier, self.eta[:, None] * self.total, self.barrier.lift(self.h)))
        return self._out(est)

    def play_round(self, oracle, draws=None):
        arm, q = self.act(draws)
        loss = oracle.query(arm)
        self.observe(loss)
        return arm, loss


@dataclass
class BoundReport:
    lhs: float
    lhs_se: float
    rhs: float
    margin: float
    ok: bool


def mean_and_se(values):
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        return float(v.mean()) if v.size else 0.0, 0.0
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(v.size))


def small_loss_check(learner_loss, comparator_loss, comparator_reg, eta, n, s) -> BoundReport:
    """Monte Carlo check of E sum <f_t, x_t> <= (sum <f*, x_t> + R(f*)/eta) / (1 - 2 s n^2 eta).

    ``learner_loss`` holds one cumulative loss per replica; the comparator
    terms may be scalars or per-replica arrays.
    """
    factor = 1.0 - 2.0 * s * n**2 * eta
    if factor <= 0:
        raise ConfigError("step size too large for the small-loss bound")
    lhs, se = mean_and_se(learner_loss)
    rhs = float(np.mean((np.asarray(comparator_loss) + np.asarray(comparator_reg) / eta) / factor))
    margin = rhs + 3.0 * se - lhs
    return BoundReport(lhs, se, rhs, margin, margin >= 0)


def mab_small_loss_bound(arms: int, s: float, eta: float, horizon: int, best_loss: float = 0.0) -> float:
    """(best_loss + d log(dT) / eta) / (1 - 4 eta s d^2)."""
    factor = 1.0 - 4.0 * eta * s * arms**2
    if factor <= 0:
        raise ConfigError("step size outside the small-loss range")
    return (best_loss + arms * math.log(arms * horizon) / eta) / factor
