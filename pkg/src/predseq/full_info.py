"""Full-information optimistic learners.

Each learner keeps a stack of ``B`` independent replicas (``batch`` may be
``()`` for a single run).  ``decision`` is the point to play this round;
``step(x, next_hint)`` reveals the outcome and the hint for the following
round and returns the next decision.  Step sizes may differ per replica.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ConfigError
from .geometry import (
    Geometry, LogBarrierBall, LogBarrierSimplex, Simplex, as_vector,
    barrier_argmin, mirror_argmin, norm,
)

PRECONDITION_LIMIT = 0.25


class OptimisticLearner:
    name = "abstract"

    def __init__(self, geom: Geometry, eta, batch=(), first_hint=None):
        self.geom = geom
        self.dim = geom.dim
        self.batch = tuple(batch)
        self.size = int(np.prod(self.batch, dtype=int))
        self._check_geometry()
        self.eta = self._as_rows(np.asarray(eta, dtype=float), scalar=True)
        if not np.all(self.eta > 0) or not np.all(np.isfinite(self.eta)):
            raise ConfigError("step size must be positive and finite")
        self.rounds = 0
        self._start(np.ones(self.size, dtype=bool), self._hint_rows(first_hint))

    # -- shape helpers -----------------------------------------------------
    def _as_rows(self, a, scalar=False):
        shape = self.batch if scalar else self.batch + (self.dim,)
        a = np.broadcast_to(a, shape)
        return a.reshape((self.size,) if scalar else (self.size, self.dim)).copy()

    def _hint_rows(self, hint):
        if hint is None:
            return np.zeros((self.size, self.dim))
        return self._as_rows(as_vector(hint))

    def _shape_out(self, rows):
        return rows.reshape(self.batch + rows.shape[1:])

    @property
    def decision(self) -> np.ndarray:
        return self._shape_out(self.f)

    # -- interface ---------------------------------------------------------
    def step(self, x, next_hint=None) -> np.ndarray:
        x = self._as_rows(as_vector(x))
        self._update(x, self._hint_rows(next_hint))
        self.rounds += 1
        return self.decision

    def restart(self, mask=None, first_hint=None, eta=None):
        """Cold restart of the selected replicas, optionally with a new eta."""
        mask = np.ones(self.size, bool) if mask is None else self._as_rows(np.asarray(mask, bool), True)
        if eta is not None:
            self.eta = np.where(mask, self._as_rows(np.asarray(eta, float), True), self.eta)
        if mask.any():
            self._start(mask, self._hint_rows(first_hint))

    def hint_error_sq(self, x, hint) -> np.ndarray:
        """||x - M||_*^2 in the geometry's dual norm."""
        return norm(self.geom.dual_norm, np.subtract(x, hint)) ** 2

    def local_error_sq(self, x, hint):
        """Local dual norm squared at the current decision (None if unused)."""
        return None

    def precondition_ok(self, x, hint) -> np.ndarray:
        return np.ones(self.batch, dtype=bool)

    def psi_increment(self, x, hint) -> np.ndarray:
        """Per-round variation increment used by the doubling wrapper."""
        raise NotImplementedError

    def _check_geometry(self):
        pass

    def _start(self, mask, hint):
        raise NotImplementedError

    def _update(self, x, next_hint):
        raise NotImplementedError


class OptimisticFTRL(OptimisticLearner):
    """f_{t+1} = argmin eta <f, S_t + M_{t+1}> + R(f) for a barrier R."""

    name = "oftrl"

    def _check_geometry(self):
        if not isinstance(self.geom.regularizer, (LogBarrierBall, LogBarrierSimplex)):
            raise ConfigError("optimistic FTRL needs a self-concordant barrier")
        self.barrier = self.geom.regularizer

    def _start(self, mask, hint):
        if not hasattr(self, "f"):
            self.total = np.zeros((self.size, self.dim))
            self.f = np.tile(self.barrier.minimizer(), (self.size, 1))
        self.total[mask] = 0.0
        centre = np.tile(self.barrier.minimizer(), (int(mask.sum()), 1))
        self.f[mask] = barrier_argmin(self.barrier, self.eta[mask, None] * hint[mask], centre)

    def _update(self, x, next_hint):
        self.total += x
        theta = self.eta[:, None] * (self.total + next_hint)
        self.f = barrier_argmin(self.barrier, theta, self.f)

    def local_error_sq(self, x, hint):
        v = self.barrier.reduce_dual(self._as_rows(np.subtract(x, hint)))
        H = self.barrier.hessian(self.f)
        sol = np.linalg.solve(H, v[..., None])[..., 0]
        return self._shape_out(np.einsum("ij,ij->i", v, sol))

    def precondition_ok(self, x, hint):
        lhs = self._shape_out(self.eta) * np.sqrt(self.local_error_sq(x, hint))
        return lhs < PRECONDITION_LIMIT

    def psi_increment(self, x, hint):
        return 2.0 * self.local_error_sq(x, hint)

    def regularizer_value(self, f):
        return self.barrier.value(f)


class OptimisticMirrorDescent(OptimisticLearner):
    """Two-step mirror descent: g moves with x_t, f leans toward M_{t+1}."""

    name = "omd"

    def _check_geometry(self):
        if self.geom.regularizer is None or self.geom.regularizer.strong_convexity is None:
            raise ConfigError("mirror descent needs a strongly convex regularizer")

    def _start(self, mask, hint):
        if not hasattr(self, "f"):
            self.g = np.tile(self.geom.regularizer.minimizer(), (self.size, 1))
            self.f = self.g.copy()
        self.g[mask] = self.geom.regularizer.minimizer()
        self.f[mask] = mirror_argmin(self.geom, self.eta[mask, None] * hint[mask], self.g[mask])

    def _update(self, x, next_hint):
        eta = self.eta[:, None]
        self.g = mirror_argmin(self.geom, eta * x, self.g)
        self.f = mirror_argmin(self.geom, eta * next_hint, self.g)

    @property
    def secondary(self):
        return self._shape_out(self.g)

    def psi_increment(self, x, hint):
        return 0.5 * self.hint_error_sq(x, hint)


class LocalExpWeights(OptimisticLearner):
    """Exponential weights on the simplex with an optimistic hint, in closed form."""

    name = "ew-local"

    def _check_geometry(self):
        if not isinstance(self.geom.decision_set, Simplex):
            raise ConfigError("local-norm exponential weights run on the simplex")

    def _start(self, mask, hint):
        if not hasattr(self, "f"):
            self.total = np.zeros((self.size, self.dim))
            self.f = np.full((self.size, self.dim), 1.0 / self.dim)
        self.total[mask] = 0.0
        self.f[mask] = _softmax(-self.eta[mask, None] * hint[mask])

    def _update(self, x, next_hint):
        self.total += x
        self.f = _softmax(-self.eta[:, None] * (self.total + next_hint))

    def local_error_sq(self, x, hint):
        """Weighted variance of x - M under the current weights.

        ``<f - g, x - M>`` does not change when a constant is added to
        ``x - M`` (both points are distributions), so the centred form is the
        sharpest local dual norm the closed-form analysis supports.
        """
        v = self._as_rows(np.subtract(x, hint))
        mean = np.einsum("ij,ij->i", self.f, v)
        second = np.einsum("ij,ij->i", self.f, v * v)
        return self._shape_out(np.maximum(second - mean**2, 0.0))

    def local_error_sq_uncentred(self, x, hint):
        v = self._as_rows(np.subtract(x, hint))
        return self._shape_out(np.einsum("ij,ij->i", self.f, v * v))

    def precondition_ok(self, x, hint):
        gap = norm(self.geom.dual_norm, np.subtract(x, hint))
        return self._shape_out(self.eta) * gap <= PRECONDITION_LIMIT

    def psi_increment(self, x, hint):
        return 2.0 * self.local_error_sq(x, hint)


def _softmax(logits):
    z = logits - logits.max(axis=-1, keepdims=True)
    w = np.exp(z)
    return w / w.sum(axis=-1, keepdims=True)


LEARNERS = {cls.name: cls for cls in (OptimisticFTRL, OptimisticMirrorDescent, LocalExpWeights)}


def make_full_info(name: str, geom: Geometry, eta, batch=(), first_hint=None):
    try:
        cls = LEARNERS[name]
    except KeyError:
        raise ConfigError(f"unknown full-information learner {name!r}") from None
    return cls(geom, eta, batch=batch, first_hint=first_hint)


def barrier_comparator_bound(learner: OptimisticFTRL, horizon: int) -> float:
    """theta * log T, the barrier value bound at distance 1/T from the boundary."""
    return learner.barrier.self_concordance * math.log(max(horizon, 2))

