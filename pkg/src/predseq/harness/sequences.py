"""Outcome generators.

Generators are oblivious: they never see the learner's decisions.  Every
generator emits a ``(B, d)`` stack of outcomes per call and keeps all
outcomes inside the outcome set X.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..errors import ConfigError
from ..geometry import Geometry, Norm, UnitBall, norm
from ..predictors import make_predictor

NOISE_SHAPES = ("sphere", "ball", "sign")


def parse_sigma(spec, horizon: int) -> np.ndarray:
    """Deviation budgets sigma_1..sigma_T from ``const:x`` or ``file:path``."""
    if isinstance(spec, (int, float)):
        spec = f"const:{spec}"
    if not isinstance(spec, str):
        arr = np.asarray(spec, dtype=float)
    else:
        kind, _, arg = spec.partition(":")
        if kind == "const":
            try:
                arr = np.full(horizon, float(arg))
            except ValueError:
                raise ConfigError(f"bad sigma spec {spec!r}") from None
        elif kind == "file":
            try:
                text = Path(arg).read_text()
            except OSError as exc:
                raise ConfigError(f"cannot read sigma file {arg!r}: {exc}") from None
            arr = np.array([float(v) for v in text.split()], dtype=float)
        else:
            raise ConfigError(f"sigma spec must be const:x or file:path, got {spec!r}")
    if arr.shape != (horizon,):
        if arr.ndim == 1 and len(arr) > horizon:
            arr = arr[:horizon]
        else:
            raise ConfigError(f"sigma schedule has {arr.size} values, horizon is {horizon}")
    if np.any(arr < 0) or not np.all(np.isfinite(arr)):
        raise ConfigError("sigma values must be finite and nonnegative")
    return arr


def unit_noise(shape_name: str, dual: Norm, size, rng) -> np.ndarray:
    """Random vectors with dual norm at most 1 (exactly 1 for sphere and sign)."""
    d = size[-1]
    if shape_name == "sign":
        v = 2.0 * rng.integers(2, size=size) - 1.0
        return v / norm(dual, np.ones(d))
    u = rng.normal(size=size)
    r = norm(dual, u)[..., None]
    u = u / np.where(r > 0, r, 1.0)
    if shape_name == "sphere":
        return u
    if shape_name == "ball":
        return u * rng.random(size[:-1] + (1,)) ** (1.0 / d)
    raise ConfigError(f"unknown noise shape {shape_name!r}")


class Sequence:
    kind = "abstract"

    def __init__(self, geom: Geometry, horizon: int, batch=(), rng=None):
        self.geom = geom
        self.dim = geom.dim
        self.horizon = int(horizon)
        self.batch = tuple(batch)
        self.rng = rng if rng is not None else np.random.default_rng()
        self.outcome_set = geom.outcome_set
        self.t = 0
        self.generator_hint = np.zeros(self.batch + (self.dim,))

    @property
    def shape(self):
        return self.batch + (self.dim,)

    def next(self) -> np.ndarray:
        self.t += 1
        x = self._emit()
        return x

    def _emit(self):
        raise NotImplementedError


class NoisySequence(Sequence):
    """x_t = project_X(M_t + z_t) with ||z_t||_* <= sigma_t; M_t from the generator's own predictor."""

    kind = "noisy"

    def __init__(self, geom, horizon, sigmas, predictor="last", noise="sphere", batch=(), rng=None):
        super().__init__(geom, horizon, batch, rng)
        self.sigmas = parse_sigma(sigmas, horizon)
        if noise not in NOISE_SHAPES:
            raise ConfigError(f"noise must be one of {NOISE_SHAPES}")
        self.noise = noise
        self.predictor = make_predictor(predictor).reset(self.shape, self.outcome_set)
        self.dual = geom.dual_norm

    @property
    def predictor_spec(self):
        return self.predictor.spec

    def _emit(self):
        sigma = self.sigmas[self.t - 1]
        M = self.predictor.hint()
        self.generator_hint = M
        z = sigma * unit_noise(self.noise, self.dual, self.shape, self.rng)
        x = self.outcome_set.project(M + z)
        gap = norm(self.dual, x - M)[..., None]
        # projection is nonexpansive here, but guard the budget against rounding
        over = gap > sigma
        if np.any(over):
            x = np.where(over, M + (x - M) * (sigma / np.where(gap > 0, gap, 1.0)), x)
        self.predictor.absorb(x)
        return x


class IIDSequence(Sequence):
    """x_t = mu + spread * u_t with u_t uniform on the Euclidean unit sphere."""

    kind = "iid"

    def __init__(self, geom, horizon, mean=0.0, spread=0.1, batch=(), rng=None):
        super().__init__(geom, horizon, batch, rng)
        mu = np.zeros(self.dim)
        if np.ndim(mean) == 0:
            mu[0] = float(mean)
        else:
            mu[:] = np.asarray(mean, dtype=float)
        self.mean = mu
        self.spread = float(spread)
        if self.spread < 0:
            raise ConfigError("spread must be nonnegative")

    def _emit(self):
        self.generator_hint = np.broadcast_to(self.mean, self.shape)
        u = unit_noise("sphere", Norm.L2, self.shape, self.rng)
        return self.outcome_set.project(self.mean + self.spread * u)


class RandomVertexSequence(Sequence):
    """Worst-case style: uniformly random extreme points of X."""

    kind = "random"

    def _emit(self):
        X = self.outcome_set
        if isinstance(X, UnitBall) and X.norm is Norm.LINF:
            return 2.0 * self.rng.integers(2, size=self.shape) - 1.0
        if isinstance(X, UnitBall) and X.norm is Norm.L1:
            j = self.rng.integers(self.dim, size=self.batch)
            s = 2.0 * self.rng.integers(2, size=self.batch) - 1.0
            return s[..., None] * np.eye(self.dim)[j]
        return unit_noise("sphere", Norm.L2, self.shape, self.rng)


class PhasedSequence(Sequence):
    """Period-k pattern of fixed random points, plus optional noise."""

    kind = "phased"

    def __init__(self, geom, horizon, period=5, sigmas=0.0, noise="sphere", batch=(), rng=None):
        super().__init__(geom, horizon, batch, rng)
        if int(period) < 1:
            raise ConfigError("period must be positive")
        self.period = int(period)
        base = unit_noise("ball", geom.dual_norm, (self.period,) + self.shape, self.rng)
        self.base = 0.8 * base
        self.sigmas = parse_sigma(sigmas, horizon)
        self.noise = noise

    def _emit(self):
        M = self.base[(self.t - 1) % self.period]
        self.generator_hint = M
        z = self.sigmas[self.t - 1] * unit_noise(self.noise, self.geom.dual_norm, self.shape, self.rng)
        return self.outcome_set.project(M + z)


class ScriptedSequence(Sequence):
    """Replays a fixed array of outcomes, shape (T, d) or (T, B, d)."""

    kind = "scripted"

    def __init__(self, geom, outcomes, batch=()):
        outcomes = np.asarray(outcomes, dtype=float)
        super().__init__(geom, outcomes.shape[0], batch)
        self.outcomes = outcomes

    def _emit(self):
        return np.broadcast_to(self.outcomes[self.t - 1], self.shape).copy()


def make_sequence(spec: str, geom: Geometry, horizon: int, sigma="const:0.1", noise="sphere",
                  batch=(), rng=None) -> Sequence:
    """Build a generator from ``noisy[:pred]``, ``iid[:mu[:spread]]``, ``random`` or ``phased:k``."""
    name, _, arg = str(spec).partition(":")
    if name == "noisy":
        return NoisySequence(geom, horizon, sigma, predictor=arg or "last", noise=noise,
                             batch=batch, rng=rng)
    if name == "iid":
        parts = [p for p in arg.split(":") if p]
        mean = float(parts[0]) if parts else 0.0
        sig = parse_sigma(sigma, horizon)
        spread = float(parts[1]) if len(parts) > 1 else float(sig.max(initial=0.0))
        return IIDSequence(geom, horizon, mean, spread, batch=batch, rng=rng)
    if name == "random":
        return RandomVertexSequence(geom, horizon, batch=batch, rng=rng)
    if name == "phased":
        return PhasedSequence(geom, horizon, int(arg or 5), sigma, noise, batch=batch, rng=rng)
    raise ConfigError(f"unknown sequence {spec!r}")
