"""Predictable processes: hints M_t built from the outcomes seen so far.

A predictor is reset with an array shape ``(..., d)`` so that one instance can
serve a whole stack of replicas.  ``hint()`` always returns the hint for the
next round; before anything has been absorbed it is the zero vector.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError, DomainError
from .geometry import as_vector


class Predictor:
    kind = "abstract"

    def __init__(self):
        self.shape = None
        self.outcome_set = None
        self.count = 0

    @property
    def spec(self) -> str:
        return self.kind

    def fresh(self) -> "Predictor":
        """New, unreset predictor of the same configuration."""
        return make_predictor(self.spec)

    def reset(self, shape, outcome_set=None) -> "Predictor":
        self.shape = (int(shape),) if np.ndim(shape) == 0 else tuple(int(s) for s in shape)
        self.outcome_set = outcome_set
        self.count = 0
        self._reset()
        return self

    def _reset(self):
        pass

    def absorb(self, x) -> "Predictor":
        if self.shape is None:
            raise ConfigError("predictor used before reset()")
        x = as_vector(x)
        if x.shape != self.shape:
            x = np.broadcast_to(x, self.shape)
        if self.outcome_set is not None and not np.all(self.outcome_set.contains(x)):
            raise DomainError(f"{self.kind}: absorbed outcome lies outside X")
        self._absorb(x)
        self.count += 1
        return self

    def _absorb(self, x):
        raise NotImplementedError

    def hint(self) -> np.ndarray:
        if self.shape is None:
            raise ConfigError("predictor used before reset()")
        raw = self._raw_hint()
        if self.outcome_set is not None:
            raw = self.outcome_set.project(raw)
        return raw

    def _raw_hint(self) -> np.ndarray:
        raise NotImplementedError

    def __repr__(self):
        return f"Predictor({self.spec!r})"


class Zero(Predictor):
    kind = "zero"

    def _absorb(self, x):
        pass

    def _raw_hint(self):
        return np.zeros(self.shape)


class LastValue(Predictor):
    """Path-length style hint: the previous outcome."""

    kind = "last"

    def _reset(self):
        self.last = np.zeros(self.shape)

    def _absorb(self, x):
        self.last = np.array(x, dtype=float)

    def _raw_hint(self):
        return self.last.copy()


class Flip(LastValue):
    """Negated previous outcome, a deliberately bad model."""

    kind = "flip"

    def _raw_hint(self):
        return -self.last


class RunningMean(Predictor):
    """Variance style hint: mean of all past outcomes.

    The sum is kept with Neumaier compensation so it does not drift.
    """

    kind = "mean"

    def _reset(self):
        self.total = np.zeros(self.shape)
        self.carry = np.zeros(self.shape)

    def _absorb(self, x):
        t = self.total + x
        big = np.abs(self.total) >= np.abs(x)
        self.carry += np.where(big, (self.total - t) + x, (x - t) + self.total)
        self.total = t

    def _raw_hint(self):
        if self.count == 0:
            return np.zeros(self.shape)
        return (self.total + self.carry) / self.count


class FadingMemory(Predictor):
    """Exponentially weighted mean with weights decay**age, normalized."""

    kind = "ewma"

    def __init__(self, decay: float = 0.9):
        super().__init__()
        if not 0.0 < decay < 1.0:
            raise ConfigError("ewma decay must lie in (0, 1)")
        self.decay = float(decay)

    @property
    def spec(self):
        return f"ewma:{self.decay!r}"

    def _reset(self):
        self.num = np.zeros(self.shape)
        self.den = 0.0

    def _absorb(self, x):
        self.num = self.decay * self.num + x
        self.den = self.decay * self.den + 1.0

    def _raw_hint(self):
        if self.den == 0.0:
            return np.zeros(self.shape)
        return self.num / self.den


class Phase(Predictor):
    """Seasonal hint x_{t-k}; zero until k outcomes have been seen."""

    kind = "phase"

    def __init__(self, period: int = 1):
        super().__init__()
        if int(period) < 1:
            raise ConfigError("phase length must be a positive integer")
        self.period = int(period)

    @property
    def spec(self):
        return f"phase:{self.period}"

    def _reset(self):
        self.ring = np.zeros((self.period,) + self.shape)

    def _absorb(self, x):
        self.ring[self.count % self.period] = x

    def _raw_hint(self):
        if self.count < self.period:
            return np.zeros(self.shape)
        # slot of x_{t-k} is the one about to be overwritten
        return self.ring[self.count % self.period].copy()


class PhaseMean(Phase):
    """Uniform average of all past outcomes in the same phase slot."""

    kind = "phasemean"

    @property
    def spec(self):
        return f"phasemean:{self.period}"

    def _reset(self):
        self.sums = np.zeros((self.period,) + self.shape)
        self.counts = np.zeros(self.period, dtype=int)

    def _absorb(self, x):
        slot = self.count % self.period
        self.sums[slot] += x
        self.counts[slot] += 1

    def _raw_hint(self):
        slot = self.count % self.period
        if self.counts[slot] == 0:
            return np.zeros(self.shape)
        return self.sums[slot] / self.counts[slot]


class AutoRegressive(Predictor):
    """sum_j coeffs[j] * x_{t-1-j}, missing history read as zero."""

    kind = "ar"

    def __init__(self, coeffs=(1.0,)):
        super().__init__()
        coeffs = [float(c) for c in coeffs]
        if not coeffs or not np.all(np.isfinite(coeffs)):
            raise ConfigError("ar needs at least one finite coefficient")
        self.coeffs = np.array(coeffs)

    @property
    def spec(self):
        return "ar:" + ",".join(repr(float(c)) for c in self.coeffs)

    def _reset(self):
        self.lags = np.zeros((len(self.coeffs),) + self.shape)

    def _absorb(self, x):
        self.lags = np.roll(self.lags, 1, axis=0)
        self.lags[0] = x

    def _raw_hint(self):
        return np.tensordot(self.coeffs, self.lags, axes=1)


_SIMPLE = {"zero": Zero, "last": LastValue, "mean": RunningMean, "flip": Flip}


def make_predictor(spec: str) -> Predictor:
    """Build a predictor from a config string such as ``"ewma:0.9"``."""
    if isinstance(spec, Predictor):
        return spec.fresh()
    name, _, arg = str(spec).strip().partition(":")
    try:
        if name in _SIMPLE:
            if arg:
                raise ConfigError(f"predictor {name!r} takes no argument")
            return _SIMPLE[name]()
        if name == "ewma":
            return FadingMemory(float(arg) if arg else 0.9)
        if name == "phase":
            return Phase(int(arg))
        if name == "phasemean":
            return PhaseMean(int(arg))
        if name == "ar":
            return AutoRegressive([float(a) for a in arg.split(",")])
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad predictor spec {spec!r}: {exc}") from None
    raise ConfigError(f"unknown predictor {spec!r}")


def parse_models(spec: str) -> list:
    """Split a model list.  Commas inside an ``ar:`` coefficient list are kept
    when the next piece is numeric."""
    out = []
    for piece in str(spec).split(","):
        piece = piece.strip()
        if not piece:
            continue
        if out and out[-1].startswith("ar:") and _is_number(piece):
            out[-1] += "," + piece
        else:
            out.append(piece)
    return [make_predictor(p) for p in out]


def _is_number(s):
    try:
        float(s)
        return True
    except ValueError:
        return False
