"""Phase-based step-size halving for learners whose bound reads A/eta + eta * Psi."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError, ContractError

LOSS_RANGE = 2.0


@dataclass
class PhaseState:
    """Per-replica phase bookkeeping; arrays are shaped (B,)."""

    scale: float
    initial_rate: float
    index: np.ndarray
    start: np.ndarray
    accumulated: np.ndarray
    boundaries: list = field(default_factory=list)

    @property
    def rate(self) -> np.ndarray:
        return self.initial_rate * 2.0 ** (-self.index.astype(float))

    @property
    def threshold(self) -> np.ndarray:
        """Largest Psi a phase may hold: A / eta_i^2."""
        return self.scale / self.rate**2


class DoublingWrapper:
    """Runs a restartable learner in phases with eta_i = eta_0 2^{-i}.

    After every round call ``close_round(increment, next_hint)``.  When
    eta_i * Psi(phase) first exceeds A / eta_i, that round is marked
    discarded, the phase index advances and the learner restarts cold
    from ``next_hint``.  Hint sources are untouched by restarts.
    """

    def __init__(self, learner, scale: float, batch=(), first_hint=None, initial_rate=None,
                 loss_range=LOSS_RANGE):
        if not scale > 0:
            raise ConfigError("doubling scale A must be positive")
        self.learner = learner
        self.batch = tuple(batch)
        rate0 = 4.0 * scale / loss_range if initial_rate is None else float(initial_rate)
        zeros = np.zeros(self.batch)
        self.state = PhaseState(float(scale), rate0, zeros.astype(int), zeros.astype(int) + 1,
                                zeros.astype(float))
        self.t = 0
        learner.restart(None, first_hint, self.state.rate)

    @property
    def eta(self):
        return self.state.rate

    @property
    def phase(self):
        return self.state.index.copy()

    def close_round(self, increment, next_hint=None) -> np.ndarray:
        """Absorb this round's Psi increment; returns the mask of discarded rounds."""
        inc = np.broadcast_to(np.asarray(increment, dtype=float), self.batch)
        if np.any(inc < 0) or not np.all(np.isfinite(inc)):
            raise ContractError("Psi increments must be finite and nonnegative")
        st = self.state
        self.t += 1
        st.accumulated = st.accumulated + inc
        crossed = st.rate * st.accumulated > st.scale / st.rate
        if np.any(crossed):
            for r in np.flatnonzero(np.ravel(crossed)):
                st.boundaries.append((int(r), self.t, int(np.ravel(st.index)[r])))
            st.index = np.where(crossed, st.index + 1, st.index)
            st.start = np.where(crossed, self.t + 1, st.start)
            st.accumulated = np.where(crossed, 0.0, st.accumulated)
            self.learner.restart(crossed, next_hint, st.rate)
        return crossed


def phase_ends(increments, scale: float, initial_rate: float) -> list:
    """Rounds (1-based) that close a phase, by direct simulation of the stopping rule."""
    ends, acc, i = [], 0.0, 0
    for t, inc in enumerate(increments, start=1):
        rate = initial_rate * 2.0**-i
        acc += inc
        if rate * acc > scale / rate:
            ends.append(t)
            acc, i = 0.0, i + 1
    return ends
