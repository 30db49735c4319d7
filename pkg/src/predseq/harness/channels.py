"""Feedback channels: what the learner is allowed to see after each round."""

from __future__ import annotations

import numpy as np

from ..bandit import LossOracle
from ..errors import ConfigError


def delayed_hint(history, t: int, k: int) -> np.ndarray:
    """Mean of x_1..x_{t-k-1} from a (T, ..., d) history; zero when empty."""
    history = np.asarray(history, dtype=float)
    m = t - k - 1
    if m <= 0:
        return np.zeros(history.shape[1:])
    return history[:m].mean(axis=0)


class DelayedMean:
    """Running mean of outcomes revealed with a lag of k rounds.

    ``absorb(x_t)`` queues x_t; it becomes visible k rounds later, so after
    t - 1 absorptions the hint is the mean of x_1..x_{t-k-1}.
    """

    def __init__(self, lag: int):
        if int(lag) < 0:
            raise ConfigError("lag must be nonnegative")
        self.lag = int(lag)
        self.queue = []
        self.total = None
        self.count = 0

    def reset(self, shape, outcome_set=None):
        self.queue = []
        self.total = np.zeros(shape)
        self.count = 0
        return self

    def absorb(self, x):
        self.queue.append(np.array(x, dtype=float))
        if len(self.queue) > self.lag:
            self.total = self.total + self.queue.pop(0)
            self.count += 1
        return self

    def hint(self):
        if self.count == 0:
            return np.zeros_like(self.total)
        return self.total / self.count


class FullChannel:
    name = "full"
    reveals_outcome = True

    def deliver(self, x):
        return {"x": x}


class BanditChannel:
    name = "bandit"
    reveals_outcome = False

    def deliver(self, x):
        return {"oracle": LossOracle(x)}


class DelayedChannel(BanditChannel):
    """Scalar loss now, plus the outcome from k rounds ago."""

    name = "delayed"

    def __init__(self, lag: int):
        self.lag = int(lag)
        self.backlog = []

    def deliver(self, x):
        self.backlog.append(np.array(x, dtype=float))
        late = self.backlog.pop(0) if len(self.backlog) > self.lag else None
        return {"oracle": LossOracle(x), "late": late}


def make_channel(spec: str):
    name, _, arg = str(spec).partition(":")
    if name == "full":
        return FullChannel()
    if name == "bandit":
        return BanditChannel()
    if name == "delayed":
        try:
            return DelayedChannel(int(arg))
        except ValueError:
            raise ConfigError(f"delayed channel needs an integer lag, got {spec!r}") from None
    raise ConfigError(f"unknown channel {spec!r}")
