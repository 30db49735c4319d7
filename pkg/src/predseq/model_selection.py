"""Learning which predictable process to trust, over a finite model set.

Four feedback regimes are covered:

* ``full``          every model hint and the outcome are visible (Hedge + OMD)
* ``bandit``        every model hint, but only the scalar loss (Hedge + SCRiBLe)
* ``partial``       the outcome, but one model hint per round (bandit over models + OMD)
* ``partial-both``  scalar loss and one model hint per round (bandit over models + SCRiBLe)

Model hints are served by a :class:`ModelSet` that lives on the environment
side and counts every hint it hands out.
"""

from __future__ import annotations

import numpy as np

from .bandit import Scrible, ScribleMAB
from .errors import ConfigError, FeedbackError, ModeError
from .full_info import OptimisticMirrorDescent
from .geometry import Geometry, as_vector, norm
from .predictors import make_predictor

MODES = ("full", "bandit", "partial", "partial-both")
PARTIAL_LOSS_CAP = 4.0


def hedge_step(q, losses, rate: float = 1.0) -> np.ndarray:
    """q'(pi) proportional to q(pi) exp(-rate * loss(pi)), computed in log space."""
    q = np.asarray(q, dtype=float)
    losses = np.asarray(losses, dtype=float)
    if not np.all(np.isfinite(losses)) or np.any(losses < 0):
        raise FeedbackError("hedge losses must be finite and nonnegative")
    with np.errstate(divide="ignore"):
        logw = np.log(q) - rate * losses
    top = logw.max(axis=-1, keepdims=True)
    dead = ~np.isfinite(top)
    w = np.exp(logw - np.where(dead, 0.0, top))
    w = np.where(dead, 1.0, w)
    return w / w.sum(axis=-1, keepdims=True)


def aggregate_hint(q, hints) -> np.ndarray:
    """sum_pi q(pi) M^pi, with ``hints`` shaped (..., |Pi|, d)."""
    return np.einsum("...p,...pd->...d", np.asarray(q, float), np.asarray(hints, float))


class ModelSet:
    """Environment-side bank of predictors sharing one history.

    ``all_hints`` and ``query`` are the learner-facing reads and are counted;
    ``audit_hints`` is for regret accounting only and is not.
    """

    def __init__(self, models, shape, outcome_set=None):
        self.models = [make_predictor(m) for m in models]
        if not self.models:
            raise ConfigError("model set must not be empty")
        for m in self.models:
            m.reset(shape, outcome_set)
        self.shape = tuple(self.models[0].shape)
        self.reads = 0
        self.rounds = 0
        self.reads_per_round = []
        self._this_round = 0

    def __len__(self):
        return len(self.models)

    @property
    def specs(self):
        return [m.spec for m in self.models]

    def absorb(self, x):
        for m in self.models:
            m.absorb(x)
        self.reads_per_round.append(self._this_round)
        self._this_round = 0
        self.rounds += 1

    def audit_hints(self) -> np.ndarray:
        return np.stack([m.hint() for m in self.models], axis=-2)

    def all_hints(self) -> np.ndarray:
        self.reads += len(self.models)
        self._this_round += len(self.models)
        return self.audit_hints()

    def query(self, pick) -> np.ndarray:
        """Hint of model ``pick`` (one index per replica)."""
        self.reads += 1
        self._this_round += 1
        pick = np.broadcast_to(np.asarray(pick, dtype=int), self.shape[:-1])
        if np.any((pick < 0) | (pick >= len(self.models))):
            raise ConfigError("model index out of range")
        hints = self.audit_hints()
        return np.take_along_axis(hints, pick[..., None, None], axis=-2)[..., 0, :]


class LearnedHintLearner:
    """Base learner whose hint comes from a model set.

    ``act()`` returns f_t; ``current_hint`` is the M_t it was built with.
    Full-information composites take ``feedback(x=...)``, bandit ones
    ``feedback(loss=...)``.  The model set must absorb x_t before feedback.
    """

    mode = None
    base = None
    observes = "outcome"

    def __init__(self, geom: Geometry, eta, models: ModelSet, batch=(), rng=None, hedge_rate=1.0):
        self.geom = geom
        self.models = models
        self.batch = tuple(batch)
        self.rng = rng if rng is not None else np.random.default_rng()
        self.hedge_rate = float(hedge_rate)
        self.count = len(models)
        self.eta = eta

    @property
    def weights(self) -> np.ndarray:
        return self.q

    def aggregate(self) -> np.ndarray:
        """Weighted hint over all models; only defined when every hint is visible."""
        if self.mode not in ("full", "bandit"):
            raise ModeError(f"mode {self.mode!r} sees one model hint per round")
        return aggregate_hint(self.q, self.model_hints)

    def _dual_sq(self, v):
        return norm(self.geom.dual_norm, v) ** 2


class HedgeOMD(LearnedHintLearner):
    """All model hints and outcomes visible: Hedge on ||x - M^pi||_*^2."""

    mode = "full"

    def __init__(self, *args, **kw):
        super().__init__(*args, **kw)
        self.q = np.full(self.batch + (self.count,), 1.0 / self.count)
        self.model_hints = self.models.all_hints()
        self.current_hint = aggregate_hint(self.q, self.model_hints)
        self.inner = OptimisticMirrorDescent(self.geom, self.eta, self.batch, self.current_hint)

    def act(self, draws=None):
        return self.inner.decision

    def feedback(self, x=None, loss=None):
        if x is None:
            raise ModeError("this learner needs the full outcome")
        x = as_vector(x)
        losses = self._dual_sq(self.model_hints - x[..., None, :])
        self.q = hedge_step(self.q, losses, self.hedge_rate)
        self.model_hints = self.models.all_hints()
        self.current_hint = aggregate_hint(self.q, self.model_hints)
        self.inner.step(x, self.current_hint)


class HedgeScrible(LearnedHintLearner):
    """All model hints visible, scalar loss only: Hedge on (<f,x> - <f,M^pi>)^2."""

    mode = "bandit"
    observes = "loss"

    def __init__(self, *args, **kw):
        super().__init__(*args, **kw)
        self.q = np.full(self.batch + (self.count,), 1.0 / self.count)
        self.model_hints = self.models.all_hints()
        self.current_hint = aggregate_hint(self.q, self.model_hints)
        self.inner = Scrible(self.geom, self.eta, self.batch, self.rng, self.current_hint)

    def act(self, draws=None):
        self.played = self.inner.act(draws)
        return self.played

    def feedback(self, x=None, loss=None):
        if loss is None:
            raise ModeError("this learner takes the scalar loss only")
        loss = np.asarray(loss, dtype=float)
        predicted = np.einsum("...d,...pd->...p", self.played, self.model_hints)
        self.q = hedge_step(self.q, (loss[..., None] - predicted) ** 2, self.hedge_rate)
        self.model_hints = self.models.all_hints()
        self.current_hint = aggregate_hint(self.q, self.model_hints)
        return self.inner.observe(loss, self.current_hint)


def partial_step_size(count: int) -> float:
    """1/(32 |Pi|^2), half of the small-loss bandit limit for losses in [0, 4]."""
    return 1.0 / (32.0 * count**2)


class _PartialSelector(LearnedHintLearner):
    def _init_selector(self):
        self.selector = ScribleMAB(self.count, s=PARTIAL_LOSS_CAP, eta=partial_step_size(self.count),
                                   batch=self.batch, rng=self.rng)
        self.pick, self.q = self.selector.act()
        self.current_hint = self.models.query(self.pick)

    def _advance(self, arm_loss):
        self.selector.observe(np.clip(arm_loss, 0.0, PARTIAL_LOSS_CAP))
        self.pick, self.q = self.selector.act()
        self.current_hint = self.models.query(self.pick)


class SelectOMD(_PartialSelector):
    """Outcome visible, one model hint per round chosen by a bandit over models."""

    mode = "partial"

    def __init__(self, *args, **kw):
        super().__init__(*args, **kw)
        self._init_selector()
        self.inner = OptimisticMirrorDescent(self.geom, self.eta, self.batch, self.current_hint)

    def act(self, draws=None):
        return self.inner.decision

    def feedback(self, x=None, loss=None):
        if x is None:
            raise ModeError("this learner needs the full outcome")
        x = as_vector(x)
        self._advance(self._dual_sq(x - self.current_hint))
        self.inner.step(x, self.current_hint)


class SelectScrible(_PartialSelector):
    """Scalar loss and one model hint per round."""

    mode = "partial-both"
    observes = "loss"

    def __init__(self, *args, **kw):
        super().__init__(*args, **kw)
        self._init_selector()
        self.inner = Scrible(self.geom, self.eta, self.batch, self.rng, self.current_hint)

    def act(self, draws=None):
        self.played = self.inner.act(draws)
        return self.played

    def feedback(self, x=None, loss=None):
        if loss is None:
            raise ModeError("this learner takes the scalar loss only")
        loss = np.asarray(loss, dtype=float)
        predicted = np.einsum("...d,...d->...", self.played, self.current_hint)
        self._advance((loss - predicted) ** 2)
        return self.inner.observe(loss, self.current_hint)


_PAIRS = {
    ("full", "omd"): HedgeOMD,
    ("bandit", "scrible"): HedgeScrible,
    ("partial", "omd"): SelectOMD,
    ("partial-both", "scrible"): SelectScrible,
}


def assemble(mode: str, base: str, geom: Geometry, eta, models: ModelSet, batch=(), rng=None,
             hedge_rate=1.0):
    """Wire a model-selection rule to its base learner."""
    try:
        cls = _PAIRS[(mode, base)]
    except KeyError:
        raise ConfigError(f"no composite for mode {mode!r} with base {base!r}") from None
    return cls(geom, eta, models, batch=batch, rng=rng, hedge_rate=hedge_rate)
