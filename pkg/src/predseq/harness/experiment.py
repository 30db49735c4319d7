"""Experiment orchestration: config in, ledger and bound checks out.

One run drives a batch of ``replicas`` independent copies of the same
configuration.  Randomness is split from a single seed into separate
streams for the outcome generator, the learner and the probe set, so a run
is reproducible bit for bit.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..bandit import ArmLossOracle, LossOracle, Scrible, ScribleMAB, mean_and_se
from ..errors import ConfigError
from ..fpl import PerturbedLeader
from ..full_info import PRECONDITION_LIMIT, make_full_info
from ..geometry import Geometry, barrier_argmin, make_geometry, norm
from ..model_selection import ModelSet, assemble
from ..predictors import make_predictor, parse_models
from .channels import BanditChannel, DelayedChannel, FullChannel, make_channel
from .doubling import DoublingWrapper
from .ledger import RegretLedger
from .sequences import make_sequence, parse_sigma

FULL_INFO = ("oftrl", "omd", "ew-local")
BANDIT = ("scrible", "scrible-hint")
COMPOSITES = {
    "omd-learnM": ("full", "omd"),
    "scrible-learnM": ("bandit", "scrible"),
    "omd-learnM-partial": ("partial", "omd"),
    "scrible-learnM-partial": ("partial-both", "scrible"),
}
FPL = {"fpl-l1": "l1", "fpl-simplex": "simplex"}
ALGORITHMS = FULL_INFO + BANDIT + ("scrible-mab",) + tuple(COMPOSITES) + tuple(FPL)

NATURAL_CHANNEL = {a: "full" for a in FULL_INFO + ("omd-learnM", "omd-learnM-partial") + tuple(FPL)}
NATURAL_CHANNEL.update({a: "bandit" for a in BANDIT + ("scrible-mab", "scrible-learnM",
                                                      "scrible-learnM-partial")})
DELAY_READY = BANDIT
DOUBLING_READY = FULL_INFO + BANDIT
PROBE_COUNT = 64


@dataclass
class ExperimentConfig:
    algo: str = "omd"
    geometry: str = "simplex"
    dim: int = 5
    horizon: int = 1000
    predictor: str = "last"
    models: str = "last,mean,zero,flip"
    sequence: str = "noisy"
    sigma: str = "const:0.1"
    noise: str = "sphere"
    channel: str | None = None
    eta: str = "auto"
    seed: int = 0
    replicas: int = 1
    hedge_rate: float = 1.0
    out: str | None = None
    format: str = "csv"
    keep_trace: bool = True

    @classmethod
    def from_mapping(cls, mapping) -> "ExperimentConfig":
        """Build from string values, e.g. parsed CLI flags or a key=value file."""
        kinds = {f.name: f.type for f in dataclasses.fields(cls)}
        kw = {}
        for key, value in mapping.items():
            key = key.replace("-", "_")
            if key not in kinds:
                raise ConfigError(f"unknown config key {key!r}")
            if value is None:
                continue
            kw[key] = _coerce(key, kinds[key], value)
        return cls(**kw)

    def to_dict(self):
        return dataclasses.asdict(self)


def _coerce(key, kind, value):
    if not isinstance(value, str):
        return value
    try:
        if kind == "int":
            return int(value)
        if kind == "float":
            return float(value)
        if kind == "bool":
            return value.strip().lower() in ("1", "true", "yes", "on")
    except ValueError:
        raise ConfigError(f"bad value {value!r} for {key}") from None
    return value


def read_config_file(path) -> dict:
    """Plain key=value lines; blank lines and # comments are skipped."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from None
    out = {}
    for number, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{number}: expected key=value")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


# -- geometry and step sizes -------------------------------------------------

def geometry_for(algo: str, name: str, dim: int) -> Geometry:
    if algo not in ALGORITHMS:
        raise ConfigError(f"unknown algorithm {algo!r}; choose from {', '.join(ALGORITHMS)}")
    if algo in FPL:
        want = FPL[algo]
        if name != want:
            raise ConfigError(f"{algo} runs on the {want} geometry")
        return make_geometry(name, dim)
    if name == "l1":
        raise ConfigError(f"{algo} has no regularizer for the l1 ball")
    if algo in ("ew-local", "scrible-mab") and name != "simplex":
        raise ConfigError(f"{algo} runs on the simplex")
    barrier = algo == "oftrl" or algo.startswith("scrible")
    return make_geometry(name, dim, "logbarrier" if barrier else None)


def barrier_scale(geom: Geometry, horizon: int) -> float:
    """theta log T: barrier value at distance 1/T from the boundary."""
    return geom.regularizer.self_concordance * math.log(max(horizon, 2))


def doubling_scale(algo: str, geom: Geometry, horizon: int) -> float:
    if algo == "omd":
        return geom.rmax_sq
    if algo == "ew-local":
        return math.log(geom.dim)
    return barrier_scale(geom, horizon)


def known_sigma_rate(algo: str, geom: Geometry, sigmas: np.ndarray, horizon: int) -> float:
    """Step size tuned to a known deviation schedule."""
    variation = max(float(np.sum(sigmas**2)), 1.0)
    peak = float(sigmas.max(initial=0.0))
    if algo in ("omd", "omd-learnM", "omd-learnM-partial"):
        return math.sqrt(2.0 * geom.rmax_sq / variation)
    if algo == "ew-local":
        rate = math.sqrt(math.log(geom.dim) / (2.0 * variation))
        return min(rate, PRECONDITION_LIMIT / peak) if peak > 0 else rate
    if algo == "oftrl":
        rate = math.sqrt(barrier_scale(geom, horizon) / variation)
        cap = 0.99 * math.sqrt(2.0) * PRECONDITION_LIMIT / peak if peak > 0 else math.inf
        return min(rate, cap)
    if algo == "scrible-mab":
        return 1.0 / (8.0 * geom.dim**2)
    if algo.startswith("scrible"):
        n = geom.regularizer.native_dim
        if algo == "scrible":
            variation, peak = float(horizon), 1.0
        rate = math.sqrt(barrier_scale(geom, horizon) / (2.0 * n**2 * max(variation, 1.0)))
        return min(rate, PRECONDITION_LIMIT / (n * peak)) if peak > 0 else rate
    return 1.0


def parse_eta(spec):
    """Returns ("fixed", value), ("auto", None) or ("doubling", A or None)."""
    spec = str(spec)
    if spec == "auto":
        return "auto", None
    if spec.startswith("doubling"):
        _, _, arg = spec.partition(":")
        if arg in ("", "auto"):
            return "doubling", None
        try:
            A = float(arg)
        except ValueError:
            raise ConfigError(f"bad doubling scale in {spec!r}") from None
        if A <= 0:
            raise ConfigError("doubling scale must be positive")
        return "doubling", A
    try:
        value = float(spec)
    except ValueError:
        raise ConfigError(f"eta must be a number, 'auto' or 'doubling:A', got {spec!r}") from None
    if not value > 0:
        raise ConfigError("eta must be positive")
    return "fixed", value


# -- hint sources ------------------------------------------------------------

class OracleHints:
    """Hands the learner the upcoming outcome itself."""

    spec = "oracle"

    def __init__(self, shape):
        self.upcoming = np.zeros(shape)

    def absorb(self, x):
        pass

    def hint(self):
        return np.array(self.upcoming)


def hint_source(spec: str, shape, outcome_set):
    if spec == "oracle":
        return OracleHints(shape)
    return make_predictor(spec).reset(shape, outcome_set)


# -- drivers -----------------------------------------------------------------

class FullInfoDriver:
    def __init__(self, algo, geom, eta, source, batch, doubling_scale=None):
        self.source = source
        self.hint = source.hint()
        self.learner = make_full_info(algo, geom, eta, batch, self.hint)
        self.channel = FullChannel()
        self.doubling = None
        if doubling_scale is not None:
            self.doubling = DoublingWrapper(self.learner, doubling_scale, batch, self.hint)
        self.batch = batch

    @property
    def eta(self):
        return self.learner._shape_out(self.learner.eta)

    def decide(self):
        return self.learner.decision

    def finish(self, x):
        L, M = self.learner, self.hint
        local = L.local_error_sq(x, M)
        stats = dict(hint_error_sq=L.hint_error_sq(x, M), local_error_sq=local,
                     flag=~L.precondition_ok(x, M), psi=L.psi_increment(x, M))
        if self.doubling is not None:
            stats["phase"] = self.doubling.phase
        seen = self.channel.deliver(x)["x"]
        self.source.absorb(seen)
        nxt = self.source.hint()
        L.step(seen, nxt)
        if self.doubling is not None:
            stats["discard"] = self.doubling.close_round(stats["psi"], nxt)
        self.hint = nxt
        return stats


class BanditDriver:
    """Loss-only learner; hints come from an environment-side source or the delayed mean."""

    def __init__(self, algo, geom, eta, source, channel, batch, rng, doubling_scale=None):
        self.channel = channel
        self.delayed = isinstance(channel, DelayedChannel)
        self.source = make_predictor("zero").reset(batch + (geom.dim,), geom.outcome_set) \
            if algo == "scrible" else source
        self.hint = self.source.hint()
        self.learner = Scrible(geom, eta, batch, rng, self.hint)
        self.doubling = None
        if doubling_scale is not None:
            self.doubling = DoublingWrapper(self.learner, doubling_scale, batch, self.hint)
        self.geom = geom
        self.batch = batch
        if self.delayed:
            self.undelayed = make_predictor("mean").reset(batch + (geom.dim,), geom.outcome_set)
            self.t = 0

    @property
    def eta(self):
        return self.learner._out(self.learner.eta)

    def decide(self):
        self.played = self.learner.act()
        return self.played

    def finish(self, x):
        M = self.hint
        stats = {"hint_error_sq": norm(self.geom.dual_norm, x - M) ** 2}
        if self.delayed:
            self.t += 1
            gap = norm(self.geom.dual_norm, M - self.undelayed.hint())
            stats["delay_gap"] = gap
            lag = self.channel.lag
            stats["delay_bound"] = 2.0 * lag / (self.t - 1) if self.t > lag + 1 else np.nan
            self.undelayed.absorb(x)
        if self.doubling is not None:
            stats["phase"] = self.doubling.phase
        seen = self.channel.deliver(x)
        loss = seen["oracle"].query(self.played)
        if self.delayed:
            if seen["late"] is not None:
                self.source.absorb(seen["late"])
        else:
            self.source.absorb(x)
        nxt = self.source.hint()
        self.learner.observe(loss, nxt)
        inner = self.learner._out(self.learner.last_centred)
        n = self.learner.n
        stats["inner_error_sq"] = inner**2
        stats["psi"] = self.learner.psi_increment()
        stats["flag"] = self.eta * n * np.abs(inner) >= PRECONDITION_LIMIT
        if self.doubling is not None:
            stats["discard"] = self.doubling.close_round(stats["psi"], nxt)
        self.hint = nxt
        return stats


class ArmDriver:
    """Multi-armed bandit on the simplex; outcomes are mapped to arm losses in [0, 1]."""

    def __init__(self, geom, eta, batch, rng):
        self.learner = ScribleMAB(geom.dim, 1.0, eta, batch, rng)
        self.dim = geom.dim
        self.hint = np.zeros(batch + (geom.dim,))

    @property
    def eta(self):
        return self.learner._out(self.learner.eta)

    @staticmethod
    def arm_losses(x):
        return np.clip((np.asarray(x) + 1.0) / 2.0, 0.0, 1.0)

    def decide(self):
        self.arm, self.q = self.learner.act()
        return np.eye(self.dim)[self.arm]

    def finish(self, x):
        loss = ArmLossOracle(self.arm_losses(x)).query(self.arm)
        self.learner.observe(loss)
        return {}


class PerturbedDriver:
    def __init__(self, kind, geom, sigmas, source, batch, rng):
        self.source = source
        self.hint = source.hint()
        self.learner = PerturbedLeader(kind, geom.dim, sigmas, batch=batch, rng=rng)
        self.geom = geom
        self.eta = np.full(batch, np.nan)

    def decide(self):
        return self.learner.decide(self.hint)

    def finish(self, x):
        stats = {"hint_error_sq": norm(self.geom.dual_norm, x - self.hint) ** 2,
                 "gap_event": self.learner.events[-1]}
        self.learner.observe(x)
        self.source.absorb(x)
        self.hint = self.source.hint()
        return stats


class CompositeDriver:
    def __init__(self, algo, geom, eta, models, batch, rng, hedge_rate):
        mode, base = COMPOSITES[algo]
        self.models = ModelSet(models, batch + (geom.dim,), geom.outcome_set)
        self.learner = assemble(mode, base, geom, eta, self.models, batch, rng, hedge_rate)
        self.geom = geom
        self.model_error = np.zeros(batch + (len(self.models),))
        self._eta = np.broadcast_to(float(eta), batch)

    @property
    def eta(self):
        return self._eta

    @property
    def hint(self):
        return self.learner.current_hint

    def decide(self):
        self.played = self.learner.act()
        return self.played

    def finish(self, x):
        M = self.learner.current_hint
        dual = self.geom.dual_norm
        stats = {"hint_error_sq": norm(dual, x - M) ** 2,
                 "inner_error_sq": np.einsum("...d,...d->...", self.played, x - M) ** 2}
        self.model_error += norm(dual, self.models.audit_hints() - x[..., None, :]) ** 2
        self.models.absorb(x)
        if self.learner.observes == "loss":
            self.learner.feedback(loss=LossOracle(x).query(self.played))
        else:
            self.learner.feedback(x=x)
        return stats


# -- results -----------------------------------------------------------------

@dataclass
class BoundCheck:
    """One inequality evaluated per replica.

    ``scope`` is "per-run" (every replica must satisfy lhs <= rhs) or
    "mean" (mean lhs <= mean rhs + 3 standard errors of lhs).
    """

    name: str
    lhs: np.ndarray
    rhs: np.ndarray
    scope: str = "per-run"
    include: np.ndarray | None = None

    def passed(self) -> bool:
        keep = np.ones(len(self.lhs), bool) if self.include is None else self.include
        lhs, rhs = self.lhs[keep], self.rhs[keep]
        if lhs.size == 0:
            return True
        if self.scope == "per-run":
            return bool(np.all(lhs <= rhs))
        mean, se = mean_and_se(lhs)
        return bool(mean <= float(np.mean(rhs)) + 3.0 * se)

    def summary(self):
        keep = np.ones(len(self.lhs), bool) if self.include is None else self.include
        mean, se = mean_and_se(self.lhs[keep])
        return {"scope": self.scope, "passed": self.passed(), "replicas": int(keep.sum()),
                "lhs_mean": mean, "lhs_se": se,
                "rhs_mean": float(np.mean(self.rhs[keep])) if keep.any() else 0.0,
                "worst_margin": float(np.min(self.rhs[keep] - self.lhs[keep])) if keep.any() else 0.0}


@dataclass
class RunResult:
    config: ExperimentConfig
    geom: Geometry
    ledger: RegretLedger
    eta: np.ndarray
    checks: dict = field(default_factory=dict)
    info: dict = field(default_factory=dict)

    @property
    def regret(self) -> np.ndarray:
        return self.ledger.final_regret

    def summary(self) -> dict:
        mean, se = mean_and_se(self.regret)
        return {
            "config": self.config.to_dict(),
            "rounds": self.ledger.horizon,
            "replicas": self.ledger.replicas,
            "final_regret": [float(v) for v in self.regret],
            "mean_regret": mean,
            "regret_se": se,
            "eta": [float(v) for v in np.ravel(self.eta)],
            "hint_error_total": [float(v) for v in self.ledger.total_of("hint_error_sq")],
            "bounds": {k: c.summary() for k, c in self.checks.items()},
            "info": self.info,
        }


def _interior_probes(geom: Geometry, rng, count=PROBE_COUNT):
    d = geom.dim
    if geom.name == "simplex":
        return rng.dirichlet(np.ones(d), size=count)
    u = rng.normal(size=(count, d))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    return u * rng.random((count, 1)) ** (1.0 / d) * (1.0 - 1e-6)


def barrier_comparator_gap(geom: Geometry, eta, ledger: RegretLedger, rng) -> np.ndarray:
    """max over interior comparators g of  sum <f_t, x_t> - <g, S_T> - R(g)/eta.

    The maximizer for fixed S_T is the barrier minimizer of eta S_T, which
    is included alongside radially shrunk hindsight-optimal points and a
    random interior grid.
    """
    reg = geom.regularizer
    S = ledger.total
    eta = np.broadcast_to(np.asarray(eta, float), (ledger.replicas,))
    learner_loss = ledger.cum_loss[-1] if len(ledger) else np.zeros(ledger.replicas)
    centre = np.tile(reg.minimizer(), (ledger.replicas, 1))
    candidates = [barrier_argmin(reg, eta[:, None] * S, centre)]
    best, _ = geom.best_response(S)
    T = max(len(ledger), 2)
    mid = reg.minimizer()
    for shrink in (1.0 / T, 1.0 / math.sqrt(T), 0.1, 0.5):
        candidates.append(mid + (1.0 - shrink) * (best - mid))
    grid = _interior_probes(geom, rng)
    out = np.full(ledger.replicas, -np.inf)
    for g in candidates:
        val = learner_loss - np.einsum("ij,ij->i", g, S) - reg.value(g) / eta
        out = np.maximum(out, val)
    vals = learner_loss[:, None] - S @ grid.T - reg.value(grid)[None, :] / eta[:, None]
    return np.maximum(out, vals.max(axis=1))


def doubling_interior_ok(ledger: RegretLedger, scale: float, rate0: float) -> np.ndarray:
    """Per replica: every kept round keeps eta_i * Psi(phase so far) <= A / eta_i."""
    psi = ledger.column("psi")
    phase = ledger.column("phase").astype(int)
    discard = ledger.column("discard").astype(bool)
    ok = np.ones(ledger.replicas, bool)
    for r in range(ledger.replicas):
        acc, current = 0.0, 0
        for t in range(len(psi)):
            if phase[t, r] != current:
                acc, current = 0.0, phase[t, r]
            acc += psi[t, r]
            if discard[t, r]:
                acc = 0.0
                continue
            rate = rate0 * 2.0 ** -current
            if rate * acc > scale / rate * (1 + 1e-12):
                ok[r] = False
    return ok


def _attach_checks(result: RunResult, algo, mode, geom, driver, scale, rng):
    L = result.ledger
    regret = L.final_regret
    eta = np.ravel(result.eta)
    checks, info = result.checks, result.info
    T = L.horizon
    if mode == "doubling":
        psi_total = L.total_of("psi")
        checks["doubling"] = BoundCheck("doubling", regret, 16.0 * np.sqrt(scale * psi_total))
        rate0 = driver.doubling.state.initial_rate
        checks["doubling_interior"] = BoundCheck(
            "doubling_interior", (~doubling_interior_ok(L, scale, rate0)).astype(float),
            np.zeros(L.replicas))
        info["phase_boundaries"] = driver.doubling.state.boundaries
        info["phases"] = [int(v) for v in np.ravel(driver.doubling.phase) + 1]
        return
    if algo == "omd":
        rhs = geom.rmax_sq / eta + 0.5 * eta * L.total_of("hint_error_sq")
        checks["omd_bound"] = BoundCheck("omd_bound", regret, rhs)
    elif algo == "oftrl":
        lhs = barrier_comparator_gap(geom, eta, L, rng)
        rhs = 2.0 * eta * L.total_of("local_error_sq")
        checks["oftrl_bound"] = BoundCheck("oftrl_bound", lhs, rhs, include=~L.flagged())
        info["flagged_runs"] = int(L.flagged().sum())
    elif algo == "ew-local":
        rhs = 2.0 * eta * L.total_of("local_error_sq") + math.log(geom.dim) / eta
        checks["ew_local_bound"] = BoundCheck("ew_local_bound", regret, rhs)
    elif algo in BANDIT or algo in ("scrible-learnM", "scrible-learnM-partial"):
        n = geom.regularizer.native_dim
        lhs = barrier_comparator_gap(geom, eta, L, rng)
        rhs = 2.0 * eta * n**2 * L.total_of("inner_error_sq")
        name = "bandit_bound" if algo in BANDIT else "learned_bandit"
        checks[name] = BoundCheck(name, lhs, rhs, "mean")
        if "delay_gap" in L.extras:
            gap, bound = L.column("delay_gap"), L.column("delay_bound")
            live = ~np.isnan(bound)
            over = np.where(live, gap - bound, 0.0).max(axis=0) if T else np.zeros(L.replicas)
            checks["delayed_mean"] = BoundCheck("delayed_mean", over, np.full(L.replicas, 1e-12))
    elif algo == "scrible-mab":
        best = L.best_cum_loss[-1] if T else np.zeros(L.replicas)
        d, s = geom.dim, 1.0
        factor = 1.0 - 4.0 * eta * s * d**2
        rhs = (best + d * math.log(d * max(T, 1)) / eta) / factor
        lhs = L.cum_loss[-1] if T else np.zeros(L.replicas)
        checks["small_loss"] = BoundCheck("small_loss", lhs, rhs, "mean")
    elif algo == "omd-learnM":
        count = driver.model_error.shape[-1]
        rhs = geom.rmax_sq / eta + 3.2 * eta * (driver.model_error.min(axis=-1) + math.log(count))
        checks["learned_hints"] = BoundCheck("learned_hints", regret, rhs, "mean")
    elif algo == "omd-learnM-partial":
        rhs = geom.rmax_sq / eta + 0.5 * eta * L.total_of("hint_error_sq")
        checks["selected_hints"] = BoundCheck("selected_hints", regret, rhs)
    if algo in COMPOSITES:
        info["model_error"] = driver.model_error.tolist()
        info["weights"] = np.asarray(driver.learner.weights).tolist()
        rounds = driver.models.reads_per_round
        info["model_reads_per_round"] = float(np.mean(rounds)) if rounds else 0.0
    if algo in FPL:
        ev = L.column("gap_event")
        info["gap_event_rate"] = float(ev.mean()) if ev.size else 0.0


def run_experiment(config) -> RunResult:
    """Run one configuration; deterministic given ``config.seed``."""
    if isinstance(config, dict):
        config = ExperimentConfig.from_mapping(config)
    algo = config.algo
    geom = geometry_for(algo, config.geometry, int(config.dim))
    T, B = int(config.horizon), int(config.replicas)
    if T < 0 or B < 1:
        raise ConfigError("horizon must be >= 0 and replicas >= 1")
    batch = (B,)
    channel_spec = config.channel or NATURAL_CHANNEL[algo]
    channel = make_channel(channel_spec)
    natural = NATURAL_CHANNEL[algo]
    if isinstance(channel, DelayedChannel):
        if algo not in DELAY_READY:
            raise ConfigError(f"{algo} cannot run on a delayed channel")
    elif channel.name != natural:
        raise ConfigError(f"{algo} cannot run on the {channel.name} channel")
    sigmas = parse_sigma(config.sigma, T)
    eta_mode, eta_arg = parse_eta(config.eta)
    if eta_mode == "doubling" and algo not in DOUBLING_READY:
        raise ConfigError(f"doubling is not available for {algo}")
    if config.predictor == "oracle" and algo not in FULL_INFO + tuple(FPL):
        raise ConfigError("oracle hints need a full-information learner")

    seq_seed, learn_seed, probe_seed = np.random.SeedSequence(int(config.seed)).spawn(3)
    seq_rng = np.random.default_rng(seq_seed)
    learn_rng = np.random.default_rng(learn_seed)
    probe_rng = np.random.default_rng(probe_seed)

    seq_spec = config.sequence
    if seq_spec == "noisy":
        base = config.predictor if config.predictor not in ("oracle",) else "last"
        seq_spec = f"noisy:{base}"
    sequence = make_sequence(seq_spec, geom, T, sigmas, config.noise, batch, seq_rng)
    shape = batch + (geom.dim,)
    upcoming = sequence.next() if T > 0 else np.zeros(shape)

    if isinstance(channel, DelayedChannel):
        source = make_predictor("mean").reset(shape, geom.outcome_set)
    else:
        source = hint_source(config.predictor, shape, geom.outcome_set)
    if isinstance(source, OracleHints):
        source.upcoming = upcoming

    if eta_mode == "fixed":
        eta = eta_arg
    else:
        eta = known_sigma_rate(algo, geom, sigmas, T)
    scale = None
    if eta_mode == "doubling":
        scale = eta_arg if eta_arg is not None else doubling_scale(algo, geom, T)

    if algo in FULL_INFO:
        driver = FullInfoDriver(algo, geom, eta, source, batch, scale)
    elif algo in BANDIT:
        driver = BanditDriver(algo, geom, eta, source, channel, batch, learn_rng, scale)
    elif algo == "scrible-mab":
        driver = ArmDriver(geom, eta, batch, learn_rng)
    elif algo in FPL:
        driver = PerturbedDriver(FPL[algo], geom, sigmas, source, batch, learn_rng)
    else:
        driver = CompositeDriver(algo, geom, eta, parse_models(config.models), batch, learn_rng,
                                 config.hedge_rate)

    ledger = RegretLedger(geom, B, keep_trace=config.keep_trace)
    for t in range(T):
        x = upcoming
        upcoming = sequence.next() if t + 1 < T else np.zeros(shape)
        if isinstance(source, OracleHints):
            source.upcoming = upcoming
        f = driver.decide()
        M = driver.hint
        stats = driver.finish(x)
        if isinstance(driver, ArmDriver):
            x = driver.arm_losses(x)
        ledger.record(f, x, M, **stats)

    result = RunResult(config, geom, ledger, np.asarray(driver.eta if scale is None else
                                                        driver.doubling.eta, dtype=float))
    _attach_checks(result, algo, eta_mode, geom, driver, scale, probe_rng)
    if config.keep_trace:
        result.info["recomputed_regret"] = [float(v) for v in ledger.recompute()]
    return result
