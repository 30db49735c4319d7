"""Randomized perturbed-leader strategies for predictable sequences.

Decisions live on the l1 ball (or the simplex), outcomes on the l-inf ball.
Each round the learner draws fresh perturbations for the remaining rounds,
forms R_t = sum_{s<t} x_s - C sum_{s>t} eps_s z_s + M_t and picks a signed
vertex in closed form.  The closed forms are written with comparisons and
``abs`` only, so they also run on object arrays of ``fractions.Fraction``
for exact checks against the brute-force min-max oracle.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CalibrationError, ConfigError, SizeError

MAX_BRUTEFORCE_DIM = 6
MAX_CALIBRATION_DIM = 10
CANDIDATE_CONSTANTS = (2, 3, 4, 5, 6)


def _sign(x):
    x = np.asarray(x)
    return (x > 0).astype(int) - (x < 0).astype(int)


def _pick(a, idx):
    return np.take_along_axis(a, np.asarray(idx)[..., None], axis=-1)[..., 0]


def _vertex(shape, dtype, idx, value):
    f = np.zeros(shape, dtype=dtype)
    if dtype == object:
        f[...] = 0
    np.put_along_axis(f, np.asarray(idx)[..., None], np.asarray(value, dtype=dtype)[..., None], axis=-1)
    return f


def gap_event(R, sigma):
    """True where the two largest |R| coordinates differ by at least 4 sigma."""
    a = -np.sort(-np.abs(np.asarray(R)), axis=-1)
    if a.shape[-1] < 2:
        return np.ones(a.shape[:-1], dtype=bool)
    return (a[..., 0] - a[..., 1]) >= 4 * np.asarray(sigma)


def l1_closed_form(R, M, sigma):
    """Closed-form perturbed-leader vertex on the l1 ball.

    j* maximizes |R|, i* maximizes |M| (lowest index on ties).  The move is
    along i* when sigma - |M[i*]| < -|sigma sign(R[j*]) + M[j*]| and along
    j* otherwise, with sign -sign(sigma sign(R[j*]) + M[j*]).
    """
    R = np.asarray(R)
    M = np.asarray(M)
    dtype = object if object in (R.dtype, M.dtype) else float
    j = np.argmax(np.abs(R), axis=-1)
    i = np.argmax(np.abs(M), axis=-1)
    m_j, m_i = _pick(M, j), _pick(M, i)
    lean = sigma * _sign(_pick(R, j)) + m_j
    use_i = (sigma - np.abs(m_i)) < -np.abs(lean)
    value = np.where(use_i, -_sign(m_i), -_sign(lean))
    return _vertex(R.shape, dtype, np.where(use_i, i, j), value)


def simplex_closed_form(R, M, sigma):
    """Vertex e_{i*} if 2 sigma < M[j*] - M[i*] else e_{j*}, with j* = argmin R, i* = argmin M."""
    R = np.asarray(R)
    M = np.asarray(M)
    dtype = object if object in (R.dtype, M.dtype) else float
    j = np.argmin(R, axis=-1)
    i = np.argmin(M, axis=-1)
    use_i = 2 * np.asarray(sigma) < _pick(M, j) - _pick(M, i)
    return _vertex(R.shape, dtype, np.where(use_i, i, j), np.ones(np.shape(j), dtype=int))


def minmax_objective(f, R, M, sigma):
    """sup over ||z||_inf <= sigma of <f, z + M> + ||R + z||_inf, for one instance.

    The objective is convex in z, so the supremum is over the cube's vertices.
    """
    f, R, M = list(f), list(R), list(M)
    base = sum(a * b for a, b in zip(f, M))
    best = None
    for signs in itertools.product((-1, 1), repeat=len(R)):
        z = [s * sigma for s in signs]
        val = sum(a * b for a, b in zip(f, z)) + max(abs(r + w) for r, w in zip(R, z))
        if best is None or val > best:
            best = val
    return best + base


def bruteforce_minmax(R, M, sigma, geometry: str = "l1"):
    """Exact min over {0, +-e_i} of the min-max objective; returns (f, value)."""
    if geometry != "l1":
        raise ConfigError("the brute-force oracle covers the l1/l-inf pair only")
    d = len(R)
    if d > MAX_BRUTEFORCE_DIM:
        raise SizeError(f"brute force needs d <= {MAX_BRUTEFORCE_DIM}, got {d}")
    best_f, best_v = None, None
    candidates = [(i, s) for i in range(d) for s in (1, -1)] + [(None, 0)]
    for i, s in candidates:
        f = [0] * d
        if i is not None:
            f[i] = s
        v = minmax_objective(f, R, M, sigma)
        if best_v is None or v < best_v:
            best_f, best_v = f, v
    return np.array(best_f, dtype=object), best_v


# ---------------------------------------------------------------------------
# perturbations and calibration
# ---------------------------------------------------------------------------


class SignPerturbation:
    """Independent coordinates uniform on {-sigma, +sigma}; ||z||_inf = sigma exactly."""

    name = "sign"

    def draw(self, sigmas, dim, rng, batch=()):
        sigmas = np.asarray(sigmas, dtype=float)
        signs = 2.0 * rng.integers(2, size=tuple(batch) + sigmas.shape + (dim,)) - 1.0
        return signs * sigmas[..., None]


class CubePerturbation:
    """Independent coordinates uniform on [-sigma, sigma]."""

    name = "cube"

    def draw(self, sigmas, dim, rng, batch=()):
        sigmas = np.asarray(sigmas, dtype=float)
        u = rng.uniform(-1.0, 1.0, size=tuple(batch) + sigmas.shape + (dim,))
        return u * sigmas[..., None]


PERTURBATIONS = {"sign": SignPerturbation, "cube": CubePerturbation}


def draw_perturbations(model, sigmas, t, horizon, dim, rng, batch=()):
    """z_{t+1..T} and fair signs eps_{t+1..T}; ``sigmas`` is indexed from round 1."""
    if t >= horizon:
        raise ConfigError("no rounds left to perturb")
    tail = np.asarray(sigmas, dtype=float)[t:horizon]
    z = model.draw(tail, dim, rng, batch)
    eps = 2.0 * rng.integers(2, size=tuple(batch) + tail.shape) - 1.0
    return z, eps


@dataclass
class CalibrationReport:
    constant: int
    dim: int
    sigma: float
    probes: int
    samples: int
    # per candidate constant: worst (lhs - rhs_hat - 3 se) over probes
    slack: dict = field(default_factory=dict)
    passed: dict = field(default_factory=dict)


def _probe_set(dim, sigma, rng, count=24):
    probes = [np.zeros(dim)]
    for scale in (0.5, 1.0, 2.0, 4.0, 8.0):
        w = scale * sigma
        probes.append(np.full(dim, w))
        e = np.zeros(dim)
        e[0] = w
        probes.append(e)
        if dim > 1:
            pair = np.zeros(dim)
            pair[:2] = w
            probes.append(pair)
            alt = np.full(dim, w)
            alt[1::2] *= -1
            probes.append(alt)
    while len(probes) < count + 1:
        probes.append(rng.normal(size=dim) * sigma * rng.uniform(0.0, 6.0))
    return probes


def _lhs_exact(w, sigma):
    best = 0.0
    for signs in itertools.product((-1.0, 1.0), repeat=len(w)):
        z = sigma * np.array(signs)
        val = 0.5 * (np.abs(w + 2 * z).max() + np.abs(w - 2 * z).max())
        best = max(best, val)
    return best


def calibrate_perturbation(model=None, dim: int = 2, trials: int = 4000, sigma: float = 1.0,
                       rng=None, candidates=CANDIDATE_CONSTANTS) -> CalibrationReport:
    """Smallest C for which sup_z E_eps ||w + 2 eps z||_inf <= E_z E_eps ||w + C eps z||_inf.

    The left side is exact (cube vertices), the right side a Monte Carlo mean
    over ``trials`` draws with the sign average done exactly.  A probe passes
    when lhs <= rhs_hat + 3 standard errors.
    """
    model = model or SignPerturbation()
    if dim > MAX_CALIBRATION_DIM:
        raise SizeError(f"calibration enumerates 2^d vertices; d <= {MAX_CALIBRATION_DIM}")
    rng = rng if rng is not None else np.random.default_rng(0)
    probes = _probe_set(dim, sigma, rng)
    z = model.draw(np.full(trials, sigma), dim, rng)
    report = CalibrationReport(constant=0, dim=dim, sigma=sigma, probes=len(probes), samples=trials)
    lhs = [_lhs_exact(w, sigma) for w in probes]
    for C in candidates:
        worst = -np.inf
        for w, left in zip(probes, lhs):
            vals = 0.5 * (np.abs(w + C * z).max(axis=1) + np.abs(w - C * z).max(axis=1))
            se = vals.std(ddof=1) / math.sqrt(trials) if trials > 1 else 0.0
            worst = max(worst, left - vals.mean() - 3.0 * se)
        report.slack[C] = float(worst)
        report.passed[C] = bool(worst <= 1e-12)
    passing = [C for C in candidates if report.passed[C]]
    if not passing:
        raise CalibrationError(f"no constant in {tuple(candidates)} satisfies the perturbation condition")
    report.constant = min(passing)
    return report


_CALIBRATION_CACHE = {}


def calibrated_constant(model=None, dim: int = 2) -> int:
    model = model or SignPerturbation()
    key = (model.name, dim)
    if key not in _CALIBRATION_CACHE:
        _CALIBRATION_CACHE[key] = calibrate_perturbation(model, dim).constant
    return _CALIBRATION_CACHE[key]


# ---------------------------------------------------------------------------
# learner
# ---------------------------------------------------------------------------


class PerturbedLeader:
    """Stateful perturbed-leader learner over a known sigma schedule.

    ``kind`` is ``"l1"`` or ``"simplex"``.  Call ``decide(M_t)`` then
    ``observe(x_t)`` each round.
    """

    def __init__(self, kind: str, dim: int, sigmas, constant=None, perturbation=None,
                 batch=(), rng=None, reuse_draws=False):
        if kind not in ("l1", "simplex"):
            raise ConfigError("perturbed leader runs on the l1 ball or the simplex")
        self.kind = kind
        self.dim = int(dim)
        self.sigmas = np.asarray(sigmas, dtype=float)
        if np.any(self.sigmas < 0):
            raise ConfigError("deviation budgets must be nonnegative")
        self.horizon = len(self.sigmas)
        self.perturbation = perturbation or SignPerturbation()
        self.constant = constant if constant is not None else calibrated_constant(self.perturbation, self.dim)
        if self.constant < 2:
            raise ConfigError("perturbation constant must be at least 2")
        self.batch = tuple(batch)
        self.rng = rng if rng is not None else np.random.default_rng()
        self.reuse_draws = reuse_draws
        self.total = np.zeros(self.batch + (self.dim,))
        self.t = 1
        self.events = []
        self._fixed = None

    def _perturbation_sum(self):
        if self.t >= self.horizon:
            return np.zeros(self.batch + (self.dim,))
        if self.reuse_draws:
            if self._fixed is None:
                self._fixed = draw_perturbations(self.perturbation, self.sigmas, 0, self.horizon,
                                                 self.dim, self.rng, self.batch)
            z, eps = self._fixed
            z, eps = z[..., self.t:, :], eps[..., self.t:]
        else:
            z, eps = draw_perturbations(self.perturbation, self.sigmas, self.t, self.horizon,
                                        self.dim, self.rng, self.batch)
        return np.einsum("...k,...kd->...d", eps, z)

    def leader_vector(self, hint):
        return self.total - self.constant * self._perturbation_sum() + hint

    def decide(self, hint=None):
        hint = np.zeros(self.batch + (self.dim,)) if hint is None else np.asarray(hint, dtype=float)
        if self.t > self.horizon:
            raise ConfigError("horizon exhausted")
        sigma = self.sigmas[self.t - 1]
        R = self.leader_vector(hint)
        self.events.append(gap_event(R, sigma))
        rule = l1_closed_form if self.kind == "l1" else simplex_closed_form
        self.decision = rule(R, hint, sigma)
        self.last_leader = R
        return self.decision

    def observe(self, x):
        self.total = self.total + np.asarray(x, dtype=float)
        self.t += 1


def rademacher_complexity(sigmas, dim, constant, perturbation=None, rng=None, samples=2000):
    """Monte Carlo C * E ||sum_t eps_t z_t||_inf with its standard error."""
    perturbation = perturbation or SignPerturbation()
    rng = rng if rng is not None else np.random.default_rng(0)
    sigmas = np.asarray(sigmas, dtype=float)
    z = perturbation.draw(sigmas, dim, rng, (samples,))
    eps = 2.0 * rng.integers(2, size=(samples, len(sigmas))) - 1.0
    vals = constant * np.abs(np.einsum("sk,skd->sd", eps, z)).max(axis=1)
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(samples))
