"""Norms, feasible sets, regularizers and the constrained argmin solvers.

Every routine works on the last axis and broadcasts over leading axes, so a
stack of independent replicas of shape ``(B, d)`` is handled in a single call.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError, InvalidVector, SolverError

MEMBERSHIP_TOL = 1e-9
BOUNDARY_GAP = 1e-12


def as_vector(x) -> np.ndarray:
    """Convert to a float array, rejecting NaN and infinite entries."""
    x = np.asarray(x, dtype=float)
    if not np.isfinite(x).all():
        raise InvalidVector("vector has non-finite entries")
    return x


class Norm(enum.Enum):
    L1 = "l1"
    L2 = "l2"
    LINF = "linf"

    @property
    def dual(self) -> "Norm":
        return _DUAL[self]

    @property
    def order(self):
        return {Norm.L1: 1, Norm.L2: 2, Norm.LINF: np.inf}[self]


_DUAL = {Norm.L1: Norm.LINF, Norm.L2: Norm.L2, Norm.LINF: Norm.L1}


def norm(kind: Norm, x) -> np.ndarray:
    x = as_vector(x)
    if kind is Norm.L1:
        return np.abs(x).sum(axis=-1)
    if kind is Norm.LINF:
        return np.abs(x).max(axis=-1)
    return np.sqrt(np.einsum("...i,...i->...", x, x))


def project_simplex(v) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort based)."""
    v = np.asarray(v, dtype=float)
    d = v.shape[-1]
    u = -np.sort(-v, axis=-1)
    css = np.cumsum(u, axis=-1) - 1.0
    k = np.arange(1, d + 1)
    cond = u - css / k > 0
    rho = d - 1 - np.argmax(cond[..., ::-1], axis=-1)
    tau = np.take_along_axis(css, rho[..., None], axis=-1) / (rho[..., None] + 1.0)
    return np.maximum(v - tau, 0.0)


# ---------------------------------------------------------------------------
# feasible sets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class UnitBall:
    norm: Norm
    dim: int

    def contains(self, x, tol: float = MEMBERSHIP_TOL):
        return norm(self.norm, x) <= 1.0 + tol

    def project(self, x) -> np.ndarray:
        """Nearest point in the ball (Euclidean metric, clipping for l-inf)."""
        x = np.asarray(x, dtype=float)
        if self.norm is Norm.LINF:
            return np.clip(x, -1.0, 1.0)
        if self.norm is Norm.L2:
            r = norm(Norm.L2, x)[..., None]
            return x / np.maximum(r, 1.0)
        inside = (np.abs(x).sum(axis=-1) <= 1.0)[..., None]
        shrunk = np.sign(x) * project_simplex(np.abs(x))
        return np.where(inside, x, shrunk)


@dataclass(frozen=True)
class Simplex:
    dim: int

    def contains(self, x, tol: float = MEMBERSHIP_TOL):
        x = np.asarray(x, dtype=float)
        return (x >= -tol).all(axis=-1) & (np.abs(x.sum(axis=-1) - 1.0) <= tol)

    def project(self, x) -> np.ndarray:
        return project_simplex(x)


# ---------------------------------------------------------------------------
# regularizers
# ---------------------------------------------------------------------------


class Regularizer:
    """Convex function with value, gradient and Hessian evaluators.

    ``dim`` is the ambient dimension of points in F.  ``native_dim`` is the
    dimension the function actually acts on; it differs from ``dim`` only for
    the simplex log-barrier, which lives on the first ``d - 1`` coordinates.
    Evaluators accept either native or ambient points.
    """

    kind = "abstract"
    self_concordance = None
    strong_convexity = None

    def __init__(self, dim: int):
        self.dim = int(dim)

    @property
    def native_dim(self) -> int:
        return self.dim

    @property
    def is_barrier(self) -> bool:
        return self.self_concordance is not None

    def reduce(self, f) -> np.ndarray:
        return np.asarray(f, dtype=float)

    def lift(self, u) -> np.ndarray:
        return np.asarray(u, dtype=float)

    def reduce_dual(self, x) -> np.ndarray:
        return np.asarray(x, dtype=float)

    def _native(self, f) -> np.ndarray:
        f = as_vector(f)
        if f.shape[-1] == self.native_dim:
            return f
        if f.shape[-1] == self.dim:
            return self.reduce(f)
        raise DomainError(f"{self.kind}: expected dimension {self.dim}, got {f.shape[-1]}")

    def interior(self, f) -> np.ndarray:
        raise NotImplementedError

    def check_interior(self, f) -> np.ndarray:
        u = self._native(f)
        if not np.all(self.interior(u)):
            raise DomainError(f"{self.kind}: point outside the open domain")
        return u

    def minimizer(self) -> np.ndarray:
        """argmin of the regularizer over F, in ambient coordinates."""
        raise NotImplementedError

    def value(self, f) -> np.ndarray:
        raise NotImplementedError

    def gradient(self, f) -> np.ndarray:
        raise NotImplementedError

    def hessian(self, f) -> np.ndarray:
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}(dim={self.dim})"

    def __eq__(self, other):
        return type(self) is type(other) and self.dim == other.dim

    def __hash__(self):
        return hash((type(self).__name__, self.dim))


class NegEntropy(Regularizer):
    """R(f) = sum_i f_i log f_i on the positive orthant."""

    kind = "neg_entropy"
    strong_convexity = 1.0

    def interior(self, u):
        return (u > 0).all(axis=-1)

    def minimizer(self):
        return np.full(self.dim, 1.0 / self.dim)

    def value(self, f):
        f = self._native(f)
        if np.any(f < 0):
            raise DomainError("neg_entropy: negative coordinate")
        safe = np.where(f > 0, f, 1.0)
        return np.where(f > 0, f * np.log(safe), 0.0).sum(axis=-1)

    def gradient(self, f):
        return np.log(self.check_interior(f)) + 1.0

    def hessian(self, f):
        u = self.check_interior(f)
        return _diag(1.0 / u)


class HalfSqL2(Regularizer):
    """R(f) = ||f||_2^2 / 2."""

    kind = "half_sq_l2"
    strong_convexity = 1.0

    def interior(self, u):
        return np.ones(u.shape[:-1], dtype=bool)

    def minimizer(self):
        return np.zeros(self.dim)

    def value(self, f):
        f = self._native(f)
        return 0.5 * np.einsum("...i,...i->...", f, f)

    def gradient(self, f):
        return self._native(f).copy()

    def hessian(self, f):
        f = self._native(f)
        return np.broadcast_to(np.eye(self.dim), f.shape + (self.dim,)).copy()


class LogBarrierBall(Regularizer):
    """R(f) = -log(1 - ||f||_2^2), a 1-self-concordant barrier of the l2 ball.

    Its minimum value over the ball is 0 (at the origin), so no shift is
    needed to normalize it.
    """

    kind = "log_barrier_ball"
    self_concordance = 1.0

    def slack(self, u):
        return 1.0 - np.einsum("...i,...i->...", u, u)

    def interior(self, u):
        return self.slack(u) > 0

    def minimizer(self):
        return np.zeros(self.dim)

    def value(self, f):
        return -np.log(self.slack(self.check_interior(f)))

    def gradient(self, f):
        u = self.check_interior(f)
        return 2.0 * u / self.slack(u)[..., None]

    def hessian(self, f):
        u = self.check_interior(f)
        s = self.slack(u)[..., None, None]
        eye = np.eye(u.shape[-1])
        return 2.0 * eye / s + 4.0 * u[..., :, None] * u[..., None, :] / s**2


class LogBarrierSimplex(Regularizer):
    """R(u) = -sum_{i<d} log u_i - log(1 - sum_{i<d} u_i), shifted to min 0.

    ``u`` holds the first ``d - 1`` coordinates of a simplex point; the last
    coordinate is implied.  The barrier parameter is ``d``.
    """

    kind = "log_barrier_simplex"

    def __init__(self, dim: int):
        super().__init__(dim)
        self.self_concordance = float(dim)
        self.offset = dim * math.log(dim)

    @property
    def native_dim(self):
        return self.dim - 1

    def reduce(self, f):
        return np.asarray(f, dtype=float)[..., :-1]

    def lift(self, u):
        u = np.asarray(u, dtype=float)
        return np.concatenate([u, 1.0 - u.sum(axis=-1, keepdims=True)], axis=-1)

    def reduce_dual(self, x):
        # <f, x> = <u, x[:-1] - x[-1]> + x[-1]
        x = np.asarray(x, dtype=float)
        return x[..., :-1] - x[..., -1:]

    def slack(self, u):
        last = 1.0 - u.sum(axis=-1)
        if u.shape[-1] == 0:
            return last
        return np.minimum(u.min(axis=-1), last)

    def interior(self, u):
        return self.slack(u) > 0

    def minimizer(self):
        return np.full(self.dim, 1.0 / self.dim)

    def value(self, f):
        u = self.check_interior(f)
        last = 1.0 - u.sum(axis=-1)
        return -np.log(u).sum(axis=-1) - np.log(last) - self.offset

    def gradient(self, f):
        u = self.check_interior(f)
        last = 1.0 - u.sum(axis=-1, keepdims=True)
        return -1.0 / u + 1.0 / last

    def hessian(self, f):
        u = self.check_interior(f)
        last = 1.0 - u.sum(axis=-1)
        n = u.shape[-1]
        ones = np.ones((n, n))
        return _diag(1.0 / u**2) + ones / (last**2)[..., None, None]


def _diag(v) -> np.ndarray:
    out = np.zeros(v.shape + (v.shape[-1],))
    idx = np.arange(v.shape[-1])
    out[..., idx, idx] = v
    return out


REGULARIZERS = {
    "entropy": NegEntropy,
    "sq": HalfSqL2,
    "logbarrier-ball": LogBarrierBall,
    "logbarrier-simplex": LogBarrierSimplex,
}


def bregman(reg: Regularizer, f, g) -> np.ndarray:
    """D_R(f, g) = R(f) - R(g) - <grad R(g), f - g>."""
    fn, gn = reg._native(f), reg._native(g)
    d = reg.value(fn) - reg.value(gn) - np.einsum("...i,...i->...", reg.gradient(gn), fn - gn)
    return np.maximum(d, 0.0)


# ---------------------------------------------------------------------------
# geometry bundle
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Geometry:
    """Decision set, outcome set, primal norm and regularizer."""

    name: str
    decision_set: object
    outcome_set: object
    norm: Norm
    regularizer: Regularizer | None = None

    @property
    def dim(self) -> int:
        return self.decision_set.dim

    @property
    def dual_norm(self) -> Norm:
        return self.norm.dual

    @property
    def rmax_sq(self) -> float:
        """max_F R - min_F R for the mirror-descent regularizers."""
        reg = self.regularizer
        if isinstance(reg, NegEntropy) and isinstance(self.decision_set, Simplex):
            return math.log(self.dim)
        if isinstance(reg, HalfSqL2):
            if isinstance(self.decision_set, UnitBall) and self.decision_set.norm is Norm.L2:
                return 0.5
            if isinstance(self.decision_set, Simplex):
                return 0.5 - 0.5 / self.dim
        raise ConfigError(f"R_max^2 unavailable for {self.name} with {reg!r}")

    def best_response(self, S):
        """Comparator minimizing <f, S> over F, and the minimal value."""
        S = np.asarray(S, dtype=float)
        F = self.decision_set
        if isinstance(F, Simplex):
            j = np.argmin(S, axis=-1)
            return np.eye(self.dim)[j], S.min(axis=-1)
        if F.norm is Norm.L2:
            r = norm(Norm.L2, S)[..., None]
            f = np.where(r > 0, -S / np.where(r > 0, r, 1.0), 0.0)
            return f, -r[..., 0]
        if F.norm is Norm.L1:
            j = np.argmax(np.abs(S), axis=-1)
            s = np.take_along_axis(S, j[..., None], axis=-1)[..., 0]
            return -np.sign(s)[..., None] * np.eye(self.dim)[j], -np.abs(s)
        return -np.sign(S), -np.abs(S).sum(axis=-1)

    def best_value(self, S) -> np.ndarray:
        return self.best_response(S)[1]


def simplex_geometry(d: int, regularizer: str = "entropy") -> Geometry:
    reg = {"entropy": NegEntropy, "sq": HalfSqL2, "logbarrier": LogBarrierSimplex}[regularizer](d)
    return Geometry("simplex", Simplex(d), UnitBall(Norm.LINF, d), Norm.L1, reg)


def l2_geometry(d: int, regularizer: str = "sq") -> Geometry:
    reg = {"sq": HalfSqL2, "logbarrier": LogBarrierBall}[regularizer](d)
    return Geometry("l2", UnitBall(Norm.L2, d), UnitBall(Norm.L2, d), Norm.L2, reg)


def l1_geometry(d: int) -> Geometry:
    return Geometry("l1", UnitBall(Norm.L1, d), UnitBall(Norm.LINF, d), Norm.L1, None)


def make_geometry(name: str, d: int, regularizer: str | None = None) -> Geometry:
    if name == "simplex":
        return simplex_geometry(d, regularizer or "entropy")
    if name == "l2":
        return l2_geometry(d, regularizer or "sq")
    if name == "l1":
        if regularizer is not None:
            raise ConfigError("the l1 geometry carries no regularizer")
        return l1_geometry(d)
    raise ConfigError(f"unknown geometry {name!r}")


# ---------------------------------------------------------------------------
# argmin solvers
# ---------------------------------------------------------------------------


def mirror_argmin(geom: Geometry, linear, center) -> np.ndarray:
    """argmin over F of <g, linear> + D_R(g, center)."""
    reg = geom.regularizer
    linear = as_vector(linear)
    center = as_vector(center)
    F = geom.decision_set
    if isinstance(reg, NegEntropy) and isinstance(F, Simplex):
        # zero weights stay zero: the step lives on the face spanned by the support
        if (center < 0).any() or (center.max(axis=-1) <= 0).any():
            raise DomainError("mirror step needs a nonnegative center with positive mass")
        with np.errstate(divide="ignore"):
            logits = np.log(center) - linear
        logits -= logits.max(axis=-1, keepdims=True)
        w = np.exp(logits)
        return w / w.sum(axis=-1, keepdims=True)
    if isinstance(reg, HalfSqL2):
        if not F.contains(center).all():
            raise DomainError("mirror step center lies outside F")
        return F.project(center - linear)
    raise ConfigError(f"no mirror step for {reg!r} on {geom.name}")


def newton_minimize(barrier: Regularizer, theta, warm_start, tol: float = 1e-10,
                    max_iter: int = 100):
    """Damped Newton on Phi(u) = <u, theta> + R(u).

    Steps are scaled by 1/(1 + lambda) while the Newton decrement lambda
    exceeds 1/4 and taken in full afterwards.  Iteration stops once lambda
    is below ``tol`` or below the precision floating point allows at u.  Returns the ambient minimizer,
    the final decrements and the iteration count.
    """
    if not barrier.is_barrier:
        raise ConfigError(f"{barrier!r} is not a self-concordant barrier")
    theta = as_vector(theta)
    if theta.shape[-1] == barrier.dim and barrier.native_dim != barrier.dim:
        theta = barrier.reduce_dual(theta)
    u0 = barrier.check_interior(warm_start)
    n = barrier.native_dim
    batch = np.broadcast_shapes(u0.shape[:-1], theta.shape[:-1])
    if n == 0:
        return barrier.lift(np.zeros(batch + (0,))), np.zeros(batch), 0
    u = np.broadcast_to(u0, batch + (n,)).reshape(-1, n).copy()
    th = np.broadcast_to(theta, batch + (n,)).reshape(-1, n)
    dec = np.full(u.shape[0], np.inf)
    active = np.arange(u.shape[0])
    it = 0
    while True:
        ua = u[active]
        g = th[active] + barrier.gradient(ua)
        H = barrier.hessian(ua)
        step = np.linalg.solve(H, g[..., None])[..., 0]
        lam = np.sqrt(np.maximum(np.einsum("ij,ij->i", g, step), 0.0))
        dec[active] = lam
        # near the boundary, rounding u alone moves the decrement by about this much
        du = np.finfo(float).eps * (np.abs(ua) + 1.0)
        floor = np.sqrt(np.einsum("ij,ijk,ik->i", du, H, du))
        moving = lam > np.maximum(tol, 64.0 * floor)
        active, ua, step, lam = active[moving], ua[moving], step[moving], lam[moving]
        if active.size == 0 or it == max_iter:
            break
        t = np.where(lam > 0.25, 1.0 / (1.0 + lam), 1.0)
        new = ua - t[:, None] * step
        for _ in range(64):
            bad = barrier.slack(new) < BOUNDARY_GAP
            if not bad.any():
                break
            t[bad] *= 0.5
            new[bad] = ua[bad] - t[bad, None] * step[bad]
        u[active] = new
        it += 1
    if active.size:
        raise SolverError(
            f"Newton did not converge in {max_iter} iterations "
            f"(decrement {dec.max():.3e})", decrement=float(dec.max()))
    return barrier.lift(u.reshape(batch + (n,))), dec.reshape(batch), it


def barrier_argmin(barrier: Regularizer, theta, warm_start) -> np.ndarray:
    """argmin over int F of <f, theta> + R(f) for a self-concordant barrier."""
    return newton_minimize(barrier, theta, warm_start)[0]


# ---------------------------------------------------------------------------
# local norms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LocalNormContext:
    """Hessian of a regularizer at an anchor, with its eigendecomposition.

    ``eigvecs[..., :, i]`` is the eigenvector paired with ``eigvals[..., i]``.
    All vectors are in the regularizer's native coordinates.
    """

    anchor: np.ndarray
    hessian: np.ndarray
    eigvals: np.ndarray
    eigvecs: np.ndarray

    def reconstruct(self) -> np.ndarray:
        V, w = self.eigvecs, self.eigvals
        return np.einsum("...ik,...k,...jk->...ij", V, w, V)


def hessian_eigs(reg: Regularizer, h) -> LocalNormContext:
    u = reg.check_interior(h)
    H = reg.hessian(u)
    w, V = np.linalg.eigh(H)
    if np.any(w <= 0):
        raise DomainError("Hessian is not positive definite at the anchor")
    return LocalNormContext(u, H, w, V)


def local_context(H) -> LocalNormContext:
    """Context from an explicit Hessian (anchor unknown)."""
    H = np.asarray(H, dtype=float)
    w, V = np.linalg.eigh(H)
    if np.any(w <= 0):
        raise DomainError("Hessian is singular or indefinite")
    return LocalNormContext(np.full(H.shape[:-1], np.nan), H, w, V)


def local_dual_norm(ctx: LocalNormContext, x) -> np.ndarray:
    """sqrt(x^T H^{-1} x)."""
    x = as_vector(x)
    c = np.einsum("...ik,...i->...k", ctx.eigvecs, x)
    return np.sqrt((c**2 / ctx.eigvals).sum(axis=-1))


def local_norm(ctx: LocalNormContext, g) -> np.ndarray:
    """sqrt(g^T H g)."""
    g = as_vector(g)
    c = np.einsum("...ik,...i->...k", ctx.eigvecs, g)
    return np.sqrt((c**2 * ctx.eigvals).sum(axis=-1))
