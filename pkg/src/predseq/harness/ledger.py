"""Per-round regret accounting for a batch of replicas."""

from __future__ import annotations

import math

import numpy as np

from ..errors import ContractError
from ..geometry import Geometry, norm

COLUMNS = ("t", "loss", "cum_loss", "best_comparator_cum_loss", "regret", "hint_error_sq",
           "phase_index", "precondition_flag")


class RegretLedger:
    """Rows are rounds, columns are replicas.

    ``record`` appends one round.  Decisions, outcomes and hints are kept
    as a raw trace when ``keep_trace`` is set so the regret can be rebuilt
    independently by :meth:`recompute`.
    """

    def __init__(self, geom: Geometry, replicas: int, keep_trace: bool = True):
        self.geom = geom
        self.replicas = int(replicas)
        self.keep_trace = keep_trace
        self.total = np.zeros((self.replicas, geom.dim))
        self._rows = {k: [] for k in ("loss", "best", "hint_error_sq", "local_error_sq",
                                      "psi", "phase", "flag", "discard")}
        self.extras = {}
        self.trace = {"decision": [], "outcome": [], "hint": []}
        self._blank = (np.full(self.replicas, np.nan), np.zeros(self.replicas))

    def __len__(self):
        return len(self._rows["loss"])

    @property
    def horizon(self):
        return len(self)

    def record(self, decision, outcome, hint, hint_error_sq=None, local_error_sq=None, psi=None,
               phase=None, flag=None, discard=None, **extras):
        B = self.replicas
        f = np.reshape(decision, (B, -1))
        x = np.reshape(outcome, (B, -1))
        M = np.reshape(hint, (B, -1))
        loss = np.einsum("ij,ij->i", f, x)
        self.total = self.total + x
        _, best = self.geom.best_response(self.total)
        if hint_error_sq is None:
            hint_error_sq = norm(self.geom.dual_norm, x - M) ** 2
        if (np.asarray(hint_error_sq) > 4.0 + 1e-9).any():
            raise ContractError("hint error exceeds the worst-case cap (2 max ||x||)^2")
        nan, zero = self._blank

        def col(v, fill):
            if v is None:
                return fill
            return np.broadcast_to(np.asarray(v, dtype=float), (B,))

        self._rows["loss"].append(loss)
        self._rows["best"].append(np.broadcast_to(np.asarray(best, dtype=float), (B,)))
        self._rows["hint_error_sq"].append(col(hint_error_sq, nan))
        self._rows["local_error_sq"].append(col(local_error_sq, nan))
        self._rows["psi"].append(col(psi, nan))
        self._rows["phase"].append(col(phase, zero))
        self._rows["flag"].append(col(flag, zero))
        self._rows["discard"].append(col(discard, zero))
        for k, v in extras.items():
            self.extras.setdefault(k, []).append(col(v, nan))
        if self.keep_trace:
            self.trace["decision"].append(f.copy())
            self.trace["outcome"].append(x.copy())
            self.trace["hint"].append(M.copy())

    def column(self, name) -> np.ndarray:
        """(T, B) array of a recorded column."""
        rows = self._rows[name] if name in self._rows else self.extras[name]
        if not rows:
            return np.zeros((0, self.replicas))
        return np.stack(rows)

    def trace_array(self, name) -> np.ndarray:
        rows = self.trace[name]
        if not rows:
            return np.zeros((0, self.replicas, self.geom.dim))
        return np.stack(rows)

    @property
    def loss(self):
        return self.column("loss")

    @property
    def cum_loss(self):
        return np.cumsum(self.loss, axis=0)

    @property
    def best_cum_loss(self):
        return self.column("best")

    @property
    def regret(self):
        return self.cum_loss - self.best_cum_loss

    @property
    def final_regret(self) -> np.ndarray:
        if len(self) == 0:
            return np.zeros(self.replicas)
        return self.regret[-1]

    def total_of(self, name) -> np.ndarray:
        col = self.column(name)
        return col.sum(axis=0) if len(col) else np.zeros(self.replicas)

    def flagged(self) -> np.ndarray:
        """Replicas where the precondition monitor fired at least once."""
        col = self.column("flag")
        return col.any(axis=0) if len(col) else np.zeros(self.replicas, bool)

    def phase_slices(self, replica: int):
        """Contiguous (start, stop) round ranges sharing one phase index."""
        ph = self.column("phase")[:, replica]
        if len(ph) == 0:
            return []
        cuts = np.flatnonzero(np.diff(ph)) + 1
        edges = np.concatenate([[0], cuts, [len(ph)]])
        return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:])]

    def recompute(self) -> np.ndarray:
        """Final regret per replica rebuilt from the raw trace alone."""
        if not self.keep_trace:
            raise ContractError("no trace kept for this ledger")
        F = self.trace_array("decision")
        X = self.trace_array("outcome")
        out = np.zeros(self.replicas)
        for r in range(self.replicas):
            learner = math.fsum(float(np.dot(F[t, r], X[t, r])) for t in range(len(F)))
            totals = np.array([math.fsum(X[:, r, j]) for j in range(self.geom.dim)])
            _, best = self.geom.best_response(totals)
            out[r] = learner - float(best) if len(F) else 0.0
        return out
