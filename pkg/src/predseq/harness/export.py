"""CSV and JSON output for finished runs."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from ..errors import ExportError
from .ledger import COLUMNS

FORMATS = ("csv", "json")


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return "%.17g" % float(v)


def round_rows(ledger):
    """Yields per-round rows (replica-major) in COLUMNS order, with a trailing replica id."""
    if len(ledger) == 0:
        return
    loss = ledger.loss
    cum = ledger.cum_loss
    best = ledger.best_cum_loss
    reg = cum - best
    err = ledger.column("hint_error_sq")
    phase = ledger.column("phase").astype(int)
    flag = ledger.column("flag").astype(int)
    for r in range(ledger.replicas):
        for t in range(len(ledger)):
            yield (t + 1, loss[t, r], cum[t, r], best[t, r], reg[t, r], err[t, r],
                   int(phase[t, r]), int(flag[t, r]), r)


def write_csv(result, path) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(COLUMNS + ("replica",))
            for row in round_rows(result.ledger):
                w.writerow([_fmt(v) for v in row])
    except OSError as exc:
        raise ExportError(f"cannot write {path}: {exc}") from None
    return path


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if np.isfinite(v) else None
    return obj


def write_json(result, path) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(_plain(result.summary()), indent=2, sort_keys=True))
    except OSError as exc:
        raise ExportError(f"cannot write {path}: {exc}") from None
    return path


def export(result, out_dir, fmt: str = "csv") -> list:
    """Write ``rounds.csv`` and/or ``summary.json`` into ``out_dir``.

    The JSON summary is always written; ``fmt="csv"`` adds the per-round table.
    """
    if fmt not in FORMATS:
        raise ExportError(f"format must be one of {FORMATS}")
    out = Path(out_dir)
    if out.exists() and not out.is_dir():
        raise ExportError(f"{out} exists and is not a directory")
    written = []
    if fmt == "csv":
        written.append(write_csv(result, out / "rounds.csv"))
    written.append(write_json(result, out / "summary.json"))
    return written
