"""Per-iteration measurements and their CSV form."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .mixing import MixEvent
from .netstate import lyapunov

CSV_FIELDS = ("scheme", "run", "seed", "t", "error", "network_variance", "cumulative_bits")


@dataclass(frozen=True)
class ExperimentRecord:
    t: int
    error: float | None
    network_variance: float
    cumulative_bits: float  # integral per run; aggregates hold run means
    scheme: str = ""
    run: int = 0
    seed: int = 0


def optimality_error(W: np.ndarray, w_star) -> float:
    """``|| stacked W - 1 w* ||``."""
    D = W - np.asarray(w_star, dtype=np.float64).reshape(1, -1)
    return math.sqrt(float(np.einsum("ij,ij->", D, D)))


def _measure(W: np.ndarray, w_star) -> tuple[float | None, float]:
    if w_star is not None and np.size(w_star) != W.shape[1]:
        raise ValueError(f"w* has dimension {np.size(w_star)}, states have d={W.shape[1]}")
    err = None if w_star is None else optimality_error(W, w_star)
    return err, lyapunov(W)


def record(t: int, W: np.ndarray, ev: MixEvent | None, w_star=None,
           prev: ExperimentRecord | None = None, *, scheme: str = "",
           run: int = 0, seed: int = 0) -> ExperimentRecord:
    err, var = _measure(W, w_star)
    bits = (prev.cumulative_bits if prev is not None else 0) + (ev.bits if ev is not None else 0)
    if prev is not None:
        scheme, run, seed = prev.scheme, prev.run, prev.seed
    return ExperimentRecord(t, err, var, bits, scheme, run, seed)


class Recorder:
    """Metrics sink for :func:`maxdissent.optimizer.run`.

    Bits are accumulated every step; a record is kept at ``t = 0`` (from
    ``X0``) and then every ``every`` iterations.
    """

    def __init__(self, X0: np.ndarray, w_star=None, every: int = 1, *,
                 scheme: str = "", run: int = 0, seed: int = 0, trace=None):
        self.w_star = w_star
        self.every = max(1, int(every))
        self.trace = trace
        self._bits = 0
        self.records = [record(0, X0, None, w_star, scheme=scheme, run=run, seed=seed)]

    def __call__(self, t: int, W: np.ndarray, X: np.ndarray, event: MixEvent) -> None:
        self._bits += event.bits
        if self.trace is not None:
            self.trace.write(event.to_json(t) + "\n")
        if t % self.every == 0:
            first = self.records[0]
            err, var = _measure(W, self.w_star)
            self.records.append(ExperimentRecord(t, err, var, self._bits,
                                                 first.scheme, first.run, first.seed))


def aggregate_runs(series: Sequence[Sequence[ExperimentRecord]]) -> list[ExperimentRecord]:
    """Pointwise mean over runs that share an iteration grid."""
    if not series:
        raise ValueError("nothing to aggregate")
    grid = [r.t for r in series[0]]
    for s in series[1:]:
        if [r.t for r in s] != grid:
            raise ValueError("runs do not share an iteration grid")
    k = len(series)
    out = []
    for rows in zip(*series):
        errs = [r.error for r in rows]
        err = None if any(e is None for e in errs) else math.fsum(errs) / k
        out.append(ExperimentRecord(
            rows[0].t, err,
            math.fsum(r.network_variance for r in rows) / k,
            math.fsum(r.cumulative_bits for r in rows) / k,
            rows[0].scheme, -1, rows[0].seed))
    return out


def _fmt(v) -> str:
    if v is None:
        return ""
    v = float(v)
    if v.is_integer() and abs(v) < 2 ** 53:
        return str(int(v))
    return repr(v)


def records_to_csv(records: Sequence[ExperimentRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for r in records:
        w.writerow([r.scheme, r.run, r.seed, r.t, _fmt(r.error),
                    _fmt(r.network_variance), _fmt(r.cumulative_bits)])
    return buf.getvalue()


def records_from_csv(text: str) -> list[ExperimentRecord]:
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != CSV_FIELDS:
        raise ValueError(f"unexpected CSV header {reader.fieldnames}")
    out = []
    for row in reader:
        bits = float(row["cumulative_bits"])
        out.append(ExperimentRecord(
            int(row["t"]), float(row["error"]) if row["error"] else None,
            float(row["network_variance"]), int(bits) if bits.is_integer() else bits,
            row["scheme"], int(row["run"]), int(row["seed"])))
    return out


def write_records(path: str | Path, records: Sequence[ExperimentRecord]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(records_to_csv(records))


def read_records(path: str | Path) -> list[ExperimentRecord]:
    return records_from_csv(Path(path).read_text(encoding="utf-8"))
