"""Network state matrices and the quantities derived from them.

A state matrix is a plain ``(n, d)`` float array whose row ``i - 1`` holds
agent ``i``'s estimate. Maximizations compare squared distances with exact
equality, so tie-breaking is reproducible bit for bit.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .graph import Graph


class EdgeChoice(NamedTuple):
    i: int
    j: int


def as_state(X, n: int | None = None) -> np.ndarray:
    """Validate and coerce to an ``(n, d)`` float64 array (1-D input becomes d=1)."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
        raise ValueError(f"state matrix must be (n, d) with n, d >= 1, got shape {X.shape}")
    if n is not None and X.shape[0] != n:
        raise ValueError(f"state has {X.shape[0]} rows, graph has {n} nodes")
    if not np.isfinite(X).all():
        raise ValueError("state matrix contains non-finite entries")
    return X


def lyapunov(X: np.ndarray) -> float:
    """Sum of squared deviations of the rows from their mean."""
    D = X - X.mean(axis=0)
    return float(np.einsum("ij,ij->", D, D))


def pair_distance(X: np.ndarray, i: int, j: int) -> float:
    diff = X[i - 1] - X[j - 1]
    return float(np.sqrt(diff @ diff))


def _edge_sq_gaps(g: Graph, X: np.ndarray) -> np.ndarray:
    diff = X[g.edge_u] - X[g.edge_v]
    return np.einsum("ij,ij->i", diff, diff)


def _arc_sq_gaps(g: Graph, X: np.ndarray) -> np.ndarray:
    diff = X[g.arc_src] - X[g.arc_dst]
    return np.einsum("ij,ij->i", diff, diff)


def max_distance_any(X: np.ndarray) -> float:
    """Largest distance between the estimates of any two agents."""
    best = 0.0
    for k in range(X.shape[0] - 1):
        diff = X[k + 1:] - X[k]
        best = max(best, float(np.einsum("ij,ij->i", diff, diff).max()))
    return float(np.sqrt(best))


def max_distance_edge(g: Graph, X: np.ndarray) -> float:
    """Largest distance between the estimates of two adjacent agents."""
    return float(np.sqrt(_edge_sq_gaps(g, X).max()))


def max_edge(g: Graph, X: np.ndarray) -> EdgeChoice:
    """Edge with the largest estimate gap; ties go to the lexicographically smallest."""
    k = int(np.argmax(_edge_sq_gaps(g, X)))
    return EdgeChoice(int(g.edge_u[k]) + 1, int(g.edge_v[k]) + 1)


def local_max_neighbor(g: Graph, X: np.ndarray, s: int) -> int:
    """Neighbor of ``s`` farthest from it; ties go to the smallest index."""
    lo, hi = g.indptr[s - 1], g.indptr[s]
    nb = g.arc_dst[lo:hi]
    diff = X[nb] - X[s - 1]
    return int(nb[np.argmax(np.einsum("ij,ij->i", diff, diff))]) + 1


def max_dissent_set(g: Graph, X: np.ndarray, i: int) -> frozenset[int]:
    """All neighbors of ``i`` attaining the maximal distance (no tie-breaking)."""
    lo, hi = g.indptr[i - 1], g.indptr[i]
    nb = g.arc_dst[lo:hi]
    diff = X[nb] - X[i - 1]
    sq = np.einsum("ij,ij->i", diff, diff)
    return frozenset((nb[sq == sq.max()] + 1).tolist())


def state_to_csv(X: np.ndarray) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["agent"] + [f"x{k + 1}" for k in range(X.shape[1])])
    for i, row in enumerate(X, start=1):
        w.writerow([i] + [repr(float(v)) for v in row])
    return buf.getvalue()


def state_from_csv(text: str) -> np.ndarray:
    rows = list(csv.reader(io.StringIO(text)))
    header, body = rows[0], [r for r in rows[1:] if r]
    if not header or header[0] != "agent":
        raise ValueError("state CSV must start with an 'agent' column")
    agents = [int(r[0]) for r in body]
    if agents != list(range(1, len(body) + 1)):
        raise ValueError("state CSV rows must list agents 1..n in order")
    return as_state([[float(v) for v in r[1:]] for r in body])


def write_state(path: str | Path, X: np.ndarray) -> None:
    Path(path).write_text(state_to_csv(X), encoding="utf-8")


def read_state(path: str | Path) -> np.ndarray:
    return state_from_csv(Path(path).read_text(encoding="utf-8"))
