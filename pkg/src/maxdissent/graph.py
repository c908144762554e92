"""Undirected communication graphs.

Nodes are labelled ``1..n``. Alongside the labelled view (``edges``,
``neighbors``) every :class:`Graph` carries zero-based index arrays laid out
for the vectorized averaging kernels:

* ``edge_u``, ``edge_v``: endpoints of each edge, lexicographically sorted.
* ``arc_src``, ``arc_dst``: both orientations of every edge, sorted by
  ``(src, dst)``, so the arcs leaving node ``i`` are the contiguous slice
  ``indptr[i]:indptr[i + 1]``.
* ``arc_rev``: index of the reversed arc.
* ``arc_forward``: mask of arcs with ``src < dst`` (one per edge).
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

KINDS = ("complete", "line", "star", "barbell", "ladder", "erdos_renyi")
ER_MAX_TRIES = 1000


class GraphError(ValueError):
    """Raised for invalid or disconnected graphs."""


@dataclass(frozen=True, eq=False)
class Graph:
    n: int
    edges: tuple[tuple[int, int], ...]
    kind: str = "custom"
    neighbors: tuple[tuple[int, ...], ...] = field(init=False, repr=False)
    diameter: int = field(init=False)

    def __post_init__(self) -> None:
        if self.n < 2:
            raise GraphError(f"graph needs at least 2 nodes, got n={self.n}")
        canon = set()
        for i, j in self.edges:
            if i == j:
                raise GraphError(f"self-loop at node {i}")
            if not (1 <= i <= self.n and 1 <= j <= self.n):
                raise GraphError(f"edge {{{i},{j}}} outside 1..{self.n}")
            e = (min(i, j), max(i, j))
            if e in canon:
                raise GraphError(f"duplicate edge {{{e[0]},{e[1]}}}")
            canon.add(e)
        edges = tuple(sorted(canon))
        nbrs: list[list[int]] = [[] for _ in range(self.n + 1)]
        for i, j in edges:
            nbrs[i].append(j)
            nbrs[j].append(i)
        set_ = object.__setattr__
        set_(self, "edges", edges)
        set_(self, "neighbors", tuple(tuple(sorted(a)) for a in nbrs[1:]))

        ecc = [_bfs_eccentricity(self.neighbors, s) for s in range(1, self.n + 1)]
        if any(e is None for e in ecc):
            raise GraphError(f"{self.kind} graph on {self.n} nodes is disconnected")
        set_(self, "diameter", max(ecc))

        eu = np.array([i - 1 for i, _ in edges], dtype=np.intp)
        ev = np.array([j - 1 for _, j in edges], dtype=np.intp)
        arcs = sorted([(i, j) for i, j in edges] + [(j, i) for i, j in edges])
        pos = {a: k for k, a in enumerate(arcs)}
        src = np.array([a[0] - 1 for a in arcs], dtype=np.intp)
        dst = np.array([a[1] - 1 for a in arcs], dtype=np.intp)
        rev = np.array([pos[(b, a)] for a, b in arcs], dtype=np.intp)
        indptr = np.searchsorted(src, np.arange(self.n + 1)).astype(np.intp)
        for name, arr in (("edge_u", eu), ("edge_v", ev), ("arc_src", src),
                          ("arc_dst", dst), ("arc_rev", rev), ("indptr", indptr),
                          ("arc_forward", src < dst)):
            arr.setflags(write=False)
            set_(self, name, arr)

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def neighbors_of(self, i: int) -> tuple[int, ...]:
        return self.neighbors[i - 1]

    def has_edge(self, i: int, j: int) -> bool:
        return j in self.neighbors[i - 1]

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def to_edgelist(self) -> str:
        lines = [str(self.n)] + [f"{i} {j}" for i, j in self.edges]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_edgelist(cls, text: str, kind: str = "custom") -> "Graph":
        rows = [ln.split() for ln in text.splitlines() if ln.strip()]
        if not rows or len(rows[0]) != 1:
            raise GraphError("edge list must start with a line holding n")
        n = int(rows[0][0])
        edges = []
        for r in rows[1:]:
            if len(r) != 2:
                raise GraphError(f"malformed edge line: {' '.join(r)!r}")
            edges.append((int(r[0]), int(r[1])))
        return cls(n, tuple(edges), kind)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_edgelist(), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Graph":
        return cls.from_edgelist(Path(path).read_text(encoding="utf-8"))


def _bfs_eccentricity(neighbors, s: int) -> int | None:
    """Largest hop distance from ``s``; ``None`` if some node is unreachable."""
    n = len(neighbors)
    dist = [-1] * (n + 1)
    dist[s] = 0
    queue = deque([s])
    while queue:
        u = queue.popleft()
        for v in neighbors[u - 1]:
            if dist[v] < 0:
                dist[v] = dist[u] + 1
                queue.append(v)
    reached = dist[1:]
    if min(reached) < 0:
        return None
    return max(reached)


def diameter(g: Graph) -> int:
    """Longest shortest path (in hops) between any two nodes."""
    return g.diameter


def from_edges(n: int, edges: Iterable[tuple[int, int]], kind: str = "custom") -> Graph:
    return Graph(n, tuple((int(i), int(j)) for i, j in edges), kind)


def _complete(n: int) -> list[tuple[int, int]]:
    return list(itertools.combinations(range(1, n + 1), 2))


def _line(n: int) -> list[tuple[int, int]]:
    return [(i, i + 1) for i in range(1, n)]


def _star(n: int) -> list[tuple[int, int]]:
    return [(1, j) for j in range(2, n + 1)]


def _barbell(n: int) -> list[tuple[int, int]]:
    # blocks 1..k and 2k+1..3k, path k+1..2k attached to nodes k and 2k+1
    k = n // 3
    edges = list(itertools.combinations(range(1, k + 1), 2))
    edges += list(itertools.combinations(range(2 * k + 1, 3 * k + 1), 2))
    chain = [k, *range(k + 1, 2 * k + 1), 2 * k + 1]
    edges += list(zip(chain[:-1], chain[1:]))
    return edges


def _ladder(n: int) -> list[tuple[int, int]]:
    k = n // 2
    edges = [(i, i + 1) for i in range(1, k)]
    edges += [(i, i + 1) for i in range(k + 1, 2 * k)]
    edges += [(i, i + k) for i in range(1, k + 1)]
    return edges


def make_graph(kind: str, n: int, p: float | None = None,
               rng_seed: int | np.random.SeedSequence | None = None) -> Graph:
    """Build a connected graph of the named family.

    ``p`` is required for ``erdos_renyi`` and rejected otherwise. Erdos-Renyi
    samples are redrawn until connected (at most ``ER_MAX_TRIES`` draws),
    deterministically for a given ``rng_seed``.
    """
    if kind not in KINDS:
        raise GraphError(f"unknown graph kind {kind!r}; expected one of {KINDS}")
    if n < 2:
        raise GraphError(f"n must be >= 2, got {n}")
    if (p is not None) != (kind == "erdos_renyi"):
        raise GraphError("p must be given for erdos_renyi and only for erdos_renyi")

    if kind == "complete":
        edges = _complete(n)
    elif kind == "line":
        edges = _line(n)
    elif kind == "star":
        edges = _star(n)
    elif kind == "barbell":
        if n % 3 != 0 or n < 6:
            raise GraphError(f"barbell needs n divisible by 3 and n >= 6, got {n}")
        edges = _barbell(n)
    elif kind == "ladder":
        if n % 2 != 0 or n < 4:
            raise GraphError(f"ladder needs even n >= 4, got {n}")
        edges = _ladder(n)
    else:
        if not (0.0 < p <= 1.0):
            raise GraphError(f"p must lie in (0, 1], got {p}")
        rng = np.random.default_rng(rng_seed)
        iu, ju = np.triu_indices(n, k=1)
        for _ in range(ER_MAX_TRIES):
            keep = rng.random(iu.size) < p
            try:
                return Graph(n, tuple(zip((iu[keep] + 1).tolist(), (ju[keep] + 1).tolist())), kind)
            except GraphError:
                continue
        raise GraphError(f"no connected G({n}, {p}) sample in {ER_MAX_TRIES} draws")
    return Graph(n, tuple(edges), kind)
