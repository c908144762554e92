"""Independent reference implementations used as test oracles.

Nothing here calls into the package's numeric kernels: graphs are plain
edge lists, distances are recomputed pair by pair, and load balancing is
simulated as literal message passing.
"""

from __future__ import annotations

import itertools
import math
from collections import deque

import numpy as np

from maxdissent.graph import Graph, from_edges, make_graph


def bfs_diameter(n: int, edges) -> int:
    adj = {i: set() for i in range(1, n + 1)}
    for i, j in edges:
        adj[i].add(j)
        adj[j].add(i)
    best = 0
    for s in adj:
        dist = {s: 0}
        q = deque([s])
        while q:
            u = q.popleft()
            for v in adj[u]:
                if v not in dist:
                    dist[v] = dist[u] + 1
                    q.append(v)
        assert len(dist) == n, "graph is disconnected"
        best = max(best, max(dist.values()))
    return best


def pairwise_lyapunov(X) -> float:
    """``(1/n) sum_{i<j} |x_i - x_j|^2``."""
    n = len(X)
    total = math.fsum(float(np.sum((X[i] - X[j]) ** 2)) for i, j in itertools.combinations(range(n), 2))
    return total / n


def sq(X, i, j) -> float:
    """Squared distance between 1-indexed agents."""
    return float(np.sum((X[i - 1] - X[j - 1]) ** 2))


def brute_max_any(X) -> float:
    n = len(X)
    return math.sqrt(max((sq(X, i, j) for i in range(1, n + 1) for j in range(1, n + 1)), default=0.0))


def brute_max_edge(g: Graph, X):
    """Lexicographically first edge attaining the largest gap."""
    best, arg = -1.0, None
    for i, j in sorted(g.edges):
        v = sq(X, i, j)
        if v > best:
            best, arg = v, (i, j)
    return arg, math.sqrt(best)


def brute_S(g: Graph, X, i: int) -> set[int]:
    nb = g.neighbors_of(i)
    m = max(sq(X, i, r) for r in nb)
    return {r for r in nb if sq(X, i, r) == m}


def brute_local_max(g: Graph, X, s: int) -> int:
    nb = sorted(g.neighbors_of(s))
    m = max(sq(X, s, r) for r in nb)
    return min(r for r in nb if sq(X, s, r) == m)


def lb_message_passing(g: Graph, X, rng=None, est_bits=32, ack_bits=1):
    """Literal request/acknowledge round.

    Returns ``(new_state, averaged_pairs, bits)``. Tie-breaks draw
    ``rng.integers(k)`` over the sorted candidate list, agents in ascending
    order, so the same generator reproduces the package's choices.
    """
    n = g.n
    S = {i: brute_S(g, X, i) for i in range(1, n + 1)}
    inbox = {i: [] for i in range(1, n + 1)}
    for i in range(1, n + 1):
        for j in sorted(S[i]):
            inbox[j].append(i)
    acked = {}
    for i in range(1, n + 1):
        eligible = sorted(j for j in inbox[i] if j in S[i])
        if not eligible:
            continue
        if len(eligible) == 1:
            acked[i] = eligible[0]
        else:
            acked[i] = eligible[int(rng.integers(len(eligible)))]
    pairs = sorted({(min(i, j), max(i, j)) for i, j in acked.items() if acked.get(j) == i})
    W = np.array(X, dtype=float, copy=True)
    for i, j in pairs:
        avg = (X[i - 1] + X[j - 1]) / 2
        W[i - 1] = avg
        W[j - 1] = avg
    bits = est_bits * sum(len(g.neighbors_of(i)) for i in range(1, n + 1)) + ack_bits * n + ack_bits * len(acked)
    return W, pairs, bits


def random_tree_graph(n: int, rng: np.random.Generator, extra: int = 0) -> Graph:
    edges = {(int(rng.integers(1, v)), v) for v in range(2, n + 1)}
    while extra > 0:
        i, j = sorted(int(x) for x in rng.choice(np.arange(1, n + 1), 2, replace=False))
        if (i, j) not in edges:
            edges.add((i, j))
            extra -= 1
        elif len(edges) == n * (n - 1) // 2:
            break
    return from_edges(n, edges, kind="random")


def random_graph(rng: np.random.Generator, n_min: int = 2, n_max: int = 15) -> Graph:
    """A connected graph from a random family with ``n_min <= n <= n_max``."""
    n = int(rng.integers(n_min, n_max + 1))
    kind = rng.choice(["complete", "line", "star", "barbell", "ladder", "erdos_renyi", "tree"])
    if kind == "barbell" and n >= 6:
        return make_graph("barbell", n - n % 3)
    if kind == "ladder" and n >= 4:
        return make_graph("ladder", n - n % 2)
    if kind == "erdos_renyi" and n >= 3:
        return make_graph("erdos_renyi", n, float(rng.uniform(0.3, 0.9)), rng_seed=int(rng.integers(2**31)))
    if kind == "tree":
        return random_tree_graph(n, rng, extra=int(rng.integers(0, n)))
    if kind in ("complete", "line", "star"):
        return make_graph(kind, n)
    return make_graph("line", n)


def random_state(rng: np.random.Generator, n: int, d: int | None = None, ties: bool | None = None):
    """Gaussian rows, or small integers (frequent exact ties) when ``ties``."""
    d = int(rng.integers(1, 4)) if d is None else d
    ties = bool(rng.random() < 0.3) if ties is None else ties
    if ties:
        return rng.integers(-3, 4, size=(n, d)).astype(float)
    return rng.standard_normal((n, d)) * float(rng.uniform(0.1, 10))


def ata_decrease(A, X) -> float:
    """``sum_{i<j} (A^T A)_ij |x_i - x_j|^2``."""
    C = A.T @ A
    diff = X[:, None, :] - X[None, :, :]
    D = np.einsum("ijk,ijk->ij", diff, diff)
    return math.fsum(np.triu(C * D, k=1).ravel())
