"""One averaging round for each scheme.

Every step returns the new state together with a :class:`MixEvent` that
records which pairs averaged and how many bits the round cost. Averaging is
applied directly to the affected rows; :meth:`MixEvent.matrix` materializes
the equivalent ``n x n`` doubly stochastic matrix for audits.

Randomized steps accept an ``activation`` override so that a test can force
the draw instead of consuming the generator.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .graph import Graph
from .netstate import EdgeChoice, _arc_sq_gaps, _edge_sq_gaps


class Scheme(str, Enum):
    RANDOMIZED_GOSSIP = "randomized_gossip"
    LOCAL_MAX_GOSSIP = "local_max_gossip"
    GLOBAL_MAX_GOSSIP = "global_max_gossip"
    LOAD_BALANCING = "load_balancing"


SCHEMES = tuple(s.value for s in Scheme)


@dataclass(frozen=True)
class BitCosts:
    """Message sizes in bits: an estimate, and a one-bit control signal
    (wake-up, averaging request or acknowledgement)."""

    estimate_bits: int = 32
    ack_bits: int = 1


DEFAULT_BITS = BitCosts()


@dataclass(frozen=True, eq=False)
class SchemeSpec:
    kind: Scheme
    # per node, aligned with Graph.neighbors; None means uniform 1/|N_i|
    neighbor_probs: tuple[np.ndarray, ...] | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", Scheme(self.kind))
        if self.neighbor_probs is not None:
            if self.kind is not Scheme.RANDOMIZED_GOSSIP:
                raise ValueError("neighbor_probs only apply to randomized_gossip")
            probs = tuple(np.asarray(p, dtype=np.float64) for p in self.neighbor_probs)
            object.__setattr__(self, "neighbor_probs", probs)

    def validate(self, g: Graph) -> None:
        if self.neighbor_probs is None:
            return
        if len(self.neighbor_probs) != g.n:
            raise ValueError(f"neighbor_probs has {len(self.neighbor_probs)} rows, graph has {g.n} nodes")
        for i, (p, nb) in enumerate(zip(self.neighbor_probs, g.neighbors), start=1):
            if p.shape != (len(nb),):
                raise ValueError(f"node {i}: expected {len(nb)} probabilities, got {p.shape}")
            if (p <= 0).any():
                raise ValueError(f"node {i}: every neighbor needs positive probability")
            if abs(p.sum() - 1.0) > 1e-12:
                raise ValueError(f"node {i}: probabilities sum to {p.sum()!r}, not 1")

    def probs(self, g: Graph) -> tuple[np.ndarray, ...]:
        """Per-node neighbor selection probabilities (uniform when unset)."""
        if self.neighbor_probs is not None:
            return self.neighbor_probs
        return tuple(np.full(len(nb), 1.0 / len(nb)) for nb in g.neighbors)


@dataclass(frozen=True, slots=True)
class MixEvent:
    scheme: str
    pairs: tuple[EdgeChoice, ...]
    bits: int
    activated: int | None = None
    acks: int = 0

    @property
    def bits_exchanged(self) -> int:
        return self.bits

    @property
    def averaged_pairs(self) -> tuple[EdgeChoice, ...]:
        return self.pairs

    def matrix(self, n: int) -> np.ndarray:
        """The averaging matrix ``I - 1/2 sum (b_i - b_j)(b_i - b_j)^T``."""
        A = np.eye(n)
        for i, j in self.pairs:
            b = np.zeros(n)
            b[i - 1], b[j - 1] = 1.0, -1.0
            A -= 0.5 * np.outer(b, b)
        return A

    def to_json(self, t: int) -> str:
        return json.dumps({
            "t": t,
            "scheme": self.scheme,
            "activated": self.activated,
            "pairs": [[i, j] for i, j in self.pairs],
            "bits": self.bits,
        })


def gossip_matrix(e: Sequence[int], n: int) -> np.ndarray:
    """``B(e)``: identity except that agents ``i`` and ``j`` average."""
    i, j = e
    if not (1 <= i < j <= n):
        raise ValueError(f"need 1 <= i < j <= n, got ({i}, {j}) with n={n}")
    return MixEvent("gossip", (EdgeChoice(i, j),), 0).matrix(n)


def _average_pair(X: np.ndarray, a: int, b: int) -> np.ndarray:
    W = X.copy()
    avg = 0.5 * (X[a] + X[b])
    W[a] = avg
    W[b] = avg
    return W


def _edge(a: int, b: int) -> EdgeChoice:
    a, b = int(a), int(b)
    return EdgeChoice(a + 1, b + 1) if a < b else EdgeChoice(b + 1, a + 1)


def step_randomized_gossip(g: Graph, X: np.ndarray, spec: SchemeSpec | None = None,
                           rng: np.random.Generator | None = None, *,
                           activation: int | tuple[int, int] | None = None,
                           bits: BitCosts = DEFAULT_BITS) -> tuple[np.ndarray, MixEvent]:
    """A uniform node wakes up and averages with a neighbor drawn from its row of ``P``.

    ``activation`` forces the waking node ``s`` or the full pair ``(s, j)``.
    """
    if isinstance(activation, tuple):
        s, j = activation
        if not g.has_edge(s, j):
            raise ValueError(f"forced pair ({s}, {j}) is not an edge")
        s, j = s - 1, j - 1
    else:
        s = rng.integers(g.n) if activation is None else activation - 1
        lo = g.indptr[s]
        deg = g.indptr[s + 1] - lo
        if spec is None or spec.neighbor_probs is None:
            k = rng.integers(deg)
        else:
            cum = np.cumsum(spec.neighbor_probs[s])
            k = min(int(np.searchsorted(cum, rng.random() * cum[-1], side="right")), deg - 1)
        j = g.arc_dst[lo + k]
    W = _average_pair(X, s, j)
    return W, MixEvent(Scheme.RANDOMIZED_GOSSIP.value, (_edge(s, j),),
                       2 * bits.estimate_bits, activated=int(s) + 1)


def step_local_max_gossip(g: Graph, X: np.ndarray, rng: np.random.Generator | None = None, *,
                          activation: int | None = None,
                          bits: BitCosts = DEFAULT_BITS) -> tuple[np.ndarray, MixEvent]:
    """A uniform node wakes up and averages with its farthest neighbor."""
    s = rng.integers(g.n) if activation is None else activation - 1
    lo, hi = g.indptr[s], g.indptr[s + 1]
    nb = g.arc_dst[lo:hi]
    diff = X[nb] - X[s]
    j = nb[np.argmax(np.einsum("ij,ij->i", diff, diff))]
    W = _average_pair(X, s, j)
    deg = int(hi - lo)
    cost = deg * bits.ack_bits + deg * bits.estimate_bits + bits.estimate_bits
    return W, MixEvent(Scheme.LOCAL_MAX_GOSSIP.value, (_edge(s, j),), cost, activated=int(s) + 1)


def step_global_max_gossip(g: Graph, X: np.ndarray, *,
                           bits: BitCosts = DEFAULT_BITS) -> tuple[np.ndarray, MixEvent]:
    """Average across the max-edge of the whole graph; deterministic."""
    k = int(np.argmax(_edge_sq_gaps(g, X)))
    a, b = g.edge_u[k], g.edge_v[k]
    W = _average_pair(X, a, b)
    return W, MixEvent(Scheme.GLOBAL_MAX_GOSSIP.value, (EdgeChoice(int(a) + 1, int(b) + 1),),
                       2 * bits.estimate_bits)


def load_balancing_candidates(g: Graph, X: np.ndarray) -> np.ndarray:
    """Boolean mask over arcs: ``arc_src[a]`` may acknowledge ``arc_dst[a]``.

    Each agent requests averaging from every neighbor at maximal distance and
    considers only requests whose sender is itself at maximal distance, so
    arc ``i -> j`` qualifies iff ``j`` is in ``S_i`` and ``i`` is in ``S_j``.
    """
    sq = _arc_sq_gaps(g, X)
    node_max = np.maximum.reduceat(sq, g.indptr[:-1])
    in_s = sq == node_max[g.arc_src]
    return in_s & in_s[g.arc_rev]


def load_balancing_acks(g: Graph, X: np.ndarray,
                        rng: np.random.Generator | None = None) -> np.ndarray:
    """Acknowledgement mask: every agent acks one candidate request, uniformly.

    ``rng`` is consulted only for agents with more than one candidate, in
    ascending node order.
    """
    ack = load_balancing_candidates(g, X)
    counts = np.bincount(g.arc_src[ack], minlength=g.n)
    busy = np.flatnonzero(counts > 1)
    if busy.size:
        if rng is None:
            raise ValueError("load-balancing tie needs an rng to pick an acknowledgement")
        for i in busy:
            lo = g.indptr[i]
            cand = lo + np.flatnonzero(ack[lo:g.indptr[i + 1]])
            keep = cand[rng.integers(cand.size)]
            ack[cand] = False
            ack[keep] = True
    return ack


def step_load_balancing(g: Graph, X: np.ndarray, rng: np.random.Generator | None = None, *,
                        acks: np.ndarray | None = None,
                        bits: BitCosts = DEFAULT_BITS) -> tuple[np.ndarray, MixEvent]:
    """One synchronous request/acknowledge round; mutually acknowledged pairs average.

    ``acks`` forces the acknowledgement mask (arc-aligned, as returned by
    :func:`load_balancing_acks`).
    """
    ack = load_balancing_acks(g, X, rng) if acks is None else np.asarray(acks, dtype=bool)
    mutual = ack & ack[g.arc_rev] & g.arc_forward
    a = g.arc_src[mutual]
    b = g.arc_dst[mutual]
    W = X.copy()
    avg = 0.5 * (X[a] + X[b])
    W[a] = avg
    W[b] = avg
    n_acks = int(np.count_nonzero(ack))
    cost = bits.estimate_bits * len(g.arc_src) + bits.ack_bits * g.n + bits.ack_bits * n_acks
    pairs = tuple(map(EdgeChoice._make, zip((a + 1).tolist(), (b + 1).tolist())))
    return W, MixEvent(Scheme.LOAD_BALANCING.value, pairs, cost, acks=n_acks)


def step(g: Graph, X: np.ndarray, spec: SchemeSpec, rng: np.random.Generator | None = None, *,
         bits: BitCosts = DEFAULT_BITS) -> tuple[np.ndarray, MixEvent]:
    """Dispatch one averaging round of ``spec.kind``."""
    kind = spec.kind
    if kind is Scheme.RANDOMIZED_GOSSIP:
        return step_randomized_gossip(g, X, spec, rng, bits=bits)
    if kind is Scheme.LOCAL_MAX_GOSSIP:
        return step_local_max_gossip(g, X, rng, bits=bits)
    if kind is Scheme.GLOBAL_MAX_GOSSIP:
        return step_global_max_gossip(g, X, bits=bits)
    return step_load_balancing(g, X, rng, bits=bits)


def count_exchange_edges(ev: MixEvent) -> int:
    """Number of edges that exchanged estimates in this round."""
    return len(ev.pairs)
