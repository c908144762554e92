"""Contraction constants, rate bounds and empirical contraction estimates."""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .graph import Graph
from .mixing import (Scheme, SchemeSpec, load_balancing_candidates, step, step_load_balancing,
                     step_local_max_gossip, step_randomized_gossip)
from .netstate import lyapunov

EXACT_ENUMERATION_MAX_N = 20
# load-balancing tie-break combinations enumerated before falling back to sampling
EXACT_LB_MAX_OUTCOMES = 4096


def delta_for(scheme: SchemeSpec | Scheme | str, g: Graph) -> float:
    """Guaranteed expected mixing weight on the max-edge for ``scheme`` on ``g``."""
    spec = scheme if isinstance(scheme, SchemeSpec) else SchemeSpec(Scheme(scheme))
    n = g.n
    if spec.kind is Scheme.RANDOMIZED_GOSSIP:
        p_min = min(float(p.min()) for p in spec.probs(g))
        return p_min / n
    if spec.kind is Scheme.LOCAL_MAX_GOSSIP:
        return 1.0 / n
    if spec.kind is Scheme.GLOBAL_MAX_GOSSIP:
        return 0.5
    return 1.0 / (2 * (n - 1) ** 2)


def _contraction_gap(delta: float, n: int, diam: int) -> float:
    if not 0.0 < delta <= 0.5:
        raise ValueError(f"delta must lie in (0, 1/2], got {delta}")
    if n < 2 or diam < 1:
        raise ValueError(f"need n >= 2 and diam >= 1, got n={n}, diam={diam}")
    return 2.0 * delta / ((n - 1) * diam ** 2)


def lambda_for(delta: float, n: int, diam: int) -> float:
    """Contraction factor ``1 - 2 delta / ((n - 1) diam^2)``.

    Two-node graphs give exactly 0 (one averaging step reaches consensus).
    """
    lam = 1.0 - _contraction_gap(delta, n, diam)
    if not 0.0 <= lam < 1.0:
        raise ValueError(f"contraction factor {lam} outside [0, 1)")
    return lam


def _k_from_gap(gap: float) -> float:
    # sqrt(lam) / (1 - sqrt(lam)) rewritten to avoid cancellation when lam ~ 1
    r = math.sqrt(1.0 - gap)
    return r * (1.0 + r) / gap


def rate_constants(lam: float) -> tuple[float, float]:
    """``K1 = K2 = sqrt(lam) / (1 - sqrt(lam))``."""
    if not 0.0 <= lam < 1.0:
        raise ValueError(f"lambda must lie in [0, 1), got {lam}")
    k = _k_from_gap(1.0 - lam)
    return k, k


def corollary_bound(scheme: Scheme | str, n: int, diam: int) -> float:
    """Published closed-form upper bound on ``K1 = K2`` per scheme.

    Note: for load balancing the published bound ``(n-1)^3 diam^2`` is not
    valid; see :func:`valid_rate_constant_bound`.
    """
    kind = Scheme(scheme)
    base = (n - 1) * diam ** 2
    return {
        Scheme.RANDOMIZED_GOSSIP: n * n * base,
        Scheme.LOCAL_MAX_GOSSIP: n * base,
        Scheme.GLOBAL_MAX_GOSSIP: 2 * base,
        Scheme.LOAD_BALANCING: (n - 1) ** 2 * base,
    }[kind]


def valid_rate_constant_bound(delta: float, n: int, diam: int) -> float:
    """``2 / (1 - lam)``, which always dominates ``sqrt(lam) / (1 - sqrt(lam))``."""
    return (n - 1) * diam ** 2 / delta


@dataclass(frozen=True)
class ContractionReport:
    scheme: str
    n: int
    diam: int
    delta: float
    lam: float
    K1: float
    K2: float

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def contraction_report(scheme: SchemeSpec | Scheme | str, g: Graph) -> ContractionReport:
    spec = scheme if isinstance(scheme, SchemeSpec) else SchemeSpec(Scheme(scheme))
    delta = delta_for(spec, g)
    lam = lambda_for(delta, g.n, g.diameter)
    k = _k_from_gap(_contraction_gap(delta, g.n, g.diameter))
    return ContractionReport(spec.kind.value, g.n, g.diameter, delta, lam, k, k)


@dataclass(frozen=True)
class RateBounds:
    L: float  # subgradient norm bound
    mean_gap: float  # |xbar(0) - w*|
    spread: float  # |X(0) - Xbar(0)|_F


def rate_envelope(scheme: SchemeSpec | Scheme | str, g: Graph, bounds: RateBounds, t: int) -> float:
    """Upper bound on ``F(time-averaged w_i(t+1)) - F*`` under ``alpha(t) = 1/sqrt(t)``."""
    if t < 1:
        raise ValueError("t must be >= 1")
    if min(bounds.L, bounds.mean_gap, bounds.spread) < 0:
        raise ValueError("bounds must be nonnegative")
    n = g.n
    report = contraction_report(scheme, g)
    K1, K2 = report.K1, report.K2
    L = bounds.L
    root = math.sqrt(t + 1)
    c = 2.0 * math.sqrt(n) + 1.0
    return (n / 2.0 * bounds.mean_gap / root
            + L * L * (1.0 + math.log(t + 1)) / (2.0 * n * root)
            + L * c * K1 * bounds.spread / root
            + L * L * K2 * c * (1.0 + math.log(t)) / root)


def _lb_outcomes(g: Graph, X: np.ndarray):
    """Yield ``(probability, ack_mask)`` for every load-balancing tie-break."""
    cand = load_balancing_candidates(g, X)
    choices = []
    for i in range(g.n):
        lo, hi = g.indptr[i], g.indptr[i + 1]
        arcs = lo + np.flatnonzero(cand[lo:hi])
        if arcs.size > 1:
            choices.append(arcs)
    if not choices:
        yield 1.0, cand
        return
    p = 1.0 / math.prod(a.size for a in choices)
    for pick in itertools.product(*choices):
        ack = cand.copy()
        for arcs, keep in zip(choices, pick):
            ack[arcs] = False
            ack[keep] = True
        yield p, ack


def lb_outcome_count(g: Graph, X: np.ndarray) -> int:
    """Number of equally likely acknowledgement patterns in a load-balancing round."""
    cand = load_balancing_candidates(g, X)
    counts = np.add.reduceat(cand.astype(np.intp), g.indptr[:-1])
    return math.prod(int(c) for c in counts if c > 1)


def exact_expected_ratio(g: Graph, X: np.ndarray, scheme: SchemeSpec | Scheme | str) -> float:
    """``E[V(A X)] / V(X)`` by enumerating every activation or tie-break."""
    spec = scheme if isinstance(scheme, SchemeSpec) else SchemeSpec(Scheme(scheme))
    v0 = lyapunov(X)
    if v0 == 0.0:
        raise ValueError("zero Lyapunov: state is already at consensus")
    n = g.n
    total = 0.0
    if spec.kind is Scheme.RANDOMIZED_GOSSIP:
        for s, (nb, probs) in enumerate(zip(g.neighbors, spec.probs(g)), start=1):
            for j, p in zip(nb, probs):
                W, _ = step_randomized_gossip(g, X, spec, activation=(s, j))
                total += p / n * lyapunov(W)
    elif spec.kind is Scheme.LOCAL_MAX_GOSSIP:
        for s in range(1, n + 1):
            W, _ = step_local_max_gossip(g, X, activation=s)
            total += lyapunov(W) / n
    elif spec.kind is Scheme.GLOBAL_MAX_GOSSIP:
        W, _ = step(g, X, spec)
        total = lyapunov(W)
    else:
        for p, ack in _lb_outcomes(g, X):
            W, _ = step_load_balancing(g, X, acks=ack)
            total += p * lyapunov(W)
    return total / v0


def estimate_contraction(g: Graph, X: np.ndarray, scheme: SchemeSpec | Scheme | str,
                         samples: int, rng: np.random.Generator | None = None,
                         method: str = "auto") -> tuple[float, float]:
    """Mean and standard error of ``V(step(X)) / V(X)`` at a fixed state.

    With ``method="auto"`` the expectation is enumerated exactly (zero
    standard error) for Global Max-Gossip, for the other gossip schemes on at
    most ``EXACT_ENUMERATION_MAX_N`` nodes, and for load balancing when at
    most ``EXACT_LB_MAX_OUTCOMES`` tie-break patterns exist. ``"sample"``
    forces Monte Carlo and ``"exact"`` forces enumeration.
    """
    if method not in ("auto", "exact", "sample"):
        raise ValueError(f"unknown method {method!r}")
    spec = scheme if isinstance(scheme, SchemeSpec) else SchemeSpec(Scheme(scheme))
    if samples < 1:
        raise ValueError("samples must be >= 1")
    v0 = lyapunov(X)
    if v0 == 0.0:
        raise ValueError("zero Lyapunov: state is already at consensus")
    if spec.kind is Scheme.GLOBAL_MAX_GOSSIP:
        auto_exact = True
    elif spec.kind is Scheme.LOAD_BALANCING:
        auto_exact = lb_outcome_count(g, X) <= EXACT_LB_MAX_OUTCOMES
    else:
        auto_exact = g.n <= EXACT_ENUMERATION_MAX_N
    exact = method == "exact" or (method == "auto" and auto_exact)
    if exact:
        return exact_expected_ratio(g, X, spec), 0.0
    rng = np.random.default_rng() if rng is None else rng
    ratios = np.empty(samples)
    for k in range(samples):
        W, _ = step(g, X, spec, rng)
        ratios[k] = lyapunov(W) / v0
    se = float(ratios.std(ddof=1) / math.sqrt(samples)) if samples > 1 else 0.0
    return float(ratios.mean()), se
