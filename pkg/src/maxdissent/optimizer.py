"""State-dependent distributed subgradient iteration.

Each iteration first mixes, then takes a local subgradient step evaluated
at the mixed point:

    W(t+1) = A(t, X(t)) X(t)
    X(t+1) = W(t+1) - alpha(t+1) G(t+1),   G rows in the subdifferentials at W(t+1)
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Protocol

import numpy as np

from .graph import Graph
from .mixing import DEFAULT_BITS, BitCosts, MixEvent, SchemeSpec, step
from .netstate import as_state
from .problems import Problem

DIVERGENCE_LIMIT = 1e12
SNAPSHOT_BUDGET = 10_000


class DivergenceError(RuntimeError):
    def __init__(self, t: int, value: float, run_id: str | None = None):
        self.t = t
        self.value = value
        self.run_id = run_id
        where = f" in run {run_id}" if run_id else ""
        super().__init__(f"state diverged at t={t}{where}: max |entry| = {value:.3g} > {DIVERGENCE_LIMIT:g}")


@dataclass(frozen=True)
class StepSizeSchedule:
    kind: str = "inv_t"
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in ("inv_t", "inv_sqrt_t", "constant"):
            raise ValueError(f"unknown step-size kind {self.kind!r}")
        if self.scale < 0 or (self.scale == 0 and self.kind != "constant"):
            raise ValueError("scale must be positive (zero only for a constant schedule)")

    def __call__(self, t: int) -> float:
        if t < 1:
            raise ValueError("step sizes are indexed from t = 1")
        if self.kind == "inv_t":
            return self.scale / t
        if self.kind == "inv_sqrt_t":
            return self.scale / math.sqrt(t)
        return self.scale

    @property
    def diminishing(self) -> bool:
        """Non-summable and square-summable (only ``inv_t`` qualifies)."""
        return self.kind == "inv_t"


class MetricsSink(Protocol):
    def __call__(self, t: int, W: np.ndarray, X: np.ndarray, event: MixEvent) -> None: ...


@dataclass
class Trajectory:
    steps: int
    snapshot_every: int
    snapshot_t: np.ndarray  # iterations at which W was stored
    W_snapshots: np.ndarray  # (k, n, d)
    alphas: np.ndarray  # alpha(1..steps)
    W_final: np.ndarray
    X_final: np.ndarray


def default_snapshot_every(n: int, d: int, steps: int) -> int:
    if n * d <= SNAPSHOT_BUDGET:
        return 1
    return max(1, math.ceil(steps / SNAPSHOT_BUDGET))


def run(g: Graph, problem: Problem, scheme: SchemeSpec, schedule: StepSizeSchedule,
        X0, steps: int, rng_seed=None, metrics_sink: MetricsSink | None = None, *,
        snapshot_every: int | None = None, bits: BitCosts = DEFAULT_BITS,
        stepper: Callable | None = None, run_id: str | None = None) -> Trajectory:
    """Iterate the two-phase update ``steps`` times from ``X0``.

    ``snapshot_every=0`` disables W snapshots. ``stepper`` replaces the
    mixing step (signature ``stepper(X) -> (W, event)``), which lets tests
    force a fixed activation sequence.
    """
    X = as_state(X0, g.n).copy()
    if X.shape[1] != problem.d:
        raise ValueError(f"X0 has d={X.shape[1]}, problem has d={problem.d}")
    if problem.n != g.n:
        raise ValueError(f"problem has {problem.n} agents, graph has {g.n}")
    if steps < 1:
        raise ValueError("steps must be >= 1")
    scheme.validate(g)
    if snapshot_every is None:
        snapshot_every = default_snapshot_every(g.n, problem.d, steps)

    rng = np.random.default_rng(rng_seed)
    if stepper is None:
        def stepper(X):
            return step(g, X, scheme, rng, bits=bits)

    n_snap = steps // snapshot_every if snapshot_every else 0
    snaps = np.empty((n_snap, g.n, problem.d))
    snap_t = np.arange(1, n_snap + 1) * snapshot_every
    alphas = np.array([schedule(t) for t in range(1, steps + 1)])
    subgradients = problem.subgradients

    W = X
    k = 0
    for t in range(1, steps + 1):
        W, event = stepper(X)
        X_next = W - alphas[t - 1] * subgradients(W)
        peak = np.abs(X_next).max()
        if not peak <= DIVERGENCE_LIMIT:
            raise DivergenceError(t, float(peak), run_id)
        X = X_next
        if snapshot_every and t % snapshot_every == 0:
            snaps[k] = W
            k += 1
        if metrics_sink is not None:
            metrics_sink(t, W, X, event)

    return Trajectory(steps, snapshot_every, snap_t, snaps, alphas, W, X)


def time_averaged_iterate(traj: Trajectory, schedule: StepSizeSchedule | None = None,
                          upto: int | None = None) -> np.ndarray:
    """Step-size weighted average of each agent's mixed iterates ``W(1..upto)``."""
    if traj.snapshot_every != 1:
        raise ValueError("time averaging needs a W snapshot at every step")
    upto = traj.steps if upto is None else upto
    if not 1 <= upto <= traj.steps:
        raise ValueError(f"upto must lie in 1..{traj.steps}")
    if schedule is None:
        a = traj.alphas[:upto]
    else:
        a = np.array([schedule(t) for t in range(1, upto + 1)])
    return np.tensordot(a, traj.W_snapshots[:upto], axes=1) / a.sum()
