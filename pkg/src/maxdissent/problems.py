"""Local objectives ``f_i`` with subgradient oracles.

Every problem exposes vectorized ``values(W)`` / ``subgradients(W)`` over all
agents (row ``i - 1`` of ``W`` is agent ``i``'s point) plus the global
objective ``F(w) = sum_i f_i(w)``. Agent ids in the module-level helpers are
1-based.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

ML_PRECISION_FLOOR = 1e-9


class Problem:
    kind: str
    n: int
    d: int
    # whether every f_i has uniformly bounded subgradients
    bounded_subgradients: bool = False

    def values(self, W: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def subgradients(self, W: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def objective(self, w) -> float:
        w = np.asarray(w, dtype=np.float64).reshape(self.d)
        return float(self.values(np.broadcast_to(w, (self.n, self.d))).sum())

    def optimum(self) -> np.ndarray | None:
        return None

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class ConstantProblem(Problem):
    """``f_i(w) = value`` for every agent: the run reduces to pure averaging."""

    n: int
    d: int = 1
    value: float = 0.0
    kind = "constant"
    bounded_subgradients = True

    def values(self, W):
        return np.full(W.shape[0], self.value)

    def subgradients(self, W):
        return np.zeros_like(W)

    def to_dict(self):
        return {"kind": self.kind, "n": self.n, "d": self.d, "value": self.value}


@dataclass(frozen=True, eq=False)
class MLEstimationProblem(Problem):
    """Distributed maximum-likelihood estimation, ``f_i(w) = (w - c_i)^2 / sigma_i^2``."""

    c: np.ndarray
    sigma2: np.ndarray
    kind = "ml_estimation"

    def __post_init__(self):
        c = np.asarray(self.c, dtype=np.float64).ravel()
        s2 = np.asarray(self.sigma2, dtype=np.float64).ravel()
        if c.shape != s2.shape:
            raise ValueError("c and sigma2 must have the same length")
        if not (s2 > 0).all():
            raise ValueError("every sigma_i^2 must be positive")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "sigma2", s2)
        object.__setattr__(self, "_precision", 1.0 / s2)

    @property
    def n(self) -> int:
        return self.c.size

    @property
    def d(self) -> int:
        return 1

    def values(self, W):
        r = W[:, 0] - self.c
        return r * r * self._precision

    def subgradients(self, W):
        return (2.0 * (W[:, 0] - self.c) * self._precision)[:, None]

    def optimum(self):
        p = self._precision
        return np.array([(self.c * p).sum() / p.sum()])

    def to_dict(self):
        return {"kind": self.kind, "c": self.c.tolist(), "sigma2": self.sigma2.tolist()}


@dataclass(frozen=True, eq=False)
class LogisticProblem(Problem):
    """Regularized logistic regression with the samples sharded across agents.

    The global loss over ``m`` pooled samples is

        J(w, b) = (1/m) sum_j [log(1 + exp(z_j)) - y_j z_j]
                  + reg * (|w|^2 + b^2),     z_j = x_j . w + b,

    and agent ``i`` owns the terms of its shard plus ``1/n`` of the
    regularizer. Agent points are ``(w, b)`` concatenated, bias last.
    """

    features: np.ndarray  # (n, k, feature_dim)
    labels: np.ndarray  # (n, k), values in {0, 1}
    reg: float | None = None
    kind = "logistic"

    def __post_init__(self):
        F = np.asarray(self.features, dtype=np.float64)
        y = np.asarray(self.labels, dtype=np.float64)
        if F.ndim != 3 or y.shape != F.shape[:2]:
            raise ValueError("features must be (n, k, dim) with labels (n, k)")
        if F.shape[1] < 1:
            raise ValueError("every agent must hold at least one sample")
        if not np.isin(y, (0.0, 1.0)).all():
            raise ValueError("labels must be 0 or 1")
        m = F.shape[0] * F.shape[1]
        object.__setattr__(self, "features", F)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "reg", 1.0 / (2 * m) if self.reg is None else float(self.reg))
        if self.reg < 0:
            raise ValueError("reg must be nonnegative")

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def m(self) -> int:
        return self.features.shape[0] * self.features.shape[1]

    @property
    def d(self) -> int:
        return self.features.shape[2] + 1

    def _logits(self, W):
        return np.einsum("nkf,nf->nk", self.features, W[:, :-1]) + W[:, -1:]

    def values(self, W):
        z = self._logits(W)
        data = (np.logaddexp(0.0, z) - self.labels * z).sum(axis=1) / self.m
        return data + self.reg / self.n * np.einsum("ij,ij->i", W, W)

    def subgradients(self, W):
        z = self._logits(W)
        resid = 1.0 / (1.0 + np.exp(-z)) - self.labels
        G = np.empty_like(W)
        G[:, :-1] = np.einsum("nk,nkf->nf", resid, self.features) / self.m
        G[:, -1] = resid.sum(axis=1) / self.m
        return G + 2.0 * self.reg / self.n * W

    def pooled_loss(self, w) -> float:
        """``J`` evaluated centrally over all samples at once."""
        w = np.asarray(w, dtype=np.float64)
        X = self.features.reshape(self.m, -1)
        y = self.labels.reshape(self.m)
        z = X @ w[:-1] + w[-1]
        return float((np.logaddexp(0.0, z) - y * z).mean() + self.reg * (w @ w))

    def to_dict(self):
        return {"kind": self.kind, "features": self.features.tolist(),
                "labels": self.labels.astype(int).tolist(), "reg": self.reg}


def _check_point(p: Problem, w) -> np.ndarray:
    w = np.asarray(w, dtype=np.float64).ravel()
    if w.size != p.d:
        raise ValueError(f"point has dimension {w.size}, problem has d={p.d}")
    return w


def local_value(p: Problem, i: int, w) -> float:
    w = _check_point(p, w)
    W = np.broadcast_to(w, (p.n, p.d))
    return float(p.values(W)[i - 1])


def subgradient(p: Problem, i: int, w) -> np.ndarray:
    """A subgradient of agent ``i``'s objective at ``w``."""
    w = _check_point(p, w)
    W = np.broadcast_to(w, (p.n, p.d))
    return p.subgradients(W)[i - 1].copy()


def optimum(p: Problem) -> np.ndarray | None:
    """Closed-form minimizer of ``F`` when one exists, else ``None``."""
    return p.optimum()


def generate_ml_instance(n: int, theta0: float = 1.0,
                         rng_seed: int | np.random.SeedSequence | None = None) -> MLEstimationProblem:
    """Noisy measurements ``c_i = theta0 + noise_i`` with ``1/sigma_i^2 ~ U(0, 1)``."""
    if n < 2:
        raise ValueError("need at least 2 agents")
    rng = np.random.default_rng(rng_seed)
    precision = rng.uniform(ML_PRECISION_FLOOR, 1.0, size=n)
    sigma2 = 1.0 / precision
    c = theta0 + rng.standard_normal(n) * np.sqrt(sigma2)
    return MLEstimationProblem(c, sigma2)


def generate_logistic_instance(n: int, samples_per_agent: int, feature_dim: int,
                               rng_seed: int | np.random.SeedSequence | None = None,
                               reg: float | None = None) -> LogisticProblem:
    """Two Gaussian blobs centred at ``+1`` and ``-1`` in every feature, sharded evenly."""
    if min(n, samples_per_agent, feature_dim) < 1:
        raise ValueError("n, samples_per_agent and feature_dim must be >= 1")
    rng = np.random.default_rng(rng_seed)
    y = rng.integers(0, 2, size=(n, samples_per_agent))
    centre = (2.0 * y - 1.0)[..., None]
    X = centre + rng.standard_normal((n, samples_per_agent, feature_dim))
    return LogisticProblem(X, y, reg)


def problem_from_dict(data: dict) -> Problem:
    kind = data.get("kind")
    if kind == "constant":
        return ConstantProblem(int(data["n"]), int(data.get("d", 1)), float(data.get("value", 0.0)))
    if kind == "ml_estimation":
        return MLEstimationProblem(np.array(data["c"]), np.array(data["sigma2"]))
    if kind == "logistic":
        return LogisticProblem(np.array(data["features"]), np.array(data["labels"]), data.get("reg"))
    raise ValueError(f"unknown problem kind {kind!r}")


def save_problem(path: str | Path, p: Problem) -> None:
    Path(path).write_text(json.dumps(p.to_dict()), encoding="utf-8")


def load_problem(path: str | Path) -> Problem:
    return problem_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
