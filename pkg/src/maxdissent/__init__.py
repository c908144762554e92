"""Distributed subgradient optimization with state-dependent (max-dissent) gossip."""

from .graph import Graph, GraphError, make_graph
from .mixing import BitCosts, MixEvent, Scheme, SchemeSpec, step
from .optimizer import DivergenceError, StepSizeSchedule, run, time_averaged_iterate
from .problems import LogisticProblem, MLEstimationProblem, generate_logistic_instance, generate_ml_instance
from .theory import contraction_report, estimate_contraction, rate_envelope

__all__ = [
    "BitCosts", "DivergenceError", "Graph", "GraphError", "LogisticProblem",
    "MLEstimationProblem", "MixEvent", "Scheme", "SchemeSpec", "StepSizeSchedule",
    "contraction_report", "estimate_contraction", "generate_logistic_instance",
    "generate_ml_instance", "make_graph", "rate_envelope", "run", "step",
    "time_averaged_iterate",
]
