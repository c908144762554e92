"""Experiment configuration and orchestration.

The problem instance, graph and initial state are drawn once from
``base_seed``; run ``r`` of every scheme draws its activations from seed
``base_seed + r``. Outputs under the output directory::

    header.json                   config, contraction reports, w*
    graph.txt                     edge list
    problem.json                  problem instance
    initial_state.csv             X(0)
    runs/<scheme>_run<r>.csv      per-run metrics
    aggregate_<scheme>.csv        mean over runs
    trace/<scheme>_run<r>.jsonl   mixing events (optional)
"""

from __future__ import annotations

import io
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .graph import KINDS as GRAPH_KINDS
from .graph import Graph, make_graph
from .metrics import ExperimentRecord, Recorder, aggregate_runs, write_records
from .mixing import SCHEMES, BitCosts, Scheme, SchemeSpec
from .netstate import write_state
from .optimizer import DivergenceError, StepSizeSchedule, run
from .problems import ConstantProblem, Problem, generate_logistic_instance, generate_ml_instance
from .theory import contraction_report

log = logging.getLogger(__name__)

# spawn-key slot for run streams; slots 0-2 are graph, problem and X(0)
_RUN_STREAM = 3

_PROBLEM_KEYS = {
    "constant": {"kind", "d", "value"},
    "ml_estimation": {"kind", "theta0"},
    "logistic": {"kind", "samples_per_agent", "feature_dim", "reg"},
}


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    graph: dict
    schemes: list[str]
    problem: dict
    steps: int
    schedule: dict = field(default_factory=lambda: {"kind": "inv_t", "scale": 1.0})
    runs: int = 1
    base_seed: int = 0
    snapshot_every: int = 1
    output_path: str = "out"
    emit_trace: bool = False
    bit_constants: dict = field(default_factory=lambda: {"estimate_bits": 32, "ack_bits": 1})
    initial_state: str = "gaussian"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["scheme"] = d.pop("schemes")
        return d

    @property
    def bits(self) -> BitCosts:
        return BitCosts(**self.bit_constants)

    @property
    def step_schedule(self) -> StepSizeSchedule:
        return StepSizeSchedule(**self.schedule)


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ConfigError(msg)


def _int(value, name: str, lo: int) -> int:
    _require(isinstance(value, int) and not isinstance(value, bool), f"{name} must be an integer")
    _require(value >= lo, f"{name} must be ≥ {lo}")
    return value


def _check_keys(d, allowed: set[str], where: str) -> None:
    _require(isinstance(d, dict), f"{where} must be an object")
    extra = sorted(set(d) - allowed)
    _require(not extra, f"{where}: unknown key(s) {', '.join(extra)}")


def config_from_dict(raw: dict) -> ExperimentConfig:
    top = {"graph", "scheme", "problem", "schedule", "steps", "runs", "base_seed",
           "snapshot_every", "output_path", "emit_trace", "bit_constants", "initial_state"}
    _check_keys(raw, top, "config")
    for key in ("graph", "scheme", "problem", "steps"):
        _require(key in raw, f"{key} is required")

    graph = dict(raw["graph"]) if isinstance(raw["graph"], dict) else raw["graph"]
    _check_keys(graph, {"kind", "n", "p"}, "graph")
    _require(graph.get("kind") in GRAPH_KINDS, f"graph.kind must be one of {', '.join(GRAPH_KINDS)}")
    _int(graph.get("n"), "graph.n", 2)
    if graph["kind"] == "erdos_renyi":
        p = graph.get("p")
        _require(isinstance(p, (int, float)) and 0 < p <= 1, "graph.p must lie in (0, 1] for erdos_renyi")
    else:
        _require("p" not in graph, f"graph.p is only valid for erdos_renyi, not {graph['kind']}")
    if graph["kind"] == "barbell":
        _require(graph["n"] % 3 == 0 and graph["n"] >= 6, "graph.n must be a multiple of 3 (>= 6) for barbell")
    if graph["kind"] == "ladder":
        _require(graph["n"] % 2 == 0 and graph["n"] >= 4, "graph.n must be even (>= 4) for ladder")

    schemes = raw["scheme"]
    if isinstance(schemes, str):
        schemes = [schemes]
    _require(isinstance(schemes, list) and schemes, "scheme must be a non-empty list")
    for s in schemes:
        _require(s in SCHEMES, f"scheme: {s!r} is not one of {', '.join(SCHEMES)}")
    _require(len(set(schemes)) == len(schemes), "scheme: duplicate entries")

    problem = raw["problem"]
    _require(isinstance(problem, dict) and problem.get("kind") in _PROBLEM_KEYS,
             f"problem.kind must be one of {', '.join(_PROBLEM_KEYS)}")
    _check_keys(problem, _PROBLEM_KEYS[problem["kind"]], "problem")
    if problem["kind"] == "logistic":
        _int(problem.get("samples_per_agent"), "problem.samples_per_agent", 1)
        _int(problem.get("feature_dim"), "problem.feature_dim", 1)
    if problem["kind"] == "constant" and "d" in problem:
        _int(problem["d"], "problem.d", 1)

    schedule = {"kind": "inv_t", "scale": 1.0, **raw.get("schedule", {})}
    _check_keys(schedule, {"kind", "scale"}, "schedule")
    try:
        StepSizeSchedule(**schedule)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"schedule: {exc}") from None

    bits = {"estimate_bits": 32, "ack_bits": 1, **raw.get("bit_constants", {})}
    _check_keys(bits, {"estimate_bits", "ack_bits"}, "bit_constants")
    _int(bits["estimate_bits"], "bit_constants.estimate_bits", 0)
    _int(bits["ack_bits"], "bit_constants.ack_bits", 0)

    initial = raw.get("initial_state", "gaussian")
    _require(initial in ("gaussian", "zeros"), "initial_state must be 'gaussian' or 'zeros'")
    emit_trace = raw.get("emit_trace", False)
    _require(isinstance(emit_trace, bool), "emit_trace must be a boolean")
    output_path = raw.get("output_path", "out")
    _require(isinstance(output_path, str) and output_path, "output_path must be a non-empty string")

    return ExperimentConfig(
        graph=graph, schemes=list(schemes), problem=dict(problem),
        steps=_int(raw["steps"], "steps", 1), schedule=schedule,
        runs=_int(raw.get("runs", 1), "runs", 1),
        base_seed=_int(raw.get("base_seed", 0), "base_seed", 0),
        snapshot_every=_int(raw.get("snapshot_every", 1), "snapshot_every", 1),
        output_path=output_path, emit_trace=emit_trace, bit_constants=bits,
        initial_state=initial)


def load_config(source: str | Path) -> ExperimentConfig:
    """Parse a config from a file path or from inline JSON text."""
    text = str(source)
    if not text.lstrip().startswith("{"):
        text = Path(source).read_text(encoding="utf-8")
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from None
    return config_from_dict(raw)


@dataclass
class Setup:
    graph: Graph
    problem: Problem
    X0: np.ndarray
    w_star: np.ndarray | None


def build_setup(cfg: ExperimentConfig) -> Setup:
    graph_ss, problem_ss, x0_ss = np.random.SeedSequence(cfg.base_seed).spawn(3)
    gcfg = cfg.graph
    g = make_graph(gcfg["kind"], gcfg["n"], gcfg.get("p"), rng_seed=graph_ss)
    pcfg = cfg.problem
    if pcfg["kind"] == "constant":
        problem = ConstantProblem(g.n, pcfg.get("d", 1), float(pcfg.get("value", 0.0)))
    elif pcfg["kind"] == "ml_estimation":
        problem = generate_ml_instance(g.n, float(pcfg.get("theta0", 1.0)), rng_seed=problem_ss)
    else:
        problem = generate_logistic_instance(g.n, pcfg["samples_per_agent"], pcfg["feature_dim"],
                                             rng_seed=problem_ss, reg=pcfg.get("reg"))
    if cfg.initial_state == "zeros":
        X0 = np.zeros((g.n, problem.d))
    else:
        X0 = np.random.default_rng(x0_ss).standard_normal((g.n, problem.d))
    return Setup(g, problem, X0, problem.optimum())


def run_seed(cfg: ExperimentConfig, run_index: int) -> int:
    return cfg.base_seed + run_index


@dataclass
class RunResult:
    scheme: str
    run: int
    seed: int
    records: list[ExperimentRecord]
    trace: str | None = None
    error: str | None = None


def run_single(setup: Setup, cfg: ExperimentConfig, scheme: str, run_index: int,
               trace: bool = False) -> RunResult:
    seed = run_seed(cfg, run_index)
    buf = io.StringIO() if trace else None
    rec = Recorder(setup.X0, setup.w_star, cfg.snapshot_every,
                   scheme=scheme, run=run_index, seed=seed, trace=buf)
    run_id = f"{scheme}/run{run_index}"
    try:
        run(setup.graph, setup.problem, SchemeSpec(Scheme(scheme)), cfg.step_schedule,
            setup.X0, cfg.steps, np.random.SeedSequence(seed, spawn_key=(_RUN_STREAM,)), rec,
            snapshot_every=0, bits=cfg.bits, run_id=run_id)
    except DivergenceError as exc:
        return RunResult(scheme, run_index, seed, rec.records, error=str(exc))
    return RunResult(scheme, run_index, seed, rec.records, buf.getvalue() if buf else None)


def _run_job(args) -> RunResult:
    return run_single(*args)


def simulate(cfg: ExperimentConfig, setup: Setup | None = None, *, trace: bool = False,
             jobs: int = 1) -> tuple[Setup, dict[str, list[RunResult]]]:
    """Run every (scheme, run) pair; results are ordered by scheme then run index."""
    setup = build_setup(cfg) if setup is None else setup
    tasks = [(setup, cfg, s, r, trace) for s in cfg.schemes for r in range(cfg.runs)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_job, tasks))
    else:
        results = [_run_job(t) for t in tasks]
    by_scheme: dict[str, list[RunResult]] = {s: [] for s in cfg.schemes}
    for res in results:
        by_scheme[res.scheme].append(res)
    return setup, by_scheme


def build_header(cfg: ExperimentConfig, setup: Setup) -> dict:
    schedule = cfg.step_schedule
    return {
        "config": cfg.to_dict(),
        "graph": {"kind": setup.graph.kind, "n": setup.graph.n,
                  "edges": setup.graph.num_edges, "diameter": setup.graph.diameter},
        "problem": {"kind": setup.problem.kind, "d": setup.problem.d,
                    "bounded_subgradients": setup.problem.bounded_subgradients},
        "schedule": {"kind": schedule.kind, "scale": schedule.scale,
                     "diminishing": schedule.diminishing},
        "w_star": None if setup.w_star is None else setup.w_star.tolist(),
        "contraction": {s: contraction_report(s, setup.graph).to_dict() for s in cfg.schemes},
    }


def run_experiment(cfg: ExperimentConfig, out_dir: str | Path | None = None, *,
                   trace: bool | None = None, jobs: int = 1) -> int:
    """Run the experiment and write all outputs; returns 0 iff no run diverged."""
    out = Path(out_dir if out_dir is not None else cfg.output_path)
    trace = cfg.emit_trace if trace is None else trace
    setup, results = simulate(cfg, trace=trace, jobs=jobs)

    (out / "runs").mkdir(parents=True, exist_ok=True)
    header = build_header(cfg, setup)
    (out / "header.json").write_text(json.dumps(header, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    setup.graph.save(out / "graph.txt")
    (out / "problem.json").write_text(json.dumps(setup.problem.to_dict()) + "\n", encoding="utf-8")
    write_state(out / "initial_state.csv", setup.X0)
    if trace:
        (out / "trace").mkdir(exist_ok=True)

    failed = []
    for scheme, runs in results.items():
        for res in runs:
            write_records(out / "runs" / f"{scheme}_run{res.run:02d}.csv", res.records)
            if trace and res.trace is not None:
                (out / "trace" / f"{scheme}_run{res.run:02d}.jsonl").write_text(res.trace, encoding="utf-8")
            if res.error:
                log.error("%s", res.error)
                failed.append(res)
        if not any(r.error for r in runs):
            write_records(out / f"aggregate_{scheme}.csv", aggregate_runs([r.records for r in runs]))
    return 1 if failed else 0
