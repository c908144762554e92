from __future__ import annotations

import io
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from maxdissent.graph import make_graph
from maxdissent.metrics import (CSV_FIELDS, ExperimentRecord, Recorder, aggregate_runs,
                                optimality_error, read_records, record, records_from_csv,
                                records_to_csv, write_records)
from maxdissent.mixing import SchemeSpec, step_randomized_gossip
from maxdissent.netstate import lyapunov
from maxdissent.optimizer import StepSizeSchedule, run
from maxdissent.problems import ConstantProblem, generate_ml_instance


def test_error_at_optimum_is_zero():
    w = np.array([0.3, -2.0])
    assert record(0, np.tile(w, (4, 1)), None, w).error == 0.0


def test_two_agent_example():
    r = record(0, np.array([[0.0], [2.0]]), None, [1.0])
    assert r.error == pytest.approx(math.sqrt(2), rel=1e-15)
    assert r.network_variance == 2.0


def test_error_absent_without_optimum():
    assert record(0, np.zeros((3, 2)), None).error is None


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        record(0, np.zeros((3, 2)), None, [1.0])


def test_three_randomized_gossip_steps_cost_192_bits():
    g = make_graph("complete", 4)
    X = np.random.default_rng(0).standard_normal((4, 1))
    rng = np.random.default_rng(1)
    prev = record(0, X, None, scheme="randomized_gossip")
    for t in (1, 2, 3):
        X, ev = step_randomized_gossip(g, X, rng=rng)
        prev = record(t, X, ev, prev=prev)
    assert prev.cumulative_bits == 192 and prev.scheme == "randomized_gossip"


def test_recorder_inside_run():
    g = make_graph("line", 6)
    p = generate_ml_instance(6, rng_seed=0)
    X0 = np.random.default_rng(1).standard_normal((6, 1))
    rec = Recorder(X0, p.optimum(), every=5, scheme="load_balancing", run=2, seed=9, trace=io.StringIO())
    traj = run(g, p, SchemeSpec("load_balancing"), StepSizeSchedule(), X0, 20, 4, rec)
    assert [r.t for r in rec.records] == [0, 5, 10, 15, 20]
    assert rec.records[0].error == pytest.approx(optimality_error(X0, p.optimum()))
    last = rec.records[-1]
    assert last.network_variance == pytest.approx(lyapunov(traj.W_final), rel=1e-12)
    assert last.error == optimality_error(traj.W_final, p.optimum())
    bits = [r.cumulative_bits for r in rec.records]
    assert bits == sorted(bits) and bits[0] == 0
    lines = rec.trace.getvalue().splitlines()
    assert len(lines) == 20
    assert sum(json.loads(ln)["bits"] for ln in lines) == last.cumulative_bits
    assert {(r.scheme, r.run, r.seed) for r in rec.records} == {("load_balancing", 2, 9)}


def _series(errors, run=0, bits=64):
    return [ExperimentRecord(t, e, 2.0 * e, bits * t, "s", run, run) for t, e in enumerate(errors)]


def test_aggregate_examples():
    a = _series([4.0, 2.0, 1.0])
    assert [r.error for r in aggregate_runs([a, a])] == [4.0, 2.0, 1.0]
    m = aggregate_runs([_series([1.0, 1.0]), _series([3.0, 5.0], run=1)])
    assert [r.error for r in m] == [2.0, 3.0]
    assert [r.network_variance for r in m] == [4.0, 6.0]
    assert all(r.run == -1 for r in m)


def test_aggregate_rejects_mismatched_grids():
    with pytest.raises(ValueError):
        aggregate_runs([_series([1.0, 2.0]), _series([1.0])])
    with pytest.raises(ValueError):
        aggregate_runs([])


def test_csv_format_and_roundtrip(tmp_path):
    recs = [ExperimentRecord(0, 1.5, 2.25, 0, "global_max_gossip", 3, 7),
            ExperimentRecord(10, None, 0.1, 640, "global_max_gossip", 3, 7)]
    text = records_to_csv(recs)
    lines = text.split("\n")
    assert lines[0] == ",".join(CSV_FIELDS)
    assert lines[1] == "global_max_gossip,3,7,0,1.5,2.25,0"
    assert lines[2] == "global_max_gossip,3,7,10,,0.1,640"
    assert "\r" not in text
    assert records_from_csv(text) == recs
    write_records(tmp_path / "r.csv", recs)
    assert read_records(tmp_path / "r.csv") == recs
    with pytest.raises(ValueError):
        records_from_csv("a,b\n1,2\n")


def test_aggregate_matches_offline_recomputation(tmp_path):
    rng = np.random.default_rng(0)
    runs = [_series(list(rng.random(30) * 10), run=r, bits=int(rng.integers(60, 70))) for r in range(10)]
    for r, s in enumerate(runs):
        write_records(tmp_path / f"run{r}.csv", s)
    agg = aggregate_runs([read_records(tmp_path / f"run{r}.csv") for r in range(10)])
    raw = [list(csv_rows) for csv_rows in (read_records(tmp_path / f"run{r}.csv") for r in range(10))]
    for k, row in enumerate(agg):
        assert row.error == pytest.approx(sum(s[k].error for s in raw) / 10, rel=1e-14)
        assert row.cumulative_bits == pytest.approx(sum(s[k].cumulative_bits for s in raw) / 10, rel=1e-14)


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 8), st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_variance_matches_lyapunov(n, d, seed):
    W = np.random.default_rng(seed).standard_normal((n, d)) * 3
    assert record(0, W, None).network_variance == pytest.approx(lyapunov(W), rel=1e-12, abs=1e-300)
    P = np.full((n, n), 1 / n)
    assert record(0, W, None).network_variance == pytest.approx(np.linalg.norm(W - P @ W) ** 2, rel=1e-10)


def test_constant_problem_records_no_error():
    g = make_graph("star", 4)
    rec = Recorder(np.eye(4)[:, :2], None)
    run(g, ConstantProblem(4, 2), SchemeSpec("randomized_gossip"), StepSizeSchedule(), np.eye(4)[:, :2],
        3, 0, rec)
    assert all(r.error is None for r in rec.records)
    assert [r.cumulative_bits for r in rec.records] == [0, 64, 128, 192]
