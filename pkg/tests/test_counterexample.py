import math

import numpy as np
import pytest

from evoset.counterexample import (_mc_leaf_to_leaf, backbone_resistance, backbone_trace_check,
                                   build_counterexample, check_hitting_time_bound, drift_check,
                                   expected_hitting_times, full_binary_tree,
                                   max_expected_hitting_time, path_graph,
                                   per_start_entropy_rates, profiles_to_csv, rate_ordering,
                                   recurrence_diagnostics, tower_schedule)
from evoset.graphs import CapExceeded, PendantTowerGraph
from evoset.walks import finite_chain


def test_tower_schedule_and_vertex_count():
    sched = tower_schedule(2, 2)
    assert sched.heights == (2, 2)
    assert sched.vertex_count() == 16
    big = tower_schedule(20, 64)
    assert big.heights[:4] == (2, 4, 16, 20)
    assert list(big.heights) == sorted(big.heights)
    g = build_counterexample(12, 8)
    assert g.vertex_count() == tower_schedule(12, 8).vertex_count() == len(g.vertices())


def test_build_refuses_huge_graphs():
    with pytest.raises(CapExceeded):
        build_counterexample(20, 64)


def test_rates_positive_and_reported():
    g = build_counterexample(6, 5)
    profs = per_start_entropy_rates(g, ["pt:1", "pt:3", "pt:3/01"], 24)
    assert all(p.rate > 0 for p in profs)
    assert all(p.window == (12, 24) for p in profs)
    text = profiles_to_csv(profs)
    assert text.splitlines()[0] == "start,window_lo,window_hi,rate,tree_depth"
    assert text.splitlines()[3].endswith(",T3:2")
    assert sorted(rate_ordering(profs)) == ["pt:1", "pt:3", "pt:3/01"]
    with pytest.raises(ValueError):
        per_start_entropy_rates(g, ["pt:1"], 10, (5, 20))


def test_path_hitting_time_oracle():
    for i in (2, 5, 9):
        val, src, tgt = max_expected_hitting_time(path_graph(i))
        assert val == pytest.approx((i - 1) ** 2, rel=1e-10)
        assert {src, tgt} == {"1", str(i)}


def test_binary_tree_hitting_times():
    reports = check_hitting_time_bound([1, 3, 7, 15])
    assert [r.inputs["i"] for r in reports] == [1, 3, 7, 15]
    assert reports[0].lhs == 0
    assert all(r.passed for r in reports)
    assert reports[2].rhs == 98
    with pytest.raises(ValueError):
        check_hitting_time_bound([6])


def test_depth_representatives_cover_all_targets():
    tree = full_binary_tree(3)
    restricted = max_expected_hitting_time(tree, [str(2 ** k) for k in range(4)])[0]
    assert restricted == pytest.approx(max_expected_hitting_time(tree)[0], rel=1e-12)


def test_hitting_time_monte_carlo_agrees_with_exact():
    tree = full_binary_tree(3)
    m = expected_hitting_times(tree, "15")
    exact = m[finite_chain(tree).index[tree.vertex("8")]]
    mean, se = _mc_leaf_to_leaf(3, 3000, 4)
    assert abs(mean - exact) <= 4 * se


def test_backbone_resistance_against_laplacian():
    g = PendantTowerGraph(h_max=3, n_max=6)
    chain = finite_chain(g)
    n = len(chain.vertices)
    A = np.zeros((n, n))
    for v in chain.vertices:
        for u in g.neighbors(v):
            A[chain.index[v], chain.index[u]] = 1.0
    Lp = np.linalg.pinv(np.diag(A.sum(1)) - A)
    for a, b in [(1, 6), (2, 5), (3, 3)]:
        e = np.zeros(n)
        e[chain.index[g.backbone(a)]] += 1
        e[chain.index[g.backbone(b)]] -= 1
        assert e @ Lp @ e == pytest.approx(backbone_resistance(a, b), abs=1e-9)


def test_backbone_trace_and_drift():
    g = build_counterexample(6, 6)
    trace = backbone_trace_check(g, 100, 5000, 2)
    assert trace.passed and trace.extra["up"] + trace.extra["down"] > 1000
    drift = drift_check(g, 3, 100, 3000, 2)
    assert drift.passed and drift.extra["tallied"] > 10_000


def test_recurrence_frequencies_increase():
    g = build_counterexample(4, 4)
    diag = recurrence_diagnostics(g, "pt:1", [10, 100, 10_000], 300, 1, green_T=50)
    assert diag.frequency == sorted(diag.frequency)
    assert diag.frequency[-1] > 0.99
    assert diag.green[-1] > diag.green[10]
