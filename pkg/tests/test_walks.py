import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats
from scipy.special import comb

from evoset.graphs import (CapExceeded, Cycle, HalfLine, IntegerLine, Lattice2D, Lattice3D,
                           PendantTowerGraph, RegularTree, ball)
from evoset.rng import seed_stream
from evoset.walks import (NotNormalized, SparseMeasure, distribution_at, entropy_series,
                          escape_probability, green_partial_sum, green_tail_estimate,
                          mc_return_frequency, mc_return_times, mc_walk_endpoint, walk_law)

TREE = RegularTree(3)


def test_two_step_law_on_integers():
    mu = distribution_at(IntegerLine(), "z:0", 2)
    assert mu.to_dict() == {"z:-2": 0.25, "z:0": 0.5, "z:2": 0.25}


def test_entropy_on_integers_matches_binomial():
    series = entropy_series(IntegerLine(), "z:0", 60)
    for n in (1, 7, 30, 60):
        assert series.values[n] == pytest.approx(stats.binom(n, 0.5).entropy(), abs=1e-11)


def _tree_entropy_oracle(d, n):
    # distance-from-root chain written out directly
    p = {0: 1.0}
    for _ in range(n):
        q = {}
        for k, w in p.items():
            if k == 0:
                q[1] = q.get(1, 0.0) + w
            else:
                q[k + 1] = q.get(k + 1, 0.0) + w * (d - 1) / d
                q[k - 1] = q.get(k - 1, 0.0) + w / d
        p = q
    size = lambda k: 1 if k == 0 else d * (d - 1) ** (k - 1)
    return -sum(w * math.log(w / size(k)) for k, w in p.items() if w > 0)


def test_tree_entropy_against_oracle_and_sparse_route():
    radial = entropy_series(TREE, "t3:", 20, method="radial")
    sparse = entropy_series(TREE, "t3:", 12, method="sparse")
    for n in (1, 5, 12):
        assert radial.values[n] == pytest.approx(sparse.values[n], abs=1e-11)
    for n in (3, 10, 20):
        assert radial.values[n] == pytest.approx(_tree_entropy_oracle(3, n), abs=1e-10)
    assert radial.values[20] / 20 == pytest.approx(0.395004, abs=1e-6)


@pytest.mark.parametrize("g,x0", [(Cycle(7), "c7:0"), (Cycle(8), "c8:3"), (HalfLine(), "h:1"),
                                  (IntegerLine(), "z:4")])
def test_radial_matches_sparse(g, x0):
    for n in (0, 3, 9, 16):
        a = walk_law(g, x0, n, "radial")
        b = walk_law(g, x0, n, "sparse")
        for v, w in b.items():
            assert a.prob(v) == pytest.approx(w, abs=1e-13)
        assert a.entropy() == pytest.approx(b.entropy(), abs=1e-12)


def test_matrix_matches_sparse_on_pendant_tower():
    g = PendantTowerGraph(h_max=4, n_max=5)
    for x0 in ("pt:2", "pt:3/01"):
        a = walk_law(g, x0, 15, "matrix")
        b = walk_law(g, x0, 15, "sparse")
        assert a.entropy() == pytest.approx(b.entropy(), abs=1e-12)
        for v, w in b.items():
            assert a.prob(v) == pytest.approx(w, abs=1e-14)


@settings(max_examples=30, deadline=None)
@given(st.sampled_from([IntegerLine(), Lattice2D(), TREE, Cycle(6), HalfLine(),
                        PendantTowerGraph(h_max=3, n_max=3)]),
       st.integers(0, 9))
def test_mass_is_conserved(g, n):
    mu = distribution_at(g, g.origin, n)
    assert mu.mass == pytest.approx(1.0, abs=1e-12)
    assert mu.entropy() >= 0
    assert mu.entropy() <= math.log(mu.support_size) + 1e-12


def test_entropy_requires_normalization():
    mu = SparseMeasure.point(IntegerLine().origin, 0.5)
    with pytest.raises(NotNormalized):
        mu.entropy()
    with pytest.raises(ValueError):
        SparseMeasure({IntegerLine().origin: -1.0})


def test_support_cap():
    with pytest.raises(CapExceeded):
        distribution_at(Lattice3D(), "z3:0,0,0", 30, cap=500)


def test_escape_probability_is_complement_of_ball_mass():
    g = Lattice2D()
    A = ball(g, g.origin, 2)
    mu = distribution_at(g, g.origin, 6)
    assert escape_probability(g, g.origin, 6, A) == pytest.approx(1 - mu.mass_in(A), abs=1e-14)


def test_green_sum_on_integers_matches_central_binomials():
    sums = green_partial_sum(IntegerLine(), "z:0", 40)
    exact = sum(Fraction(int(comb(t, t // 2, exact=True)), 2 ** t) for t in range(0, 41, 2))
    assert sums[40] == pytest.approx(float(exact), rel=1e-13)


def test_green_sum_on_tree_increases_to_two():
    sums = green_partial_sum(TREE, "t3:", 200)
    assert np.all(np.diff(sums) >= 0)
    assert sums[-1] < 2.0
    assert sums[-1] == pytest.approx(2.0, abs=1e-4)


def test_green_sum_local_route_on_lattice():
    g = Lattice2D()
    exact = green_partial_sum(g, "z2:0,0", 12, method="sparse")
    local = green_partial_sum(g, "z2:0,0", 12, method="local")
    assert np.allclose(exact, local, atol=1e-14)
    off = green_partial_sum(g, "z2:0,0", 12, y="z2:1,1")
    assert off[2] == pytest.approx(2 / 16)


def test_z3_green_function_limit():
    # G(0,0) on Z^3 is 1.516386... (Watson's integral)
    sums = green_partial_sum(Lattice3D(), "z3:0,0,0", 60)
    limit, tail = green_tail_estimate(sums)
    assert tail > 0
    assert limit == pytest.approx(1.516386, abs=0.01)


def test_tail_estimate_on_synthetic_series():
    t = np.arange(0, 4001)
    terms = np.where(t > 0, 0.7 * np.maximum(t, 1) ** -1.5, 1.0)
    limit, _ = green_tail_estimate(np.cumsum(terms[:201]))
    assert limit == pytest.approx(np.cumsum(terms)[-1] + 0.7 * 2 / math.sqrt(4000.5), rel=1e-4)


def test_monte_carlo_endpoint_matches_exact_law():
    g = IntegerLine()
    exact = distribution_at(g, "z:0", 6)
    rng = seed_stream(3, 0)
    ends = [mc_walk_endpoint(g, "z:0", 6, rng) for _ in range(4000)]
    labels = sorted(exact.support)
    obs = np.array([sum(e == v for e in ends) for v in labels])
    exp = np.array([exact[v] for v in labels]) * len(ends)
    assert stats.chisquare(obs, exp).pvalue > 1e-3


def _return_probability(g, x0, horizon):
    # killed-chain oracle: P(tau_x0 <= horizon)
    mu = {v: 1.0 / g.degree(x0) for v in g.neighbors(x0)}
    returned = 0.0
    for _ in range(horizon):
        returned += mu.pop(g.vertex(x0), 0.0)
        nxt = {}
        for v, w in mu.items():
            for u in g.neighbors(v):
                nxt[u] = nxt.get(u, 0.0) + w / g.degree(v)
        mu = nxt
    return returned


@pytest.mark.parametrize("method", ["sparse", "radial", "matrix"])
def test_return_frequency_matches_killed_chain(method):
    g = Cycle(9)
    exact = _return_probability(g, "c9:0", 12)
    est = mc_return_frequency(g, "c9:0", 12, 4000, 5, method=method)
    assert abs(est.frequency - exact) <= 4 * math.sqrt(exact * (1 - exact) / 4000)


def test_return_times_reproducible():
    g = PendantTowerGraph(h_max=3, n_max=3)
    a = mc_return_times(g, "pt:2", 500, 50, 8)
    b = mc_return_times(g, "pt:2", 500, 50, 8)
    assert np.array_equal(a, b)
    assert (a != 0).all()
    assert (a[a > 0] % 2 == 0).all()   # trees are bipartite


def test_entropy_csv_format():
    text = entropy_series(IntegerLine(), "z:0", 2).to_csv()
    assert text.splitlines() == [
        "n,entropy_nats,support,entropy_rate",
        "0,0,1,",
        "1,0.69314718055994529,2,0.69314718055994529",
        "2,1.0397207708399179,3,0.51986038541995894",
    ]


def test_tree_support_size_does_not_overflow():
    law = walk_law(TREE, "t3:", 200)
    assert law.support_size == sum(3 * 2 ** (k - 1) for k in range(2, 201, 2)) + 1
