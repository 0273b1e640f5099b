"""Recurrent graph whose entropy grows linearly from every start.

The backbone 1, 2, 3, ... carries a full binary tree of height 2↑↑n at
vertex n.  Only truncations are representable (heights capped at
``H_max``, backbone cut at ``N_max``), so what is measured here is the
mechanism: entropy rates that are positive from every start but depend on
where the walk begins, together with recurrence of the backbone.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .graphs import CapExceeded, FiniteExplicit, Graph, PendantTowerGraph, VertexId, tower_height
from .reports import BoundReport
from .rng import TrialUniforms
from .walks import (EntropySeries, entropy_series, finite_chain, format_float,
                    green_partial_sum, mc_return_times)

__all__ = [
    "TowerSchedule",
    "StartProfile",
    "tower_schedule",
    "build_counterexample",
    "per_start_entropy_rates",
    "profiles_to_csv",
    "rate_ordering",
    "recurrence_diagnostics",
    "backbone_trace_check",
    "backbone_resistance",
    "full_binary_tree",
    "path_graph",
    "expected_hitting_times",
    "max_expected_hitting_time",
    "check_hitting_time_bound",
    "drift_check",
]

MAX_VERTICES = 2_000_000
EXACT_HITTING_LIMIT = 2 ** 15


@dataclass
class TowerSchedule:
    heights: tuple[int, ...]
    h_max: int
    n_max: int

    def tree_sizes(self) -> list[int]:
        return [2 ** (h + 1) - 1 for h in self.heights]

    def vertex_count(self) -> int:
        return self.n_max + sum(self.tree_sizes())


def tower_schedule(h_max: int, n_max: int) -> TowerSchedule:
    return TowerSchedule(tuple(tower_height(n, h_max) for n in range(1, n_max + 1)),
                         h_max, n_max)


def build_counterexample(h_max: int = 20, n_max: int = 64,
                         max_vertices: int = MAX_VERTICES) -> PendantTowerGraph:
    """Truncated pendant-tower graph; refuses sizes above ``max_vertices``."""
    sched = tower_schedule(h_max, n_max)
    if sched.vertex_count() > max_vertices:
        raise CapExceeded(f"pendant tower graph ({sched.vertex_count()} vertices)", max_vertices)
    return PendantTowerGraph(h_max, n_max)


@dataclass
class StartProfile:
    start: str
    series: EntropySeries
    window: tuple[int, int]
    rate: float
    tree_depth: str


def per_start_entropy_rates(g: Graph, starts: Sequence, n_max: int,
                            window: tuple[int, int] | None = None,
                            method: str = "auto") -> list[StartProfile]:
    """Per-start rate ``min_{n in window} E_n / n`` (window defaults to ``[n_max/2, n_max]``)."""
    lo, hi = window if window is not None else (max(1, n_max // 2), n_max)
    if not 1 <= lo <= hi <= n_max:
        raise ValueError("window must satisfy 1 <= lo <= hi <= n_max")
    out = []
    for s in starts:
        x0 = g._check(s)
        series = entropy_series(g, x0, n_max, method)
        rate = min(series.values[n] / n for n in range(lo, hi + 1))
        depth = g.depth_descriptor(x0) if hasattr(g, "depth_descriptor") else ""
        out.append(StartProfile(x0.label, series, (lo, hi), rate, depth))
    return out


def profiles_to_csv(profiles: Sequence[StartProfile]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["start", "window_lo", "window_hi", "rate", "tree_depth"])
    for p in profiles:
        w.writerow([p.start, p.window[0], p.window[1], format_float(p.rate), p.tree_depth])
    return buf.getvalue()


def rate_ordering(profiles: Sequence[StartProfile]) -> list[str]:
    """Start labels sorted by decreasing rate (ties broken by label)."""
    return [p.start for p in sorted(profiles, key=lambda p: (-p.rate, p.start))]


@dataclass
class RecurrenceDiagnostics:
    start: str
    horizons: list[int]
    frequency: list[float]
    stderr: list[float]
    trials: int
    green: np.ndarray | None = None
    note: str = ("finite truncation: recurrent by construction; the untruncated "
                 "graph is recurrent because the backbone has infinite resistance")

    def rows(self):
        return list(zip(self.horizons, self.frequency, self.stderr))


def recurrence_diagnostics(g: Graph, x0, horizons: Sequence[int], trials: int, seed: int,
                           green_T: int | None = None) -> RecurrenceDiagnostics:
    """Return frequencies at each horizon (one set of walks) and optional Green sums."""
    x0 = g._check(x0)
    horizons = sorted(int(h) for h in horizons)
    times = mc_return_times(g, x0, horizons[-1], trials, seed)
    freq, se = [], []
    for h in horizons:
        f = float(np.mean((times > 0) & (times <= h)))
        freq.append(f)
        se.append(math.sqrt(f * (1 - f) / trials))
    green = green_partial_sum(g, x0, green_T) if green_T else None
    return RecurrenceDiagnostics(x0.label, horizons, freq, se, trials, green)


def _is_backbone(v: VertexId) -> bool:
    return "/" not in v.label


def backbone_trace_check(g: PendantTowerGraph, walkers: int, steps: int, seed: int,
                         x0=None) -> BoundReport:
    """Moves between successive distinct backbone positions are +1/-1 with equal odds.

    Only moves out of interior backbone vertices (``1 < n < N_max``) count.
    """
    chain = finite_chain(g)
    x0 = g.origin if x0 is None else g._check(x0)
    pos = np.full(len(chain.vertices), -1, dtype=np.int64)
    for i, v in enumerate(chain.vertices):
        if _is_backbone(v):
            pos[i] = v.payload[1]
    streams = TrialUniforms(seed, walkers, purpose=2)
    indptr, indices = chain.P.indptr, chain.P.indices
    deg = np.diff(indptr)
    state = np.full(walkers, chain.index[x0], dtype=np.int64)
    last = pos[state].copy()
    ups = downs = 0
    idx = np.arange(walkers)
    done = 0
    while done < steps:
        size = min(1024, steps - done)
        block = streams.block(idx, size)
        for j in range(size):
            state = indices[indptr[state] + (block[:, j] * deg[state]).astype(np.int64)]
            p = pos[state]
            moved = (p > 0) & (p != last)
            interior = moved & (last > 1) & (last < g.n_max)
            ups += int(np.count_nonzero(interior & (p > last)))
            downs += int(np.count_nonzero(interior & (p < last)))
            last = np.where(p > 0, p, last)
        done += size
    total = ups + downs
    frac = ups / total if total else float("nan")
    se = math.sqrt(0.25 / total) if total else float("inf")
    return BoundReport("backbone_trace", {"graph": g.spec, "walkers": walkers, "steps": steps,
                                          "seed": seed},
                       frac, 0.5, -abs(frac - 0.5), 4 * se,
                       extra={"up": ups, "down": downs},
                       note="fraction of +1 moves between successive backbone positions")


def backbone_resistance(a: int, b: int) -> int:
    """Effective resistance between backbone vertices: the trees are dead ends,
    so only the unit resistors of the path between them count."""
    return abs(b - a)


def full_binary_tree(height: int) -> FiniteExplicit:
    """Heap-labelled full binary tree with ``2**(height+1) - 1`` vertices."""
    n = 2 ** (height + 1) - 1
    if n == 1:
        raise ValueError("a single vertex has no edges; handle i = 1 directly")
    return FiniteExplicit(((str(k), str(2 * k + c)) for k in range(1, n // 2 + 1) for c in (0, 1)),
                          name=f"binary_tree_h{height}")


def path_graph(i: int) -> FiniteExplicit:
    return FiniteExplicit(((str(k), str(k + 1)) for k in range(1, i)), name=f"path_{i}")


def expected_hitting_times(g: Graph, target) -> np.ndarray:
    """``E_x[tau_target]`` for every vertex of a finite graph (chain order)."""
    chain = finite_chain(g)
    t = chain.index[g._check(target)]
    n = len(chain.vertices)
    keep = np.array([i for i in range(n) if i != t])
    A = sp.identity(n, format="csr") - chain.P
    A = A[keep][:, keep].tocsc()
    m = np.zeros(n)
    m[keep] = spla.spsolve(A, np.ones(n - 1))
    return m


def max_expected_hitting_time(g: Graph, targets=None) -> tuple[float, str, str]:
    """Max over (start, target) of the expected hitting time; ``(value, start, target)``."""
    chain = finite_chain(g)
    targets = chain.vertices if targets is None else [g._check(t) for t in targets]
    best = (0.0, chain.vertices[0].label, chain.vertices[0].label)
    for tgt in targets:
        m = expected_hitting_times(g, tgt)
        i = int(np.argmax(m))
        if m[i] > best[0]:
            best = (float(m[i]), chain.vertices[i].label, tgt.label)
    return best


def _depth_representatives(height: int) -> list[str]:
    # heap index 2**k is the leftmost vertex at depth k; depths are orbits
    return [str(2 ** k) for k in range(height + 1)]


def _mc_leaf_to_leaf(height: int, trials: int, seed: int) -> tuple[float, float]:
    """Monte Carlo hitting time from the leftmost to the rightmost leaf."""
    n = 2 ** (height + 1) - 1
    source, target = 2 ** height, n
    streams = TrialUniforms(seed, trials, purpose=3)
    state = np.full(trials, source, dtype=np.int64)
    hit = np.zeros(trials)
    active = np.arange(trials)
    t = 0
    while len(active):
        block = streams.block(active, 256)
        for j in range(256):
            t += 1
            s = state[active]
            u = block[:, j]
            root = s == 1
            leaf = s > n // 2
            nxt = np.where(u < 1 / 3, s // 2, np.where(u < 2 / 3, 2 * s, 2 * s + 1))
            nxt = np.where(root, np.where(u < 0.5, 2, 3), nxt)
            nxt = np.where(leaf, s // 2, nxt)
            state[active] = nxt
            done = nxt == target
            if done.any():
                hit[active[done]] = t
                active = active[~done]
                block = block[~done]
                if not len(active):
                    break
    return float(hit.mean()), float(hit.std(ddof=1) / math.sqrt(trials))


def check_hitting_time_bound(i_list: Sequence[int], trials: int = 1000, seed: int = 0
                             ) -> list[BoundReport]:
    """Max expected hitting time on the full binary tree with ``i`` vertices is at most ``2 i^2``.

    Exact sparse solves (one target per depth, which covers every orbit) up
    to ``2**15`` vertices; Monte Carlo on the leaf-to-leaf pair beyond.
    """
    out = []
    for i in i_list:
        h = (i + 1).bit_length() - 2
        if i < 1 or 2 ** (h + 1) - 1 != i:
            raise ValueError(f"{i} is not the size of a full binary tree")
        bound = 2.0 * i * i
        if i == 1:
            out.append(BoundReport.upper("hitting_time", {"i": 1}, 0.0, bound, 0.0,
                                         extra={"method": "trivial"}))
            continue
        if i <= EXACT_HITTING_LIMIT:
            tree = full_binary_tree(h)
            val, src, tgt = max_expected_hitting_time(tree, _depth_representatives(h))
            out.append(BoundReport.upper("hitting_time", {"i": i}, val, bound, 1e-9 * bound,
                                         extra={"method": "exact", "start": src, "target": tgt}))
        else:
            mean, se = _mc_leaf_to_leaf(h, trials, seed)
            out.append(BoundReport.upper("hitting_time", {"i": i, "trials": trials, "seed": seed},
                                         mean + 4 * se, bound, 0.0,
                                         extra={"method": "monte_carlo", "mean": mean,
                                                "stderr": se}))
    return out


def drift_check(g: PendantTowerGraph, n: int, walkers: int, steps: int, seed: int) -> BoundReport:
    """Depth increments at degree-3 vertices of ``T_n``: +1 w.p. 2/3, -1 w.p. 1/3.

    Walkers start at the root of ``T_n``; steps taken from leaves or from
    the backbone are not tallied.
    """
    chain = finite_chain(g)
    depth = np.full(len(chain.vertices), -1, dtype=np.int64)
    for i, v in enumerate(chain.vertices):
        p = v.payload
        if p[0] == "t" and p[1] == n:
            depth[i] = len(p[2]) + 1   # distance from backbone vertex n
        elif p[0] == "b" and p[1] == n:
            depth[i] = 0
    interior = (depth >= 1) & (chain.deg == 3)
    indptr, indices = chain.P.indptr, chain.P.indices
    deg = np.diff(indptr)
    streams = TrialUniforms(seed, walkers, purpose=4)
    state = np.full(walkers, chain.index[g.tree_vertex(n)], dtype=np.int64)
    idx = np.arange(walkers)
    ups = downs = 0
    done = 0
    while done < steps:
        size = min(1024, steps - done)
        block = streams.block(idx, size)
        for j in range(size):
            nxt = indices[indptr[state] + (block[:, j] * deg[state]).astype(np.int64)]
            tally = interior[state]
            ups += int(np.count_nonzero(tally & (depth[nxt] > depth[state])))
            downs += int(np.count_nonzero(tally & (depth[nxt] < depth[state])))
            state = nxt
        done += size
    total = ups + downs
    frac = ups / total if total else float("nan")
    se = math.sqrt((2 / 9) / total) if total else float("inf")
    return BoundReport("drift", {"graph": g.spec, "tree": n, "walkers": walkers,
                                 "steps": steps, "seed": seed},
                       frac, 2 / 3, -abs(frac - 2 / 3), 4 * se,
                       extra={"up": ups, "down": downs, "tallied": total})
