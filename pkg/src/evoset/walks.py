"""Exact and Monte Carlo simple-random-walk distributions.

Three exact propagation routes are available and selected by ``method``:

``"sparse"``
    dictionary propagation over :class:`~evoset.graphs.VertexId` keys; works
    on every family and is the literal definition.
``"radial"``
    the distance-from-start birth-death chain, for families whose start
    vertex has a :class:`~evoset.graphs.RadialQuotient`.  Exact because the
    walk law is uniform on spheres.
``"matrix"`` / ``"local"``
    scipy sparse matrices over a finite graph, or over the ball that can
    still influence the quantity being computed.

``"auto"`` picks radial, then matrix (finite graphs), then sparse/local.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator

import numpy as np
import scipy.sparse as sp

from .graphs import CapExceeded, Graph, RadialQuotient, VertexId, ball
from .rng import TrialUniforms

DEFAULT_SUPPORT_CAP = 5_000_000
NORMALIZATION_TOL = 1e-9

__all__ = [
    "SparseMeasure",
    "RadialLaw",
    "VectorLaw",
    "EntropySeries",
    "NotNormalized",
    "step_distribution",
    "distribution_at",
    "walk_laws",
    "walk_law",
    "entropy",
    "entropy_series",
    "escape_probability",
    "green_partial_sum",
    "green_tail_estimate",
    "mc_walk_endpoint",
    "mc_return_times",
    "mc_return_frequency",
    "ReturnEstimate",
    "finite_chain",
    "format_float",
]


class NotNormalized(ValueError):
    """A probability distribution was required but the mass is not 1."""


def format_float(x: float) -> str:
    return format(float(x), ".17g")


def _xlogx(p: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    out = np.zeros_like(p)
    nz = p > 0
    out[nz] = p[nz] * np.log(p[nz])
    return out


# ---------------------------------------------------------------------------
# Measures
# ---------------------------------------------------------------------------
class SparseMeasure:
    """Finite nonnegative measure on vertices.

    Only strictly positive weights are stored.  ``pruned_mass`` records mass
    discarded by optional epsilon pruning (never renormalised).
    """

    __slots__ = ("weights", "mass", "pruned_mass")

    def __init__(self, weights=None, pruned_mass: float = 0.0):
        w = {}
        for v, x in (weights or {}).items():
            x = float(x)
            if x < 0 or math.isnan(x):
                raise ValueError(f"negative or NaN weight {x} at {v}")
            if x > 0:
                w[v] = x
        self.weights: dict[VertexId, float] = w
        self.mass = math.fsum(w.values())
        self.pruned_mass = pruned_mass

    @classmethod
    def point(cls, v: VertexId, weight: float = 1.0) -> "SparseMeasure":
        return cls({v: weight})

    def __len__(self) -> int:
        return len(self.weights)

    def __iter__(self):
        return iter(self.weights)

    def __contains__(self, v) -> bool:
        return v in self.weights

    def __getitem__(self, v) -> float:
        return self.weights.get(v, 0.0)

    def __repr__(self) -> str:
        return f"SparseMeasure(support={len(self)}, mass={self.mass!r})"

    def items(self):
        return self.weights.items()

    def prob(self, v) -> float:
        return self.weights.get(v, 0.0)

    @property
    def support(self) -> frozenset:
        return frozenset(self.weights)

    @property
    def support_size(self) -> int:
        return len(self.weights)

    def mass_in(self, A: Iterable) -> float:
        return math.fsum(self.weights.get(a, 0.0) for a in set(A))

    def mass_outside(self, A: Iterable) -> float:
        A = set(A)
        return math.fsum(x for v, x in self.weights.items() if v not in A)

    def count_in_support(self, A: Iterable) -> int:
        return sum(1 for a in set(A) if a in self.weights)

    def to_dict(self) -> dict[str, float]:
        return {v.label: x for v, x in sorted(self.weights.items())}

    def entropy(self) -> float:
        _require_normalized(self.mass)
        return float(-_xlogx(np.fromiter(self.weights.values(), float, len(self))).sum())

    def scaled(self, c: float) -> "SparseMeasure":
        return SparseMeasure({v: c * x for v, x in self.weights.items()})


def _require_normalized(mass: float) -> None:
    if abs(mass - 1.0) > NORMALIZATION_TOL:
        raise NotNormalized(f"total mass {mass!r} is not 1 within {NORMALIZATION_TOL}")


@dataclass
class RadialLaw:
    """Walk law from ``center`` stored as per-sphere masses ``probs[k]``."""

    graph: Graph
    center: VertexId
    quotient: RadialQuotient
    probs: np.ndarray

    @property
    def mass(self) -> float:
        return math.fsum(self.probs)

    def prob(self, v) -> float:
        k = self.graph.distance(self.center, v)
        if k >= len(self.probs) or self.probs[k] == 0:
            return 0.0
        return float(self.probs[k]) / self.quotient.size(k)

    __getitem__ = prob

    @property
    def support_size(self) -> int:
        return sum(self.quotient.size(int(k)) for k in np.flatnonzero(self.probs > 0))

    def _sphere_counts(self, A) -> dict[int, int]:
        counts: dict[int, int] = {}
        for a in set(A):
            k = self.graph.distance(self.center, a)
            counts[k] = counts.get(k, 0) + 1
        return counts

    def mass_in(self, A) -> float:
        return math.fsum(self.probs[k] * c / self.quotient.size(k)
                         for k, c in self._sphere_counts(A).items()
                         if k < len(self.probs))

    def mass_outside(self, A) -> float:
        counts = self._sphere_counts(A)
        return math.fsum(p * (1 - counts.get(k, 0) / self.quotient.size(k))
                         for k, p in enumerate(self.probs) if p > 0)

    def count_in_support(self, A) -> int:
        return sum(c for k, c in self._sphere_counts(A).items()
                   if k < len(self.probs) and self.probs[k] > 0)

    def entropy(self) -> float:
        _require_normalized(self.mass)
        p = self.probs
        logs = np.array([math.log(self.quotient.size(k)) for k in range(len(p))])
        return float(-_xlogx(p).sum() + (p * logs).sum())

    def to_sparse(self, cap: int = DEFAULT_SUPPORT_CAP) -> SparseMeasure:
        if self.support_size > cap:
            raise CapExceeded("radial law materialisation", cap)
        radius = len(self.probs) - 1
        w = {}
        for v in ball(self.graph, self.center, radius, cap):
            x = self.prob(v)
            if x > 0:
                w[v] = x
        return SparseMeasure(w)


# ---------------------------------------------------------------------------
# Finite / local chains as scipy matrices
# ---------------------------------------------------------------------------
@dataclass
class _Chain:
    vertices: list[VertexId]
    index: dict[VertexId, int]
    P: sp.csr_matrix          # row-stochastic, possibly truncated (substochastic)
    deg: np.ndarray

    def law(self, vec: np.ndarray) -> "VectorLaw":
        return VectorLaw(self, vec)


class VectorLaw:
    """Walk law on a finite chain stored as a dense probability vector."""

    def __init__(self, chain: _Chain, vec: np.ndarray):
        self.chain = chain
        self.vec = vec

    @property
    def mass(self) -> float:
        return math.fsum(self.vec)

    def prob(self, v) -> float:
        i = self.chain.index.get(v)
        return 0.0 if i is None else float(self.vec[i])

    __getitem__ = prob

    @property
    def support_size(self) -> int:
        return int(np.count_nonzero(self.vec))

    def _idx(self, A) -> np.ndarray:
        idx = [self.chain.index[a] for a in set(A) if a in self.chain.index]
        return np.array(idx, dtype=np.int64)

    def mass_in(self, A) -> float:
        return math.fsum(self.vec[self._idx(A)])

    def mass_outside(self, A) -> float:
        keep = np.ones(len(self.vec), bool)
        keep[self._idx(A)] = False
        return math.fsum(self.vec[keep])

    def count_in_support(self, A) -> int:
        return int(np.count_nonzero(self.vec[self._idx(A)]))

    def entropy(self) -> float:
        _require_normalized(self.mass)
        return float(-_xlogx(self.vec).sum())

    def to_sparse(self) -> SparseMeasure:
        nz = np.flatnonzero(self.vec)
        return SparseMeasure({self.chain.vertices[i]: self.vec[i] for i in nz})


def _build_chain(g: Graph, verts: list[VertexId]) -> _Chain:
    index = {v: i for i, v in enumerate(verts)}
    rows, cols, vals = [], [], []
    deg = np.empty(len(verts))
    for i, v in enumerate(verts):
        nbrs = g.neighbors(v)
        deg[i] = len(nbrs)
        w = 1.0 / len(nbrs)
        for u in nbrs:
            j = index.get(u)
            if j is not None:
                rows.append(i)
                cols.append(j)
                vals.append(w)
    P = sp.csr_matrix((vals, (rows, cols)), shape=(len(verts), len(verts)))
    return _Chain(verts, index, P, deg)


def finite_chain(g: Graph) -> _Chain:
    """Transition matrix of a finite graph (cached on the graph object)."""
    if not g.finite:
        raise ValueError(f"{g.spec} is not finite")
    chain = getattr(g, "_chain", None)
    if chain is None:
        chain = _build_chain(g, g.vertices())
        g._chain = chain
    return chain


def _local_chain(g: Graph, center: VertexId, radius: int, cap: int) -> _Chain:
    verts = sorted(ball(g, center, radius, cap))
    return _build_chain(g, verts)


# ---------------------------------------------------------------------------
# Exact propagation
# ---------------------------------------------------------------------------
def step_distribution(g: Graph, mu: SparseMeasure, cap: int = DEFAULT_SUPPORT_CAP,
                      prune: float = 0.0) -> SparseMeasure:
    """One step of the walk: ``mu'(y) = sum_{x~y} mu(x)/deg(x)``."""
    acc: dict[VertexId, float] = {}
    get = acc.get
    for x, w in mu.weights.items():
        nbrs = g.neighbors(x)
        share = w / len(nbrs)
        for y in nbrs:
            acc[y] = get(y, 0.0) + share
        if len(acc) > cap:
            raise CapExceeded("walk support", cap)
    pruned = mu.pruned_mass
    if prune > 0:
        small = [v for v, x in acc.items() if x < prune]
        pruned += math.fsum(acc.pop(v) for v in small)
    out = SparseMeasure.__new__(SparseMeasure)
    out.weights = acc
    out.mass = math.fsum(acc.values())
    out.pruned_mass = pruned
    return out


def distribution_at(g: Graph, x0, n: int, cap: int = DEFAULT_SUPPORT_CAP,
                    prune: float = 0.0) -> SparseMeasure:
    """``p^n(x0, .)`` by ``n`` applications of :func:`step_distribution`."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    mu = SparseMeasure.point(g._check(x0))
    for _ in range(n):
        mu = step_distribution(g, mu, cap, prune)
    return mu


def _pick_method(g: Graph, x0: VertexId, method: str) -> str:
    if method != "auto":
        return method
    if g.radial_quotient(x0) is not None:
        return "radial"
    if g.finite:
        return "matrix"
    return "sparse"


def _radial_step(p, up, stay, down):
    q = stay[: len(p)] * p
    q = np.append(q, 0.0)
    q[1:] += up[: len(p)] * p
    q[:-2] += down[1: len(p)] * p[1:]
    return q


def walk_laws(g: Graph, x0, n_max: int, method: str = "auto",
              cap: int = DEFAULT_SUPPORT_CAP) -> Iterator:
    """Yield the law of ``X_n`` for ``n = 0..n_max``."""
    x0 = g._check(x0)
    method = _pick_method(g, x0, method)
    if method == "radial":
        quot = g.radial_quotient(x0)
        if quot is None:
            raise ValueError(f"no radial quotient at {x0} on {g.spec}")
        up, stay, down = quot.transition_arrays(n_max + 2)
        p = np.array([1.0])
        for n in range(n_max + 1):
            if n:
                p = _radial_step(p, up, stay, down)
                if quot.radius is not None and len(p) > quot.radius + 1:
                    p = p[: quot.radius + 1]
            yield RadialLaw(g, x0, quot, p)
    elif method == "matrix":
        chain = finite_chain(g)
        vec = np.zeros(len(chain.vertices))
        vec[chain.index[x0]] = 1.0
        PT = chain.P.T.tocsr()
        for n in range(n_max + 1):
            if n:
                vec = PT @ vec
            yield chain.law(vec)
    elif method == "sparse":
        mu = SparseMeasure.point(x0)
        for n in range(n_max + 1):
            if n:
                mu = step_distribution(g, mu, cap)
            yield mu
    else:
        raise ValueError(f"unknown method {method!r}")


def walk_law(g: Graph, x0, n: int, method: str = "auto", cap: int = DEFAULT_SUPPORT_CAP):
    for law in walk_laws(g, x0, n, method, cap):
        pass
    return law


def entropy(mu) -> float:
    """Shannon entropy in nats with ``0 log 0 = 0``."""
    return mu.entropy()


@dataclass
class EntropySeries:
    graph_spec: str
    start: str
    rows: list[tuple[int, float, int]] = field(default_factory=list)

    @property
    def n(self) -> list[int]:
        return [r[0] for r in self.rows]

    @property
    def values(self) -> list[float]:
        return [r[1] for r in self.rows]

    @property
    def supports(self) -> list[int]:
        return [r[2] for r in self.rows]

    def rate(self, n: int) -> float:
        return self.rows[n][1] / n

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "entropy_nats", "support", "entropy_rate"])
        for n, e, s in self.rows:
            w.writerow([n, format_float(e), s, format_float(e / n) if n else ""])
        return buf.getvalue()


def entropy_series(g: Graph, x0, n_max: int, method: str = "auto",
                   cap: int = DEFAULT_SUPPORT_CAP) -> EntropySeries:
    x0 = g._check(x0)
    out = EntropySeries(g.spec, x0.label)
    for n, law in enumerate(walk_laws(g, x0, n_max, method, cap)):
        out.rows.append((n, law.entropy(), law.support_size))
    return out


def escape_probability(g: Graph, x0, n: int, A, method: str = "auto",
                       cap: int = DEFAULT_SUPPORT_CAP) -> float:
    """``p^n(x0, support(X_n) \\ A)``."""
    return walk_law(g, x0, n, method, cap).mass_outside(A)


def green_partial_sum(g: Graph, x0, T: int, y=None, method: str = "auto",
                      cap: int = DEFAULT_SUPPORT_CAP) -> np.ndarray:
    """Partial sums ``sum_{t<=tau} p^t(x0, y)`` for ``tau = 0..T`` (y defaults to x0)."""
    x0 = g._check(x0)
    y = x0 if y is None else g._check(y)
    method = _pick_method(g, x0, method)
    if method == "sparse" and not g.finite:
        method = "local"
    terms = np.empty(T + 1)
    if method == "local":
        dist = _bfs_distance(g, x0, y, T, cap)
        if dist is None:
            return np.zeros(T + 1)
        chain = _local_chain(g, x0, (T + dist) // 2, cap)
        PT = chain.P.T.tocsr()
        vec = np.zeros(len(chain.vertices))
        vec[chain.index[x0]] = 1.0
        j = chain.index[y]
        for t in range(T + 1):
            if t:
                vec = PT @ vec
            terms[t] = vec[j]
    else:
        for t, law in enumerate(walk_laws(g, x0, T, method, cap)):
            terms[t] = law.prob(y)
    return np.cumsum(terms)


def _bfs_distance(g: Graph, a: VertexId, b: VertexId, limit: int, cap: int) -> int | None:
    if a == b:
        return 0
    try:
        return g.distance(a, b) if g.distance(a, b) <= limit else None
    except NotImplementedError:
        pass
    seen = {a}
    frontier = [a]
    for r in range(1, limit + 1):
        nxt = []
        for v in frontier:
            for u in g.neighbors(v):
                if u == b:
                    return r
                if u not in seen:
                    seen.add(u)
                    nxt.append(u)
        if len(seen) > cap:
            raise CapExceeded("distance search", cap)
        frontier = nxt
    return None


def green_tail_estimate(partials: np.ndarray, exponent: float = 1.5,
                        fit_from: int | None = None) -> tuple[float, float]:
    """Extrapolate a Green series whose terms decay like ``c t**-exponent``.

    Fits ``c`` on the nonzero terms of the last half of the series and adds
    the integral tail.  Returns ``(limit estimate, tail)``.  Works for
    period-2 walks because zero terms are skipped and the tail density is
    halved accordingly.
    """
    partials = np.asarray(partials, dtype=float)
    T = len(partials) - 1
    terms = np.diff(partials, prepend=0.0)
    lo = T // 2 if fit_from is None else fit_from
    ts = np.arange(lo, T + 1)
    sel = terms[lo:] > 0
    ts, vals = ts[sel], terms[lo:][sel]
    if len(ts) == 0:
        return float(partials[-1]), 0.0
    period = 2 if np.all(terms[1::2] == 0) else 1
    c = float(np.mean(vals * ts ** exponent))
    # sum_{t>T, step period} c t^-e  ~  (c/period) * int_{T+period/2}^inf t^-e dt
    start = T + period / 2
    tail = c / period * start ** (1 - exponent) / (exponent - 1)
    return float(partials[-1] + tail), tail


# ---------------------------------------------------------------------------
# Monte Carlo
# ---------------------------------------------------------------------------
def mc_walk_endpoint(g: Graph, x0, n: int, rng: np.random.Generator) -> VertexId:
    v = g._check(x0)
    for _ in range(n):
        nbrs = g.neighbors(v)
        v = nbrs[int(rng.random() * len(nbrs))]
    return v


@dataclass
class ReturnEstimate:
    frequency: float
    stderr: float
    trials: int
    horizon: int


_BLOCK = 256


def mc_return_times(g: Graph, x0, n_max: int, trials: int, seed: int,
                    method: str = "auto", purpose: int = 0) -> np.ndarray:
    """First return time to ``x0`` for each trial (``-1`` if none by ``n_max``).

    Trial ``i`` draws from ``seed_stream(seed, (purpose, i))``.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    x0 = g._check(x0)
    method = _pick_method(g, x0, method)
    streams = TrialUniforms(seed, trials, purpose)
    out = np.full(trials, -1, dtype=np.int64)
    if method == "radial":
        quot = g.radial_quotient(x0)
        size = n_max + 2 if quot.radius is None else quot.radius + 1
        up, stay, down = quot.transition_arrays(size)
        cut_up = up
        cut_stay = up + stay
        state = np.zeros(trials, dtype=np.int64)

        def advance(idx, u):
            k = state[idx]
            state[idx] = k + (u < cut_up[k]) - (u >= cut_stay[k])

        def returned(idx):
            return state[idx] == 0
    elif method == "matrix":
        chain = finite_chain(g)
        P = chain.P
        indptr, indices = P.indptr, P.indices
        deg = np.diff(indptr)
        home = chain.index[x0]
        state = np.full(trials, home, dtype=np.int64)

        def advance(idx, u):
            s = state[idx]
            state[idx] = indices[indptr[s] + (u * deg[s]).astype(np.int64)]

        def returned(idx):
            return state[idx] == home
    elif method == "sparse":
        for i in range(trials):
            gen = streams.gens[i]
            v = x0
            t = 0
            while t < n_max:
                block = gen.random(min(_BLOCK, n_max - t))
                hit = False
                for u in block:
                    nbrs = g.neighbors(v)
                    v = nbrs[int(u * len(nbrs))]
                    t += 1
                    if v == x0:
                        out[i] = t
                        hit = True
                        break
                if hit:
                    break
        return out
    else:
        raise ValueError(f"unknown method {method!r}")

    active = np.arange(trials)
    t = 0
    while t < n_max and len(active):
        size = min(_BLOCK, n_max - t)
        block = streams.block(active, size)
        for j in range(size):
            t += 1
            advance(active, block[:, j])
            back = returned(active)
            if back.any():
                out[active[back]] = t
                keep = ~back
                active = active[keep]
                block = block[keep]
                if not len(active):
                    break
    return out


def mc_return_frequency(g: Graph, x0, n_max: int, trials: int, seed: int,
                        method: str = "auto") -> ReturnEstimate:
    """Fraction of walks revisiting ``x0`` within ``n_max`` steps."""
    times = mc_return_times(g, x0, n_max, trials, seed, method)
    f = float(np.mean(times > 0))
    se = math.sqrt(f * (1 - f) / trials)
    return ReturnEstimate(f, se, trials, n_max)
