"""Inequality checks producing :class:`~evoset.reports.BoundReport` objects.

Checks that depend on the linear entropy hypothesis ``E_n >= C n`` refuse
to run without an :class:`EntropyConstant` certificate, which records
where that hypothesis was actually verified.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .evolving import (SphereUnion, decay_profile, expected_functional, gap_length,
                       pi_mass, q_measure, set_size, superstep_levels, _radial_hit)
from .graphs import Graph
from .reports import BoundReport
from .walks import entropy_series, green_partial_sum, walk_law

__all__ = [
    "EntropyConstant",
    "UncertifiedConstant",
    "certify_entropy_constant",
    "alpha_constant",
    "check_escape_bound",
    "check_q_escape_bound",
    "check_entropy_decomposition",
    "check_ceil_log_inequality",
    "check_rootdecay",
    "check_conddecay",
    "check_maincor",
    "check_transience_sum",
]

EXACT_TOL = 1e-12
DECAY_TOL = 1e-10


class UncertifiedConstant(ValueError):
    """A check needed ``E_n >= C n`` but no valid certificate was supplied."""


@dataclass
class EntropyConstant:
    """Record of where ``E_n >= C n`` was verified by exact computation."""

    C: float
    n_lo: int
    n_hi: int
    graph_spec: str
    starts: list[str]
    start_policy: str
    passed: bool
    violations: list[tuple[str, int, float]] = field(default_factory=list)
    min_ratio: float = math.inf

    def covers(self, n: int) -> bool:
        return self.n_lo <= n <= self.n_hi

    def to_dict(self) -> dict:
        return {"C": self.C, "n_lo": self.n_lo, "n_hi": self.n_hi,
                "graph": self.graph_spec, "starts": self.starts,
                "start_policy": self.start_policy, "pass": self.passed,
                "min_ratio": self.min_ratio,
                "violations": [list(v) for v in self.violations]}


def certify_entropy_constant(g: Graph, starts: Sequence, n_range: tuple[int, int],
                             C_target: float, method: str = "auto",
                             start_policy: str | None = None) -> EntropyConstant:
    """Verify ``E_n >= C_target * n`` for every start and every ``n`` in range."""
    lo, hi = n_range
    if hi < lo or lo < 1:
        raise ValueError("refusing a vacuous certificate: need 1 <= n_lo <= n_hi")
    if not starts:
        raise ValueError("at least one start vertex is required")
    if C_target <= 0:
        raise ValueError("C must be positive")
    starts = [g._check(s) for s in starts]
    violations = []
    min_ratio = math.inf
    for x0 in starts:
        series = entropy_series(g, x0, hi, method)
        for n in range(lo, hi + 1):
            e = series.values[n]
            min_ratio = min(min_ratio, e / n)
            if e < C_target * n:
                violations.append((x0.label, n, e))
    if start_policy is None:
        start_policy = "fixed" if len(starts) == 1 else f"{len(starts)} starts"
    return EntropyConstant(C_target, lo, hi, g.spec, [s.label for s in starts],
                           start_policy, not violations, violations, min_ratio)


def _require(g: Graph, C: float, cert: EntropyConstant | None) -> EntropyConstant:
    if cert is None:
        raise UncertifiedConstant(
            "no entropy certificate supplied; run certify_entropy_constant first")
    if not cert.passed:
        raise UncertifiedConstant(
            f"certificate for C={cert.C} failed at {cert.violations[:3]}")
    if cert.graph_spec != g.spec:
        raise UncertifiedConstant(f"certificate is for {cert.graph_spec}, not {g.spec}")
    if C > cert.C:
        raise UncertifiedConstant(f"C={C} exceeds the certified C={cert.C}")
    return cert


def alpha_constant(C: float, d: int) -> float:
    """Per-superstep contraction factor ``1 - C / (16 log d)``."""
    return 1.0 - C / (16.0 * math.log(d))


def _escape_rhs(C: float, n: int, size_A: int, d: int) -> float:
    return (C * n - math.log(2 * size_A)) / (n * math.log(d))


def check_escape_bound(g: Graph, x0, n: int, A, C: float,
                       certificate: EntropyConstant | None, sharper: bool = False,
                       method: str = "auto") -> BoundReport:
    """``p^n(x0, A^c) >= (C n - log(2|A|)) / (n log d)`` with ``A^c = supp(X_n) \\ A``."""
    cert = _require(g, C, certificate)
    A = frozenset(g._check(a) for a in A)
    if not A:
        raise ValueError("A must be nonempty (log 0 is undefined)")
    if n < 1:
        raise ValueError("n must be at least 1")
    x0 = g._check(x0)
    law = walk_law(g, x0, n, method)
    lhs = law.mass_outside(A)
    d = g.max_degree
    rhs = _escape_rhs(C, n, len(A), d)
    extra = {"size_A": len(A), "d": d, "certified_n": cert.covers(n)}
    if sharper:
        size_Ac = law.support_size - law.count_in_support(A)
        extra["size_Ac"] = size_Ac
        if size_Ac > len(A):
            s = (C * n - math.log(len(A)) - math.log(2)) / (math.log(size_Ac) - math.log(len(A)))
            extra["sharper_rhs"] = s
            extra["sharper_pass"] = lhs >= s - EXACT_TOL
        else:
            extra["sharper_rhs"] = None
    return BoundReport.lower(
        "escape_bound", {"graph": g.spec, "x0": x0.label, "n": n, "A_size": len(A), "C": C},
        lhs, rhs, EXACT_TOL, vacuous=rhs <= 0, extra=extra,
        note="vacuous: C n <= log(2|A|)" if rhs <= 0 else "")


def _q_masses(g: Graph, S, n: int, A) -> tuple[float, float]:
    """``(Q_n(S, A), Q_n(S, supp \\ A))``."""
    if isinstance(S, SphereUnion):
        hit = _radial_hit(S.quotient, S.radii, n)
        if isinstance(A, SphereUnion) and A.center == S.center:
            inside = math.fsum(A.quotient.pi_sphere(k) * hit[k]
                               for k in A.radii if k < len(hit))
        else:
            inside = 0.0
            for a in A:
                k = g.distance(S.center, a)
                if k < len(hit):
                    inside += g.degree(a) * hit[k]
        outside = math.fsum(S.quotient.pi_sphere(k) * hit[k] for k in range(len(hit))) - inside
        return inside, outside
    q = q_measure(g, S, n)
    if isinstance(A, SphereUnion):
        A = A.vertices()
    return q.measure.mass_in(A), q.measure.mass_outside(A)


def check_q_escape_bound(g: Graph, S, n: int, A, C: float,
                         certificate: EntropyConstant | None) -> BoundReport:
    """Averaged escape bound for a start set ``S``.

    The displayed inequality bounds ``Q_n(S, A)``; the averaging argument
    bounds the mass outside ``A``.  The pass/fail verdict uses the mass
    outside ``A``; the literal reading is reported in ``extra``.
    """
    cert = _require(g, C, certificate)
    if not isinstance(S, SphereUnion):
        S = frozenset(g._check(v) for v in S)
    if not isinstance(A, SphereUnion):
        A = frozenset(g._check(a) for a in A)
    if not S:
        raise ValueError("S must be nonempty")
    size_A = set_size(A)
    if size_A == 0:
        raise ValueError("A must be nonempty")
    inside, outside = _q_masses(g, S, n, A)
    piS = pi_mass(g, S)
    d = g.max_degree
    rhs = piS * _escape_rhs(C, n, size_A, d)
    return BoundReport.lower(
        "q_escape_bound", {"graph": g.spec, "S_size": set_size(S), "pi_S": piS, "n": n,
                           "A_size": size_A, "C": C},
        outside, rhs, EXACT_TOL * max(1.0, piS), vacuous=rhs <= 0,
        extra={"reading": "complement", "literal_lhs": inside,
               "literal_pass": inside >= rhs - EXACT_TOL * max(1.0, piS),
               "certified_n": cert.covers(n)},
        note="vacuous: C n <= log(2|A|)" if rhs <= 0 else "")


def _binary_entropy(q: float) -> float:
    return -sum(x * math.log(x) for x in (q, 1 - q) if x > 0)


def check_entropy_decomposition(g: Graph, x0, n: int, A, method: str = "auto") -> BoundReport:
    """``E_n <= h(q) + (1-q) log|A| + q log|A^c|`` (no hypothesis needed)."""
    A = frozenset(g._check(a) for a in A)
    if not A:
        raise ValueError("A must be nonempty")
    x0 = g._check(x0)
    law = walk_law(g, x0, n, method)
    E = law.entropy()
    q = law.mass_outside(A)
    size_Ac = law.support_size - law.count_in_support(A)
    rhs = _binary_entropy(q) + (1 - q) * math.log(len(A))
    if q > 0:
        rhs += q * math.log(size_Ac)
    return BoundReport.upper(
        "entropy_decomposition", {"graph": g.spec, "x0": x0.label, "n": n, "A_size": len(A)},
        E, rhs, EXACT_TOL, extra={"q": q, "size_Ac": size_Ac})


def check_ceil_log_inequality(x_grid: Iterable[float]) -> list[BoundReport]:
    """``4 sqrt(x) >= ceil(log(8x))`` for each ``x >= 1``."""
    out = []
    for x in x_grid:
        x = float(x)
        if x < 1:
            raise ValueError(f"x={x} < 1 is outside the inequality's range")
        out.append(BoundReport.lower("ceil_log", {"x": x}, 4 * math.sqrt(x),
                                     float(math.ceil(math.log(8 * x))), 0.0))
    return out


def check_rootdecay(values: Sequence[float], probs: Sequence[float]) -> BoundReport:
    """``E sqrt(R) <= 1 - E(R 1(R >= 4)) / 8`` for a finite law with ``E R = 1``."""
    v = np.asarray(values, dtype=float)
    p = np.asarray(probs, dtype=float)
    if v.shape != p.shape or v.ndim != 1 or len(v) == 0:
        raise ValueError("values and probs must be equal-length 1-d sequences")
    if (v < 0).any() or (p < 0).any():
        raise ValueError("R and its probabilities must be nonnegative")
    if abs(math.fsum(p) - 1) > 1e-9:
        raise ValueError("probabilities must sum to 1")
    mean = math.fsum(v * p)
    if abs(mean - 1) > 1e-9:
        raise ValueError(f"E R = {mean!r}, expected 1")
    lhs = math.fsum(np.sqrt(v) * p)
    tail = math.fsum(v * p * (v >= 4))
    return BoundReport.upper("rootdecay", {"values": v.tolist(), "probs": p.tolist()},
                             lhs, 1 - tail / 8, EXACT_TOL, extra={"tail": tail})


def check_conddecay(g: Graph, S, C: float, certificate: EntropyConstant | None) -> BoundReport:
    """Exact ``E[sqrt(pi(S~)) | S] <= alpha sqrt(pi(S))`` for one superstep."""
    cert = _require(g, C, certificate)
    if not isinstance(S, SphereUnion):
        S = frozenset(g._check(v) for v in S)
    piS = pi_mass(g, S)
    if piS == 0:
        raise ValueError("S must be nonempty")
    d = g.max_degree
    L = gap_length(piS, C)
    levels = superstep_levels(g, S, L)
    lhs = expected_functional(levels, lambda m: math.sqrt(m))
    alpha = alpha_constant(C, d)
    rhs = alpha * math.sqrt(piS)
    # E(R 1(R >= 4)) with R = pi(S~)/pi(S), and the mass escaping S_*.
    big = expected_functional(levels, lambda m: m / piS if m >= 4 * piS else 0.0)
    escape_star = expected_functional(
        levels, lambda m: (m - levels.star_mass) / piS if m > levels.star_mass else 0.0)
    return BoundReport.upper(
        "conddecay", {"graph": g.spec, "S_size": set_size(S), "pi_S": piS, "C": C},
        lhs, rhs, DECAY_TOL * max(1.0, math.sqrt(piS)),
        extra={"L": L, "alpha": alpha, "levels": len(levels),
               "martingale": expected_functional(levels, float) / piS,
               "E_R_tail": big, "escape_from_star": escape_star,
               "proof_lower_bound": C / (2 * math.log(d)),
               "certified_L": cert.covers(L)})


def check_maincor(g: Graph, x0, C: float, m_max: int, trials: int, seed: int,
                  certificate: EntropyConstant | None, method: str = "auto") -> list[BoundReport]:
    """Per-``m`` check of ``E sqrt(pi(S_{T_m})) <= alpha^m pi(x0)`` from Monte Carlo."""
    _require(g, C, certificate)
    x0 = g._check(x0)
    prof = decay_profile(g, x0, C, m_max, trials, seed, method)
    alpha = alpha_constant(C, g.max_degree)
    pi0 = g.degree(x0)
    out = []
    for m, (mean, se) in enumerate(zip(prof.mean, prof.stderr)):
        lhs = float(mean - 4 * se)
        bound = alpha ** m * pi0
        stronger = alpha ** m * math.sqrt(pi0)
        out.append(BoundReport.upper(
            "maincor", {"graph": g.spec, "x0": x0.label, "C": C, "m": m,
                        "trials": trials, "seed": seed},
            lhs, bound, 0.0,
            extra={"mean": float(mean), "stderr": float(se), "stronger_rhs": stronger,
                   "stronger_pass": lhs <= stronger, "truncated": prof.truncated},
            note="lhs is the estimate minus 4 stderr"))
    return out


def check_transience_sum(g: Graph, x0, y, C: float, T: int, I: int, trials: int, seed: int,
                         certificate: EntropyConstant | None, method: str = "auto") -> BoundReport:
    """Finite-horizon comparison of the Green sum with the evolving-set majorant."""
    _require(g, C, certificate)
    x0 = g._check(x0)
    y = g._check(y)
    lhs = float(green_partial_sum(g, x0, T, y, method)[-1])
    prof = decay_profile(g, x0, C, I, trials, seed, method)
    d = g.max_degree
    prefactor = 8 * d * math.ceil(1 / C)
    rhs = prefactor * math.fsum(prof.mean + 4 * prof.stderr)
    return BoundReport.upper(
        "transience_sum", {"graph": g.spec, "x0": x0.label, "y": y.label, "C": C, "T": T,
                           "I": I, "trials": trials, "seed": seed},
        lhs, rhs, 0.0, extra={"prefactor": prefactor},
        note="finite horizons: lhs grows with T, rhs is truncated at I; "
             "a fail is indicative only")
