"""Command-line runner: experiments and verification suites.

Every subcommand takes a flat ``key=value`` config file (``--config``)
whose keys match the long flags; flags given on the command line win.
Outputs go to ``--out`` (default ``$EVOSET_OUT`` or ``./evoset_out``):
CSV with a header row, JSON-lines one object per line, and
``run_metadata.json``.  Only the metadata file carries wall-clock data, so
two runs with the same config produce byte-identical CSV/JSON-lines.

Exit status: 0 on success, 2 if a non-vacuous bound check failed, 1 on
error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .bounds import (UncertifiedConstant, certify_entropy_constant, check_ceil_log_inequality,
                     check_conddecay, check_entropy_decomposition, check_escape_bound,
                     check_maincor, check_q_escape_bound, check_rootdecay,
                     check_transience_sum)
from .counterexample import (backbone_resistance, backbone_trace_check,
                             check_hitting_time_bound, drift_check,
                             per_start_entropy_rates, profiles_to_csv, rate_ordering,
                             recurrence_diagnostics)
from .evolving import SphereUnion, _trajectory_stream, decay_profile, simulate_trajectory
from .graphs import CapExceeded, Graph, GraphError, PendantTowerGraph, ball, parse_graph
from .reports import BoundReport
from .rng import RNG_ALGORITHM, seed_stream
from .walks import (entropy_series, escape_probability, format_float, green_partial_sum,
                    green_tail_estimate)

OUT_ENV = "EVOSET_OUT"
SUBCOMMANDS = ("entropy", "escape", "evolve", "green", "verify", "counterexample")
SUITES = ("all", "certificate", "unconditional", "escape", "decay", "maincor", "transience")
DEFAULT_PENDANT = "pendant_tower,hmax=12,nmax=8"
DEFAULT_NMAX = {"entropy": 20, "escape": 20, "evolve": 20, "green": 100, "verify": 20,
                "counterexample": 40}


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    graph: str = "tree3"
    x0: str | None = None
    c: float = 0.2
    nmax: int | None = None
    mmax: int = 10
    trials: int = 2000
    seed: int = 0
    out: str | None = None
    suite: str = "all"
    horizons: str = "1000,10000,100000,1000000"
    radius: int = 1
    window: str | None = None
    starts: str | None = None
    certify: str = "5:20"
    verbose: bool = False

    @classmethod
    def from_mapping(cls, kv: dict) -> "ExperimentConfig":
        known = {f.name: f for f in fields(cls)}
        cfg = cls()
        for key, raw in kv.items():
            key = key.strip().lower().replace("-", "_")
            if key not in known:
                raise ConfigError(f"unknown config key {key!r}")
            setattr(cfg, key, _coerce(known[key], raw))
        return cfg

    def output_dir(self) -> Path:
        return Path(self.out or os.environ.get(OUT_ENV, "evoset_out"))

    def to_dict(self) -> dict:
        return asdict(self)


def _coerce(f, raw):
    if raw is None or not isinstance(raw, str):
        return raw
    kind = f.type
    try:
        if kind in ("int", "int | None"):
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "bool":
            if raw.lower() in ("1", "true", "yes", "on"):
                return True
            if raw.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
    except ValueError:
        raise ConfigError(f"bad value for {f.name}: {raw!r}") from None
    return raw


def read_config_file(path: str | os.PathLike) -> dict:
    """Flat ``key=value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        out[key.strip()] = value.strip()
    return out


def _range(text: str, name: str) -> tuple[int, int]:
    try:
        lo, hi = (int(p) for p in text.split(":"))
    except ValueError:
        raise ConfigError(f"{name} must look like lo:hi, got {text!r}") from None
    return lo, hi


def _start(g: Graph, cfg: ExperimentConfig):
    return g.origin if cfg.x0 is None else g.vertex(cfg.x0)


# ---------------------------------------------------------------------------
# Verification suites
# ---------------------------------------------------------------------------
def _random_mean_one(rng: np.random.Generator, k: int) -> tuple[np.ndarray, np.ndarray]:
    p = rng.dirichlet(np.ones(k))
    v = rng.exponential(size=k) * (rng.random(k) < 0.5) + rng.random(k) * 1e-3
    v = v / float(np.dot(v, p))
    return v, p


def _set_around(g: Graph, x0, r: int):
    if g.radial_quotient(x0) is not None:
        return SphereUnion.ball(g, x0, r)
    return ball(g, x0, r)


def verify_reports(g: Graph, cfg: ExperimentConfig) -> list[BoundReport]:
    """Bound checks for one graph and start, in a fixed order."""
    suite = cfg.suite
    if suite not in SUITES:
        raise ConfigError(f"unknown suite {suite!r}; choose from {', '.join(SUITES)}")
    want = (lambda name: True) if suite == "all" else (lambda name: name == suite)
    x0 = _start(g, cfg)
    C = cfg.c
    out: list[BoundReport] = []

    if want("unconditional"):
        for n in (5, 10):
            for r in (1, 2):
                out.append(check_entropy_decomposition(g, x0, n, ball(g, x0, r)))
        for k in range(5):
            v, p = _random_mean_one(seed_stream(cfg.seed, (5, k)), 4 + 3 * k)
            out.append(check_rootdecay(v, p))
        out.extend(check_ceil_log_inequality(np.geomspace(1.0, 1e6, 25)))

    needs_cert = any(want(s) for s in ("certificate", "escape", "decay", "maincor", "transience"))
    if not needs_cert:
        return out
    lo, hi = _range(cfg.certify, "certify")
    cert = certify_entropy_constant(g, [x0], (lo, hi), C)
    out.append(BoundReport.lower(
        "entropy_certificate", {"graph": g.spec, "x0": x0.label, "C": C, "n_lo": lo, "n_hi": hi},
        cert.min_ratio, C, 0.0, extra={"violations": [list(v) for v in cert.violations[:10]]},
        note="min over the range of E_n / n"))
    if not cert.passed:
        return out

    if want("escape"):
        for r in (1, 2, 3):
            A = ball(g, x0, r)
            for n in (15, 20):
                out.append(check_escape_bound(g, x0, n, A, C, cert, sharper=True))
        out.append(check_q_escape_bound(g, _set_around(g, x0, 1), 20, _set_around(g, x0, 2),
                                        C, cert))
    if want("decay"):
        for r in range(7):
            out.append(check_conddecay(g, _set_around(g, x0, r), C, cert))
    if want("maincor"):
        out.extend(check_maincor(g, x0, C, cfg.mmax, cfg.trials, cfg.seed, cert))
    if want("transience"):
        out.append(check_transience_sum(g, x0, x0, C, 40, cfg.mmax, cfg.trials, cfg.seed, cert))
    return out


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------
def _write(path: Path, text: str) -> None:
    path.write_text(text, encoding="utf-8")


def _jsonl(records) -> str:
    return "".join(json.dumps(r, ensure_ascii=False, sort_keys=False) + "\n" for r in records)


def _cmd_entropy(cfg, g, out):
    series = entropy_series(g, _start(g, cfg), cfg.nmax)
    _write(out / "entropy.csv", series.to_csv())
    return 0, ["entropy.csv"]


def _cmd_escape(cfg, g, out):
    x0 = _start(g, cfg)
    A = ball(g, x0, cfg.radius)
    lines = ["n,radius,size_A,escape_probability"]
    for n in range(1, cfg.nmax + 1):
        lines.append(f"{n},{cfg.radius},{len(A)},{format_float(escape_probability(g, x0, n, A))}")
    _write(out / "escape.csv", "\n".join(lines) + "\n")
    return 0, ["escape.csv"]


def _cmd_evolve(cfg, g, out):
    x0 = _start(g, cfg)
    recs = []
    for i in range(cfg.trials):
        traj = simulate_trajectory(g, x0, cfg.c, cfg.mmax, _trajectory_stream(cfg.seed, i))
        for r in traj.records:
            d = {"trajectory": i}
            d.update(r.to_dict(g, cfg.verbose))
            recs.append(d)
    _write(out / "trajectories.jsonl", _jsonl(recs))
    prof = decay_profile(g, x0, cfg.c, cfg.mmax, cfg.trials, cfg.seed)
    lines = ["m,mean_sqrt_pi,stderr,trials"]
    lines += [f"{m},{format_float(a)},{format_float(s)},{cfg.trials}" for m, a, s in prof.rows()]
    _write(out / "decay.csv", "\n".join(lines) + "\n")
    return 0, ["trajectories.jsonl", "decay.csv"]


def _cmd_green(cfg, g, out):
    x0 = _start(g, cfg)
    sums = green_partial_sum(g, x0, cfg.nmax)
    lines = ["T,partial_sum"] + [f"{t},{format_float(s)}" for t, s in enumerate(sums)]
    _write(out / "green.csv", "\n".join(lines) + "\n")
    files = ["green.csv"]
    if cfg.nmax >= 20:
        limit, tail = green_tail_estimate(sums)
        _write(out / "green_summary.jsonl", _jsonl([{
            "graph": g.spec, "x0": x0.label, "T": cfg.nmax, "partial_sum": float(sums[-1]),
            "tail_exponent": 1.5, "tail": tail, "limit_estimate": limit}]))
        files.append("green_summary.jsonl")
    return 0, files


def _cmd_verify(cfg, g, out):
    reports = verify_reports(g, cfg)
    _write(out / "reports.jsonl", "".join(r.to_json() + "\n" for r in reports))
    for r in reports:
        print(r.summary())
    status = 2 if any(r.failed_nonvacuous for r in reports) else 0
    return status, ["reports.jsonl"]


def _cmd_counterexample(cfg, g, out):
    if not isinstance(g, PendantTowerGraph):
        raise ConfigError("counterexample needs a pendant_tower graph")
    n_max = cfg.nmax
    window = _range(cfg.window, "window") if cfg.window else None
    if cfg.starts:
        starts = [s.strip() for s in cfg.starts.split(",") if s.strip()]
    else:
        starts = [g.backbone(n) for n in range(1, g.n_max + 1)]
        starts += [g.tree_vertex(n) for n in range(1, g.n_max + 1)]
    profiles = per_start_entropy_rates(g, starts, n_max, window)
    _write(out / "rates.csv", profiles_to_csv(profiles))
    horizons = [int(h) for h in cfg.horizons.split(",")]
    rec = recurrence_diagnostics(g, g.origin, horizons, cfg.trials, cfg.seed, green_T=n_max)
    diag = [{"kind": "truncation", "graph": g.spec, "heights": list(g.heights),
             "vertex_count": g.vertex_count(),
             "note": "finite truncation: only the mechanism (start-dependent rates, "
                     "recurrence of the backbone) is exhibited"},
            {"kind": "rate_ordering", "order": rate_ordering(profiles),
             "all_positive": all(p.rate > 0 for p in profiles)}]
    for h, f, se in rec.rows():
        diag.append({"kind": "return_frequency", "start": rec.start, "horizon": h,
                     "frequency": f, "stderr": se, "trials": rec.trials})
    diag.append({"kind": "green_partial_sum", "start": rec.start, "T": n_max,
                 "value": float(rec.green[-1])})
    diag.append({"kind": "backbone_resistance", "from": 1, "to": g.n_max,
                 "value": backbone_resistance(1, g.n_max)})
    reports = [backbone_trace_check(g, 200, 20000, cfg.seed)]
    tallest = max(range(1, g.n_max + 1), key=g.height)
    if g.height(tallest) >= 2:
        reports.append(drift_check(g, tallest, 200, 5000, cfg.seed))
    reports.extend(check_hitting_time_bound([7, 15, 31, 63]))
    diag.extend(dict(kind="bound_report", **r.to_dict()) for r in reports)
    _write(out / "diagnostics.jsonl", _jsonl(diag))
    status = 2 if any(r.failed_nonvacuous for r in reports) else 0
    return status, ["rates.csv", "diagnostics.jsonl"]


_DISPATCH = {"entropy": _cmd_entropy, "escape": _cmd_escape, "evolve": _cmd_evolve,
             "green": _cmd_green, "verify": _cmd_verify, "counterexample": _cmd_counterexample}


def run(subcommand: str, config: ExperimentConfig | dict) -> int:
    """Run one subcommand; returns the exit status and writes outputs plus metadata."""
    if subcommand not in _DISPATCH:
        print(f"unknown subcommand {subcommand!r}", file=sys.stderr)
        return 1
    try:
        cfg = config if isinstance(config, ExperimentConfig) else ExperimentConfig.from_mapping(config)
        if subcommand == "counterexample" and cfg.graph == ExperimentConfig.graph:
            cfg.graph = DEFAULT_PENDANT
        if cfg.nmax is None:
            cfg.nmax = DEFAULT_NMAX[subcommand]
        if cfg.seed < 0 or cfg.seed >= 2 ** 64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        g = parse_graph(cfg.graph)
        out = cfg.output_dir()
        out.mkdir(parents=True, exist_ok=True)
    except (ConfigError, GraphError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    started = time.time()
    cap_events: list[str] = []
    files: list[str] = []
    try:
        status, files = _DISPATCH[subcommand](cfg, g, out)
    except CapExceeded as exc:
        cap_events.append(str(exc))
        print(f"error: {exc}", file=sys.stderr)
        status = 1
    except (ConfigError, GraphError, UncertifiedConstant, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        status = 1
    meta = {"subcommand": subcommand, "config": cfg.to_dict(), "graph": g.spec,
            "version": __version__, "rng_algorithm": RNG_ALGORITHM,
            "started_unix": started, "wall_time_s": time.time() - started,
            "cap_events": cap_events, "outputs": files, "exit_status": status}
    _write(out / "run_metadata.json", json.dumps(meta, indent=2) + "\n")
    return status


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="evoset", description=__doc__.splitlines()[0])
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("--config", help="flat key=value file; flags override it")
    p.add_argument("--graph", help="graph spec, e.g. tree3, z, cycle,n=7, "
                                   "graph=pendant_tower,hmax=12,nmax=8")
    p.add_argument("--x0", help="start vertex label (default: the graph's origin)")
    p.add_argument("--c", type=float, help="entropy constant C")
    p.add_argument("--nmax", type=int, help="walk steps / Green horizon")
    p.add_argument("--mmax", type=int, help="evolving-set supersteps")
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int, help="master seed (64-bit)")
    p.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./evoset_out)")
    p.add_argument("--suite", choices=SUITES)
    p.add_argument("--horizons", help="comma-separated return-time horizons")
    p.add_argument("--radius", type=int, help="ball radius for escape")
    p.add_argument("--window", help="rate window lo:hi for counterexample")
    p.add_argument("--starts", help="comma-separated start labels for counterexample")
    p.add_argument("--certify", help="certificate range lo:hi for verify")
    p.add_argument("--verbose", action="store_true", default=None,
                   help="include full vertex sets in trajectory output")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:   # usage errors and --help
        return int(exc.code or 0)
    kv: dict = {}
    if args.config:
        try:
            kv.update(read_config_file(args.config))
        except (OSError, ConfigError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
    for key, val in vars(args).items():
        if key not in ("subcommand", "config") and val is not None:
            kv[key] = val
    try:
        cfg = ExperimentConfig.from_mapping(kv)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return run(args.subcommand, cfg)


if __name__ == "__main__":
    sys.exit(main())
