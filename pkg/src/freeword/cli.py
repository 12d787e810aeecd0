"""Command line front end.

Exit codes: 0 success, 1 input error, 2 non-convergence, 3 verdict
conflict or suite mismatch.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass
from pathlib import Path

from . import classify as cl
from . import complexity as cx
from . import limits as lm
from .graphs import (
    GraphSelfMap,
    InfiniteAlphabetError,
    InvalidMapError,
    SplittingError,
    compute_strata,
    edge_growth,
    growth_type,
    long_nongrowing_subpaths,
    normalize_power,
    rose_map,
)
from .suite import FULL_BUDGET, QUICK_BUDGET, load_input, paper_suite, resolve
from .words import AlphabetError, FormatError

OK, INPUT_ERROR, NO_CONVERGENCE, CONFLICT = 0, 1, 2, 3
COMMANDS = ("limit", "complexity", "classify", "growth", "lamination", "window-count", "paper-suite")
WINDOW_NS = tuple(10**k for k in range(2, 9))


@dataclass
class RunConfig:
    command: str
    input: str | None = None
    seed: str | None = None
    length: int | None = None
    n_max: int | None = None
    out: str | None = None
    iter_cap: int = lm.DEFAULT_ITER_CAP
    symbol_cap: int = lm.DEFAULT_SYMBOL_CAP
    stability_window: int = lm.DEFAULT_WINDOW
    exact_fraction: float = cx.EXACT_FRACTION
    quick: bool = False
    workers: int = 1
    params: tuple = ()
    nongrowing_threshold: int = 16

    def validate(self) -> None:
        for name in ("iter_cap", "symbol_cap", "stability_window", "workers", "nongrowing_threshold"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.length is not None and self.length <= 0:
            raise ValueError("--len must be positive")
        if self.n_max is not None and self.n_max <= 0:
            raise ValueError("--nmax must be positive")
        if self.length is not None and self.n_max is not None and self.n_max > self.length:
            raise ValueError("--nmax may not exceed the prefix budget --len")
        if not 0 < self.exact_fraction <= 1:
            raise ValueError("--exact-fraction must lie in (0, 1]")

    def stream_kw(self) -> dict:
        return {"window": self.stability_window, "iter_cap": self.iter_cap, "symbol_cap": self.symbol_cap}

    def dump(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=2) + "\n"


# ---------------------------------------------------------------- defaults

DEFAULT_LEN = {"limit": 1000, "complexity": 100_000, "classify": FULL_BUDGET, "lamination": 100_000}
DEFAULT_NMAX = {"complexity": 100, "classify": cl.DEFAULT_NMAX, "lamination": 8, "paper-suite": cl.DEFAULT_NMAX}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="freeword", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("params", nargs="*", help="window-count: C1 d1 lam1 C2 d2 lam2")
    ap.add_argument("--in", dest="input", help=".fga or .gmap file (bundled corpus names accepted)")
    ap.add_argument("--seed", help="seed word or edge, in file letters")
    ap.add_argument("--len", dest="length", type=int, help="prefix length / symbol budget")
    ap.add_argument("--nmax", dest="n_max", type=int, help="largest factor length sampled")
    ap.add_argument("--out", help="output file (default: stdout)")
    ap.add_argument("--iter-cap", type=int, default=lm.DEFAULT_ITER_CAP)
    ap.add_argument("--symbol-cap", type=int, default=lm.DEFAULT_SYMBOL_CAP)
    ap.add_argument("--stability-window", type=int, default=lm.DEFAULT_WINDOW)
    ap.add_argument("--exact-fraction", type=float, default=cx.EXACT_FRACTION)
    ap.add_argument("--quick", action="store_true", help=f"reduced budget ({QUICK_BUDGET} symbols)")
    ap.add_argument("--workers", type=int, default=1, help="paper-suite worker processes")
    ap.add_argument("--nongrowing-threshold", type=int, default=16,
                    help="growth: report non-growing subpaths of the seed path longer than this")
    ap.add_argument("--print-config", action="store_true", help="print effective settings and exit")
    return ap


def make_config(ns: argparse.Namespace) -> RunConfig:
    cfg = RunConfig(ns.command, ns.input, ns.seed, ns.length, ns.n_max, ns.out, ns.iter_cap,
                    ns.symbol_cap, ns.stability_window, ns.exact_fraction, ns.quick, ns.workers,
                    tuple(ns.params), ns.nongrowing_threshold)
    if cfg.length is None:
        if cfg.quick and cfg.command in ("classify", "paper-suite"):
            cfg.length = QUICK_BUDGET
        elif cfg.command == "paper-suite":
            cfg.length = FULL_BUDGET
        else:
            cfg.length = DEFAULT_LEN.get(cfg.command)
    if cfg.n_max is None:
        cfg.n_max = DEFAULT_NMAX.get(cfg.command)
    return cfg


# ---------------------------------------------------------------- output

def _emit(cfg: RunConfig, text: str) -> None:
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)


def _need(cfg: RunConfig, *names) -> None:
    for n in names:
        if getattr(cfg, n) is None:
            raise ValueError(f"--{n.replace('_', '-')} is required for {cfg.command}")


def _source(cfg: RunConfig):
    _need(cfg, "input")
    return load_input(resolve(cfg.input))


def _stream(cfg: RunConfig):
    _need(cfg, "seed")
    return lm.as_stream(_source(cfg), cfg.seed, **cfg.stream_kw())


# ---------------------------------------------------------------- commands

def cmd_limit(cfg: RunConfig) -> int:
    stream = _stream(cfg)
    codes = stream.prefix(cfg.length)
    if len(codes) >= 4:
        rat = lm.rationality_check(codes[: min(len(codes), 100_000)])
        if rat.status == "PeriodicCandidate":
            print(f"warning: prefix looks eventually periodic: {rat}", file=sys.stderr)
    if cfg.out:
        lm.write_symbols(cfg.out, stream.alphabet, codes)
    else:
        sys.stdout.write(stream.alphabet.format(codes) + "\n")
    print(f"certified {len(codes)} symbols ({stream.mode} mode, {stream.iterations} iterates, {stream.label})", file=sys.stderr)
    return OK


def cmd_complexity(cfg: RunConfig) -> int:
    codes = _stream(cfg).prefix(cfg.length)
    prof = cx.complexity_profile(codes, cfg.n_max, exact_fraction=cfg.exact_fraction)
    prof = cx.recurrence_profile(codes, cfg.n_max, profile=prof)
    _emit(cfg, prof.to_csv())
    return OK


def cmd_classify(cfg: RunConfig) -> int:
    _need(cfg, "seed")
    v = cl.classify_fixed_point(_source(cfg), cfg.seed, budget=cfg.length, n_max=cfg.n_max, **cfg.stream_kw())
    _emit(cfg, v.record() + "\n")
    return CONFLICT if v.route == "Conflict" else OK


def cmd_growth(cfg: RunConfig) -> int:
    src = _source(cfg)
    f = src if isinstance(src, GraphSelfMap) else rose_map(src)
    fk, k = normalize_power(f)
    lines = [f"power={k}"]
    for s in compute_strata(fk):
        names = ",".join(f.graph.edge_names.generators[e] for e in s.edges)
        lines.append(f"stratum {s} edges={names}")
    for e, name in enumerate(f.graph.edge_names.generators):
        lines.append(f"edge {name} growth={edge_growth(fk, e)}")
    if cfg.seed:
        lines.append(f"path {cfg.seed} growth={growth_type(fk, cfg.seed)}")
        for start, n in long_nongrowing_subpaths(fk, f.graph.path(cfg.seed).edges, cfg.nongrowing_threshold):
            lines.append(f"note: non-growing subpath of {n} edges at position {start}")
    _emit(cfg, "\n".join(lines) + "\n")
    return OK


def cmd_lamination(cfg: RunConfig) -> int:
    lang = cx.laminary_language(_stream(cfg), cfg.n_max, cfg.length)
    lines = [f"stable={int(lang.stable)} inverse_closed={int(lang.is_inverse_closed())} "
             f"factor_closed={int(lang.is_factor_closed())}"]
    for n in sorted(lang.words):
        lines.append(f"{n} {len(lang.words[n])}: " + ", ".join(lang.format(n)))
    _emit(cfg, "\n".join(lines) + "\n")
    return OK


def cmd_window_count(cfg: RunConfig) -> int:
    if len(cfg.params) != 6:
        raise ValueError("window-count takes C1 d1 lam1 C2 d2 lam2")
    c1, d1, l1, c2, d2, l2 = cfg.params
    params = (float(c1), int(d1), float(l1), float(c2), int(d2), float(l2))
    ns = WINDOW_NS if cfg.n_max is None else tuple(n for n in WINDOW_NS if n <= cfg.n_max)
    rows, m1, m2 = cx.window_sweep(params, ns)
    out = ["n,count,phi_class,ratio"]
    out += [f"{r.n},{r.count},{r.phi_class},{r.ratio:.6f}" for r in rows]
    out.append(f"# M1={m1:.6f} M2={m2:.6f} M2/M1={m2 / m1:.6f}" if m1 > 0 else "# M1=0")
    _emit(cfg, "\n".join(out) + "\n")
    return OK


def cmd_paper_suite(cfg: RunConfig) -> int:
    root = Path(cfg.input) if cfg.input else None
    report = paper_suite(root, quick=cfg.quick, n_max=cfg.n_max, workers=cfg.workers,
                         budget=cfg.length, **cfg.stream_kw())
    _emit(cfg, report.text())
    return OK if report.ok else CONFLICT


HANDLERS = {
    "limit": cmd_limit,
    "complexity": cmd_complexity,
    "classify": cmd_classify,
    "growth": cmd_growth,
    "lamination": cmd_lamination,
    "window-count": cmd_window_count,
    "paper-suite": cmd_paper_suite,
}


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        cfg = make_config(ns)
        cfg.validate()
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return INPUT_ERROR
    if ns.print_config:
        sys.stdout.write(cfg.dump())
        return OK
    try:
        return HANDLERS[cfg.command](cfg)
    except lm.StabilizationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return NO_CONVERGENCE
    except (FileNotFoundError, FormatError, AlphabetError, InvalidMapError, SplittingError,
            InfiniteAlphabetError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
