"""The bundled example corpus and the end-to-end classification run over it."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .classify import ClassVerdict, classify_fixed_point, classify_structural
from .graphs import GraphSelfMap, load_gmap, rose_map
from .words import GroupEndo, load_fga

FULL_BUDGET = 10**7
QUICK_BUDGET = 10**5


def corpus_dir() -> Path:
    return Path(str(resources.files("freeword") / "corpus"))


ALIASES = {"id": "identity"}


def resolve(name: str | Path, root: Path | None = None) -> Path:
    """A path as given, else a file of the same name in the corpus."""
    p = Path(name)
    if p.exists():
        return p
    root = corpus_dir() if root is None else Path(root)
    stem = ALIASES.get(p.stem, p.stem)
    cand = root / (stem + p.suffix if p.suffix else stem + ".fga")
    if cand.exists():
        return cand
    raise FileNotFoundError(f"input not found: {name}")


def load_input(path: str | Path) -> GroupEndo | GraphSelfMap:
    path = Path(path)
    if path.suffix == ".gmap":
        return load_gmap(path)
    return load_fga(path)


@dataclass(frozen=True)
class Entry:
    name: str
    file: str
    seed: str
    expected: frozenset
    rec: str | None = None
    core: bool = True
    budget: int | None = None  # overrides the full budget

    def admits(self, v: ClassVerdict) -> bool:
        if v.cls not in self.expected:
            return False
        return self.rec is None or v.rec_cls == self.rec


def _e(name, file, seed, expected, **kw) -> Entry:
    if isinstance(expected, str):
        expected = {expected}
    return Entry(name, file, seed, frozenset(expected), **kw)


ENTRIES = (
    _e("omega", "omega.fga", "a", "Linear"),
    _e("rank4-a", "alpha_rank4.fga", "a", "Linear"),
    _e("rank4-c", "alpha_rank4.fga", "c", "Linear"),
    _e("alpha11", "alpha11.fga", "a", "NLogLogN"),
    _e("alpha21", "alpha21.fga", "a", "NLogN"),
    _e("alpha0-e", "alpha0.gmap", "e", "Quadratic"),
    _e("alpha0-c", "alpha0.fga", "c", "Bounded"),
    _e("tribonacci-inv3", "tribonacci_inv3.fga", "A", "Linear"),
    _e("rcdif", "rcdif.fga", "c", "Quadratic", rec="Linear"),
    _e("alpha2", "alpha2.fga", "c", {"Bounded", "Quadratic"}),
    _e("alpha1", "alpha1.fga", "a", "Linear", core=False),
    _e("tribonacci", "tribonacci.fga", "a", "Linear", core=False),
    _e("fibonacci", "fibonacci.fga", "a", "Linear", core=False),
    _e("lamiex1", "lamiex1.fga", "a", "Linear", core=False, budget=10**6),
)


@dataclass
class SuiteRow:
    entry: Entry
    verdict: ClassVerdict
    low_confidence: bool = False

    @property
    def ok(self) -> bool:
        return self.entry.admits(self.verdict)

    def line(self) -> str:
        v, e = self.verdict, self.entry
        exp = "|".join(sorted(e.expected))
        if e.rec:
            exp += f" p_rec={e.rec}"
        flag = " low-confidence" if self.low_confidence else ""
        return (f"{'PASS' if self.ok else 'MISMATCH'} {e.name} seed={e.seed} expected={exp} "
                f"got={v.cls} p_rec={v.rec_cls or '-'} route={v.route} "
                f"structural={v.structural or '-'} empirical={v.empirical or '-'}{flag}")


@dataclass
class SuiteReport:
    rows: list = field(default_factory=list)
    quick: bool = False

    @property
    def core(self) -> list:
        return [r for r in self.rows if r.entry.core]

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.rows)

    def text(self) -> str:
        lines = [r.line() for r in self.rows]
        core = self.core
        lines.append(f"{sum(r.ok for r in core)}/{len(core)} class matches")
        extra = [r for r in self.rows if not r.entry.core]
        if extra:
            lines.append(f"extras: {sum(r.ok for r in extra)}/{len(extra)}")
        for r in self.rows:
            if not r.ok:
                lines.append(f"mismatch {r.entry.name}: expected {sorted(r.entry.expected)}, "
                             f"structural={r.verdict.structural} empirical={r.verdict.empirical}")
        return "\n".join(lines) + "\n"


def check_corpus(root: Path | None = None, entries=ENTRIES) -> None:
    for e in entries:
        resolve(e.file, root)


def run_entry(e: Entry, root: Path | None = None, budget: int = FULL_BUDGET, quick: bool = False,
              n_max: int = 2000, **stream_kw) -> SuiteRow:
    source = load_input(resolve(e.file, root))
    b = budget if quick or e.budget is None else min(budget, e.budget)
    v = classify_fixed_point(source, e.seed, budget=b, n_max=n_max, **stream_kw)
    if v.structural is None:
        f = source if isinstance(source, GraphSelfMap) else rose_map(source)
        v.structural = classify_structural(f, f.alphabet.code(e.seed)).cls
    low = quick and (v.empirical != v.structural or any("inconclusive" in n for n in v.notes))
    if low:
        v.notes.append("low confidence: reduced prefix budget")
    return SuiteRow(e, v, low_confidence=low)


def _run(args):
    e, root, budget, quick, n_max, kw = args
    return run_entry(e, root, budget, quick, n_max, **kw)


def paper_suite(root: Path | None = None, quick: bool = False, n_max: int = 2000, workers: int = 1,
                budget: int | None = None, entries=ENTRIES, **stream_kw) -> SuiteReport:
    """Classify every corpus entry end to end and compare with the expected class."""
    check_corpus(root, entries)
    if budget is None:
        budget = QUICK_BUDGET if quick else FULL_BUDGET
    jobs = [(e, root, budget, quick, n_max, stream_kw) for e in entries]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=min(workers, os.cpu_count() or 1)) as pool:
            rows = list(pool.map(_run, jobs))
    else:
        rows = [_run(j) for j in jobs]
    return SuiteReport(rows, quick)
