"""Two independent decisions of the complexity class of a fixed word.

The structural route reads the class off the term closure of the seed's
tail: non-growing tail means bounded, a linear edge or exceptional term
means quadratic, otherwise the growth types of the growing terms decide
(same rate and degree: n; same rate, several degrees: n log log n;
several rates: n log n).

The empirical route fits measured factor counts against the candidate
functions and applies trend gates on p(n)/n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .complexity import ComplexityProfile, recurrence_profile
from .graphs import (
    GraphSelfMap,
    InfiniteAlphabetError,
    InvalidMapError,
    SplittingError,
    Term,
    compute_strata,
    detect_exceptional,
    detect_nielsen,
    edge_growth,
    edge_kind,
    edge_splitting,
    linear_edges,
    normalize_power,
    rose_map,
    term_closure,
    term_growth,
)
from .limits import as_stream, rationality_check
from .words import GroupEndo, verify_automorphism

CLASSES = ("Bounded", "Linear", "NLogLogN", "NLogN", "Quadratic")
RANK = {c: i for i, c in enumerate(CLASSES)}
DIVERGENCE_CLASS = {
    "NonDivergent": "Linear",
    "PolynomialDivergence": "NLogLogN",
    "ExponentialDivergence": "NLogN",
}

RESIDUAL_MARGIN = 0.05
RISE_TOL = 0.05
QUAD_SHARE = 0.25
MIN_SAMPLES = 20


@dataclass(frozen=True)
class DivergenceClass:
    kind: str  # NonDivergent | PolynomialDivergence | ExponentialDivergence
    witness: tuple = ()

    @property
    def complexity(self) -> str:
        return DIVERGENCE_CLASS[self.kind]

    def __str__(self) -> str:
        if not self.witness:
            return self.kind
        return f"{self.kind}({' vs '.join(str(t) for t in self.witness)})"


def divergence(types) -> DivergenceClass | None:
    """Compare the growth types of growing terms; None if nothing grows."""
    growing = [t for t in types if t.growing]
    if not growing:
        return None
    lo = min(growing, key=lambda t: t.key())
    hi = max(growing, key=lambda t: t.key())
    if not lo.same_rate(hi):
        return DivergenceClass("ExponentialDivergence", (lo, hi))
    if lo.d != hi.d:
        return DivergenceClass("PolynomialDivergence", (lo, hi))
    return DivergenceClass("NonDivergent", (hi,))


@dataclass
class ClassVerdict:
    cls: str
    route: str  # Structural | Empirical | Both-agree | Conflict
    divergence: DivergenceClass | None = None
    witnesses: list = field(default_factory=list)
    residuals: dict = field(default_factory=dict)
    structural: str | None = None
    empirical: str | None = None
    rec_cls: str | None = None
    unknown: bool = False
    confidence: float | None = None
    notes: list = field(default_factory=list)
    empirical_rec: str | None = None
    profile: ComplexityProfile | None = field(default=None, repr=False)

    def record(self) -> str:
        res = ",".join(f"{k}:{v:.4g}" for k, v in self.residuals.items()) or "-"
        parts = [
            f"class={self.cls}",
            f"route={self.route}",
            f"divergence={self.divergence or '-'}",
            f"witnesses={','.join(self.witnesses) or '-'}",
            f"residuals={res}",
        ]
        if self.structural is not None or self.empirical is not None:
            parts.append(f"structural={self.structural or '-'}")
            parts.append(f"empirical={self.empirical or '-'}")
        if self.rec_cls is not None:
            parts.append(f"p_rec={self.rec_cls}")
        if self.confidence is not None:
            parts.append(f"confidence={self.confidence:.3f}")
        if self.notes:
            parts.append(f"notes={' | '.join(self.notes)}")
        return "; ".join(parts)

    def __str__(self) -> str:
        return self.record()


def parse_record(text: str) -> dict[str, str]:
    out = {}
    for part in text.strip().split("; "):
        key, _, value = part.partition("=")
        out[key] = value
    return out


# ---------------------------------------------------------------- special cases

@dataclass
class Refinement:
    forced: str | None = None
    excluded: frozenset = frozenset()
    allowed: frozenset | None = None
    reasons: list = field(default_factory=list)

    def admits(self, cls: str) -> bool:
        if self.forced is not None and cls != self.forced:
            return False
        if cls in self.excluded:
            return False
        return self.allowed is None or cls in self.allowed


def special_case_rules(f: GraphSelfMap | GroupEndo) -> Refinement:
    """Constraints from asserted or witnessed automorphism types.

    Proxies: a rose whose edges form one EG stratum stands in for full
    irreducibility; no linear edges and no exceptional families for
    atoroidal; every growth rate equal to 1 for polynomially growing.
    """
    if isinstance(f, GroupEndo):
        f = rose_map(f)
    ref = Refinement()
    asserted = set(f.assertions)
    try:
        fk, _ = normalize_power(f)
    except InvalidMapError:
        fk = f
    strata = compute_strata(fk)
    single_eg = f.is_rose and len(strata) == 1 and strata[0].kind == "EG"
    if "fully-irreducible" in asserted or single_eg:
        ref.forced = "Linear"
        ref.reasons.append("fully-irreducible" if "fully-irreducible" in asserted else "single EG stratum (proxy)")
    atoroidal = "atoroidal" in asserted
    if not atoroidal:
        atoroidal = not linear_edges(fk) and not detect_exceptional(fk)
        if atoroidal:
            ref.reasons.append("no linear edges or exceptional families (atoroidal proxy)")
    else:
        ref.reasons.append("atoroidal")
    if atoroidal:
        ref.excluded = frozenset({"Quadratic"})
    poly = "polynomially-growing" in asserted
    if not poly:
        poly = all(not edge_growth(fk, e).lam > 1 + 1e-9 for e in range(fk.graph.n_edges))
        if poly:
            ref.reasons.append("all growth rates 1 (polynomially growing)")
    else:
        ref.reasons.append("polynomially-growing")
    if poly:
        ref.allowed = frozenset({"Bounded", "Quadratic"})
    return ref


def apply_refinement(v: ClassVerdict, ref: Refinement) -> ClassVerdict:
    if ref.admits(v.cls):
        return v
    v.notes.append(f"{v.cls} contradicts {', '.join(ref.reasons)}")
    v.route = "Conflict"
    return v


# ---------------------------------------------------------------- structural

def _fmt(f: GraphSelfMap, t: Term) -> str:
    return f.graph.format(t.path).replace(" ", "")


def orbit_class(f: GraphSelfMap, start: list[Term]):
    """Class of the total complexity of the orbit of a split path.

    Returns (class, divergence, witnesses, unconfirmed).
    """
    tg = term_closure(f, start)
    witnesses = []
    for t in tg.terms.values():
        if t.kind == "exceptional":
            witnesses.append(f"exceptional:{_fmt(f, t)}")
        elif t.kind == "edge" and edge_kind(f, t.path[0]) == "NEG-linear":
            witnesses.append(f"linear:{_fmt(f, t)}")
    types = [term_growth(f, t) for t in tg.terms.values()]
    unconfirmed = any(t.unconfirmed for t in types)
    div = divergence(types)
    if witnesses:
        return "Quadratic", div, sorted(witnesses), unconfirmed
    if div is None:
        return "Bounded", None, [], unconfirmed
    return div.complexity, div, [], unconfirmed


def _recurrence_class(f: GraphSelfMap, start: list[Term]) -> tuple[str, list[str]]:
    """Recurrence complexity of the ray: at least linear; every non-linear,
    non-fixed edge term contributes its own total complexity."""
    tg = term_closure(f, start)
    best, why = "Linear", []
    for t in tg.terms.values():
        if t.kind != "edge":
            continue
        kind = edge_kind(f, t.path[0])
        if kind in ("NEG-linear", "NEG-fixed") or not term_growth(f, t).growing:
            continue
        sub, _, _, _ = orbit_class(f, [Term("edge", (t.path[0] & ~1,))])
        if RANK[sub] > RANK[best]:
            best, why = sub, [f"edge:{_fmt(f, t)}"]
    return best, why


def classify_structural(f: GraphSelfMap | GroupEndo, seed, nielsen_cap: int = 64) -> ClassVerdict:
    """Decision tree on the ray e . gamma . f(gamma) ... of a seed edge."""
    if isinstance(f, GroupEndo):
        f = rose_map(f)
    code = f.alphabet.code(seed) if isinstance(seed, str) else int(seed)
    refinement = special_case_rules(f)
    try:
        fk, k = normalize_power(f)
        img = fk.image(code)
        if img[0] != code:
            raise InvalidMapError(f"image of {f.alphabet.symbol(code)} does not start with it")
        gamma = img[1:]
        status = detect_nielsen(fk, gamma, nielsen_cap)
        notes = [f"power {k}"] if k > 1 else []
        if status.non_growing:
            v = ClassVerdict("Bounded", "Structural", witnesses=[f"tail {status}"], rec_cls="Bounded", notes=notes)
            v.structural = "Bounded"
            return apply_refinement(v, refinement)
        terms = edge_splitting(fk, code)
        if terms[0] != Term("edge", (code,)):
            raise InvalidMapError("the seed edge is not the first term of its image")
        cls, div, wit, unconfirmed = orbit_class(fk, terms[1:])
        rec, why = _recurrence_class(fk, terms[1:])
        if cls != "Quadratic":
            # compare, do not overwrite: the two should agree
            if rec != cls:
                notes.append(f"recurrence class {rec} differs from {cls}")
        unknown = status.kind == "unknown" or unconfirmed
        v = ClassVerdict(cls, "Structural", div, wit + [f"rec:{w}" for w in why], rec_cls=rec, unknown=unknown, notes=notes)
        v.structural = cls
        return apply_refinement(v, refinement)
    except (SplittingError, InfiniteAlphabetError) as exc:
        if refinement.forced is not None:
            v = ClassVerdict(refinement.forced, "Structural", witnesses=list(refinement.reasons),
                             rec_cls=refinement.forced, notes=[f"no complete splitting ({exc})"])
            v.structural = refinement.forced
            return v
        raise


# ---------------------------------------------------------------- empirical

def _candidates(x: np.ndarray) -> dict[str, np.ndarray]:
    lx = np.log(x)
    return {
        "Bounded": np.zeros_like(x),
        "Linear": lx,
        "NLogLogN": lx + np.log(np.log(lx)),
        "NLogN": lx + np.log(lx),
        "Quadratic": 2 * lx,
    }


def _line_fit(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    """Least squares y = a + b x; returns (a, b, rms residual)."""
    A = np.vstack([np.ones_like(x), x]).T
    (a, b), *_ = np.linalg.lstsq(A, y, rcond=None)
    r = y - (a + b * x)
    return float(a), float(b), float(np.sqrt(np.mean(r * r)))


@dataclass
class FitReport:
    window: tuple[int, int]
    samples: int
    residuals: dict
    rise: float
    trend: str
    quad_share: float
    allowed: list
    ranking: list

    def __str__(self) -> str:
        return (f"window={self.window} samples={self.samples} rise={self.rise:.4f} "
                f"trend={self.trend} quad_share={self.quad_share:.3f}")


def empirical_fit(ns, ps) -> FitReport | None:
    ns = np.asarray(ns, dtype=float)
    ps = np.asarray(ps, dtype=float)
    if len(ns) == 0:
        return None
    hi = ns.max()
    lo = math.floor(hi / 10)
    if lo < max(ns.min(), 1):
        return None
    sel = (ns >= lo) & (ns >= 3)
    x, p = ns[sel], ps[sel]
    if len(x) < MIN_SAMPLES:
        return None
    y = np.log(p)
    residuals = {}
    for name, g in _candidates(x).items():
        r = y - g
        residuals[name] = float(np.sqrt(np.mean((r - r.mean()) ** 2)))
    # trend of p(n)/n
    q = p / x
    shapes = {"loglog": np.log(np.log(x)), "log": np.log(x), "linear": x}
    fits = {k: _line_fit(h, q) for k, h in shapes.items()}
    # relative change of the smoothed p(n)/n across the window
    _, b, _ = fits["log"]
    rise = b * (math.log(x.max()) - math.log(x.min())) / q.mean()
    aq, bq, rq = fits["linear"]
    quad_share = bq * x.max() / (aq + bq * x.max()) if aq + bq * x.max() > 0 else 0.0
    trend = min(fits, key=lambda k: fits[k][2])
    if abs(rise) <= RISE_TOL:
        trend = "flat"
    allowed = set(CLASSES)
    if p.max() == p.min():
        allowed = {"Bounded"}
    elif rise <= RISE_TOL:
        allowed = {"Linear"}
    else:
        allowed -= {"Bounded", "Linear"}
        quad = (trend == "linear" and bq > 0 and quad_share >= QUAD_SHARE
                and rq < (1 - RESIDUAL_MARGIN) * fits["log"][2])
        allowed = {"Quadratic"} if quad else allowed - {"Quadratic"}
    ranking = sorted(CLASSES, key=lambda c: residuals[c])
    return FitReport((int(x.min()), int(x.max())), len(x), residuals, rise, trend, quad_share,
                     [c for c in ranking if c in allowed], ranking)


def classify_empirical(profile: ComplexityProfile | None = None, ns=None, ps=None,
                       recurrence: bool = False) -> ClassVerdict:
    """Fit measured counts against 1, n, n log log n, n log n, n^2.

    Uses exact samples (stable samples for recurrence counts) from the top
    decade of n.  Gates on p(n)/n: flat means at most linear, rising means
    superlinear, rising linearly with a large share means quadratic.
    """
    if profile is not None:
        ns, ps = profile.stable_recurrence() if recurrence else profile.exact_samples()
    rep = empirical_fit(ns, ps)
    if rep is None:
        return ClassVerdict("Unknown", "Empirical", unknown=True, notes=["too few exact samples over a decade"])
    best = rep.allowed[0]
    conf = None
    notes = [str(rep)]
    if len(rep.allowed) > 1:
        r1, r2 = rep.residuals[rep.allowed[0]], rep.residuals[rep.allowed[1]]
        conf = (r2 - r1) / r2 if r2 > 0 else 0.0
        if r1 > (1 - RESIDUAL_MARGIN) * r2:
            notes.append(f"inconclusive between {rep.allowed[0]} and {rep.allowed[1]}")
    v = ClassVerdict(best, "Empirical", residuals=rep.residuals, empirical=best, confidence=conf, notes=notes)
    return v


# ---------------------------------------------------------------- fixed points

DEFAULT_BUDGET = 10**7
DEFAULT_NMAX = 2000


def _combine(struct: ClassVerdict | None, emp: ClassVerdict) -> ClassVerdict:
    if struct is None:
        emp.route = "Empirical"
        return emp
    v = struct
    v.empirical = emp.cls
    v.residuals = emp.residuals
    v.confidence = emp.confidence
    v.notes = v.notes + emp.notes
    if struct.route == "Conflict":
        return v
    if emp.cls == struct.cls:
        v.route = "Both-agree"
    elif struct.unknown:
        v.route = "Conflict"
    else:
        v.route = "Structural"
        v.notes.append(f"empirical route gave {emp.cls}")
    return v


def classify_fixed_point(source, seed, budget: int = DEFAULT_BUDGET, n_max: int = DEFAULT_NMAX,
                         probe: int = 10_000, **stream_kw) -> ClassVerdict:
    """Classify the fixed word lim source^k(seed) both ways and cross-check."""
    notes = []
    endo = source.endo if isinstance(source, GraphSelfMap) else source
    if isinstance(source, GroupEndo):
        rep = verify_automorphism(source, search_cap=10_000)
        if not rep.ok:
            notes.append(f"not verified as an automorphism ({rep.verdict}: {'; '.join(rep.failures) or 'no inverse'})")
    stream = as_stream(source, seed, **stream_kw)
    head = stream.prefix(probe)
    rat = rationality_check(head)
    f = source if isinstance(source, GraphSelfMap) else rose_map(endo)
    struct = None
    seed_code = None
    if isinstance(seed, str) and len(seed.split()) == 1:
        seed_code = f.alphabet.code(seed.strip())
    elif isinstance(seed, int):
        seed_code = seed
    if seed_code is not None:
        try:
            struct = classify_structural(f, seed_code)
        except (SplittingError, InfiniteAlphabetError, InvalidMapError) as exc:
            notes.append(f"structural route unavailable: {exc}")
    else:
        notes.append("structural route needs a single-letter seed")
    length = budget
    if rat.status == "PeriodicCandidate":
        notes.append(f"rational: {rat} (X lies in the boundary of Fix)")
        length = min(budget, 100_000)
    codes = stream.prefix(length)
    nm = min(n_max, len(codes) // 4)
    profile = recurrence_profile(codes, nm)
    emp = classify_empirical(profile)
    emp_rec = classify_empirical(profile, recurrence=True)
    if rat.status == "PeriodicCandidate":
        if emp.cls != "Bounded":
            emp.notes.append(f"fit gave {emp.cls} on a periodic prefix")
        emp = ClassVerdict("Bounded", "Empirical", residuals=emp.residuals, empirical="Bounded", notes=emp.notes)
    v = _combine(struct, emp)
    if struct is None:
        v.rec_cls = emp_rec.cls
    v.notes = notes + v.notes + [f"empirical p_rec={emp_rec.cls}"]
    v.profile = profile
    v.empirical_rec = emp_rec.cls
    return v


def recurrence_check(v: ClassVerdict) -> bool:
    """Non-quadratic p-class forces the same p_rec class."""
    if v.cls == "Quadratic" or v.rec_cls is None:
        return True
    return v.rec_cls == v.cls
