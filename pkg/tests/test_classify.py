import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from freeword.classify import (
    CLASSES,
    ClassVerdict,
    DivergenceClass,
    Refinement,
    apply_refinement,
    classify_empirical,
    classify_fixed_point,
    classify_structural,
    divergence,
    parse_record,
    recurrence_check,
    special_case_rules,
)
from freeword.complexity import window_sweep
from freeword.graphs import GrowthType, GraphSelfMap, power_map, rose_map
from freeword.words import GroupEndo

from conftest import corpus

STRUCTURAL = [
    ("omega.fga", "a", "Linear", "Linear"),
    ("alpha_rank4.fga", "a", "Linear", "Linear"),
    ("alpha_rank4.fga", "c", "Linear", "Linear"),
    ("alpha11.fga", "a", "NLogLogN", "NLogLogN"),
    ("alpha21.fga", "a", "NLogN", "NLogN"),
    ("alpha0.gmap", "e", "Quadratic", None),
    ("alpha0.fga", "c", "Bounded", "Bounded"),
    ("tribonacci_inv3.fga", "A", "Linear", "Linear"),
    ("rcdif.fga", "c", "Quadratic", "Linear"),
]


def as_map(src):
    return src if isinstance(src, GraphSelfMap) else rose_map(src)


@pytest.mark.parametrize("name,seed,cls,rec", STRUCTURAL)
def test_structural_examples(name, seed, cls, rec):
    v = classify_structural(corpus(name), seed)
    assert v.cls == cls and v.route == "Structural"
    if rec is not None:
        assert v.rec_cls == rec


def test_alpha2_is_bounded_or_quadratic():
    assert classify_structural(corpus("alpha2.fga"), "c").cls in {"Bounded", "Quadratic"}


def test_alpha0_witness_is_exceptional():
    v = classify_structural(corpus("alpha0.gmap"), "e")
    assert any(w.startswith("exceptional:") for w in v.witnesses)


def test_rcdif_witness_is_linear_edge():
    v = classify_structural(corpus("rcdif.fga"), "c")
    assert "linear:b" in v.witnesses


@pytest.mark.parametrize("name,seed,cls,rec", STRUCTURAL)
def test_invariant_under_squaring(name, seed, cls, rec):
    f = as_map(corpus(name))
    assert classify_structural(power_map(f, 2), seed).cls == classify_structural(f, seed).cls


def test_divergence_kinds():
    a = GrowthType(0, 2.0)
    b = GrowthType(1, 2.0)
    c = GrowthType(0, 3.0)
    assert divergence([a, a]).kind == "NonDivergent"
    assert divergence([a, b]).kind == "PolynomialDivergence"
    assert divergence([a, c]).kind == "ExponentialDivergence"
    assert divergence([GrowthType(0, 1.0)]) is None


def test_divergence_to_class():
    assert DivergenceClass("NonDivergent").complexity == "Linear"
    assert DivergenceClass("PolynomialDivergence").complexity == "NLogLogN"
    assert DivergenceClass("ExponentialDivergence").complexity == "NLogN"


# window counts over the witnessing growth types reproduce the structural class
PHI_CLASS = {"1": "Linear", "loglog": "NLogLogN", "log": "NLogN"}


@pytest.mark.parametrize("name,seed", [("omega.fga", "a"), ("alpha11.fga", "a"), ("alpha21.fga", "a")])
def test_window_class_matches_divergence(name, seed):
    v = classify_structural(corpus(name), seed)
    lo, hi = v.divergence.witness[0], v.divergence.witness[-1]
    # a shared extra factor p leaves the window class unchanged and keeps d >= 1
    params = (1, lo.d + 1, lo.lam, 1, hi.d + 1, hi.lam)
    rows, _, _ = window_sweep(params, [10**k for k in range(3, 9)])
    assert {PHI_CLASS[r.phi_class] for r in rows} == {v.cls}


# ---------------------------------------------------------------- special cases

def test_single_eg_forces_linear():
    ref = special_case_rules(corpus("omega.fga"))
    assert ref.forced == "Linear" and "Quadratic" in ref.excluded


def test_polynomially_growing_allows_bounded_or_quadratic():
    assert special_case_rules(corpus("alpha2.fga")).allowed == {"Bounded", "Quadratic"}


def test_asserted_fully_irreducible():
    assert special_case_rules(corpus("tribonacci_inv3.fga")).forced == "Linear"


def test_contradiction_routes_to_conflict():
    v = ClassVerdict("NLogN", "Structural")
    out = apply_refinement(v, Refinement(forced="Linear", reasons=["fully-irreducible"]))
    assert out.route == "Conflict" and "contradicts" in out.notes[0]


def test_assertion_overrides_structure():
    phi = corpus("alpha11.fga")
    asserted = GroupEndo(phi.alphabet, phi.images, phi.inverse_images, phi.name, frozenset({"fully-irreducible"}))
    assert classify_structural(asserted, "a").route == "Conflict"


def test_refinement_admits():
    ref = Refinement(excluded=frozenset({"Quadratic"}), allowed=frozenset({"Bounded", "Quadratic"}))
    assert ref.admits("Bounded") and not ref.admits("Quadratic") and not ref.admits("Linear")


# ---------------------------------------------------------------- empirical

def samples(fn, lo=100, hi=2000):
    ns = np.arange(lo, hi + 1)
    return ns, np.array([fn(n) for n in ns])


@pytest.mark.parametrize("cls,fn", [
    ("Bounded", lambda n: 7),
    ("Linear", lambda n: 3 * n + 5),
    ("NLogN", lambda n: int(2 * n * math.log(n))),
    ("Quadratic", lambda n: n * n // 3 + n),
])
def test_empirical_synthetic(cls, fn):
    ns, ps = samples(fn)
    assert classify_empirical(ns=ns, ps=ps).cls == cls


def test_empirical_too_few_samples():
    v = classify_empirical(ns=np.arange(1, 15), ps=np.arange(2, 16))
    assert v.cls == "Unknown" and v.unknown


@given(st.integers(1, 50), st.integers(0, 100))
def test_empirical_linear_family(a, b):
    ns, ps = samples(lambda n: a * n + b)
    assert classify_empirical(ns=ns, ps=ps).cls == "Linear"


def test_empirical_residuals_cover_all_classes():
    ns, ps = samples(lambda n: n + 1)
    assert set(classify_empirical(ns=ns, ps=ps).residuals) == set(CLASSES)


# ---------------------------------------------------------------- fixed points

def test_fixed_point_omega():
    v = classify_fixed_point(corpus("omega.fga"), "a", budget=10**5, n_max=2000)
    assert (v.cls, v.route, v.empirical) == ("Linear", "Both-agree", "Linear")


def test_fixed_point_periodic():
    v = classify_fixed_point(corpus("alpha0.fga"), "c", budget=10**5)
    assert v.cls == "Bounded" and v.route == "Both-agree"
    assert any("rational" in n for n in v.notes)


def test_fixed_point_non_automorphism_is_noted():
    v = classify_fixed_point(corpus("alpha11.fga"), "a", budget=10**5)
    assert any("not verified as an automorphism" in n for n in v.notes)


def test_fixed_point_word_seed_is_empirical_only():
    v = classify_fixed_point(corpus("omega.fga"), "a b", budget=10**5)
    assert v.route == "Empirical" and v.structural is None


# ---------------------------------------------------------------- records

def test_record_round_trip():
    v = classify_structural(corpus("alpha11.fga"), "a")
    fields = parse_record(v.record())
    assert fields["class"] == "NLogLogN" and fields["route"] == "Structural"
    assert fields["divergence"].startswith("PolynomialDivergence")
    assert fields["p_rec"] == "NLogLogN"


def test_record_is_one_line():
    v = classify_fixed_point(corpus("omega.fga"), "a", budget=10**5)
    assert "\n" not in v.record()


def test_recurrence_check():
    assert recurrence_check(ClassVerdict("Linear", "Structural", rec_cls="Linear"))
    assert not recurrence_check(ClassVerdict("NLogN", "Structural", rec_cls="Linear"))
    assert recurrence_check(ClassVerdict("Quadratic", "Structural", rec_cls="Linear"))
