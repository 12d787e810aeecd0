import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from freeword.limits import (
    PrefixStream,
    RationalityVerdict,
    StabilizationError,
    as_stream,
    limit_prefix,
    rationality_check,
    read_symbols,
    transport,
    write_symbols,
)
from freeword.words import Alphabet, GroupEndo, apply_array, identity, inverse, reduce_codes

from conftest import corpus

CONVERGING = [("omega.fga", "a"), ("alpha_rank4.fga", "a"), ("alpha_rank4.fga", "c"), ("alpha11.fga", "a"),
              ("alpha21.fga", "a"), ("alpha0.fga", "e"), ("alpha0.gmap", "e"), ("alpha0.fga", "c"),
              ("tribonacci_inv3.fga", "A"), ("rcdif.fga", "c"), ("alpha2.fga", "c"), ("tribonacci.fga", "a"),
              ("fibonacci.fga", "a"), ("lamiex1.fga", "a"), ("theta.gmap", "a")]


def test_omega_prefix():
    assert str(limit_prefix(corpus("omega.fga"), 10, "a")) == "a b b a b b a b a b"


@pytest.mark.parametrize("name", ["alpha0.fga", "alpha0.gmap"])
def test_alpha0_prefix(name):
    assert str(limit_prefix(corpus(name), 14, "e")) == "e c D f c b a B A D f e c D"


def test_tribonacci_inverse_cube_prefix():
    assert str(limit_prefix(corpus("tribonacci_inv3.fga"), 16, "A")) == "A b A b C b A b A b C b C C b C"


def test_rcdif_prefix():
    assert str(limit_prefix(corpus("rcdif.fga"), 7, "c")) == "c b b a b a a"


def test_identity_does_not_stabilize():
    with pytest.raises(StabilizationError, match="no stabilization"):
        limit_prefix(corpus("identity.fga"), 10, "a")


def test_nested_mode_detection():
    assert as_stream(corpus("omega.fga"), "a").mode == "nested"
    # the tail of lamiex1 cancels against the seed at later junctions
    assert as_stream(corpus("lamiex1.fga"), "a").mode == "general"


def test_general_mode_agrees_with_iterates():
    phi = corpus("lamiex1.fga")
    p = limit_prefix(phi, 2000, "a").to_array()
    w = np.array([0], dtype=np.int32)
    for _ in range(12):
        w = apply_array(phi, w)
    assert np.array_equal(w[:2000], p)


def test_symbol_cap():
    with pytest.raises(StabilizationError):
        PrefixStream.from_endo(corpus("omega.fga"), "a", symbol_cap=1000).prefix(10_000)


@pytest.mark.parametrize("name,seed", CONVERGING)
def test_monotone_certification(name, seed):
    s = as_stream(corpus(name), seed)
    short = s.prefix(500)
    assert np.array_equal(s.prefix(5000)[:500], short)


@pytest.mark.parametrize("name,seed", CONVERGING)
def test_fixed_point_property(name, seed):
    src = corpus(name)
    s = as_stream(src, seed)
    p = s.prefix(3000)
    img = apply_array(s.endo, p)
    assert np.array_equal(img[:2000], p[:2000])


def test_ray_iterates_are_nested(theta):
    s = PrefixStream.from_ray(theta, "a")
    assert s.mode == "nested"
    prev = s.prefix(100)
    for n in (1000, 10_000):
        cur = s.prefix(n)
        assert np.array_equal(cur[: len(prev)], prev)
        prev = cur


# ---------------------------------------------------------------- rationality

def test_periodic_word():
    ab = Alphabet(("a", "b"))
    assert rationality_check(ab.parse("a b a b a b a b")) == RationalityVerdict("PeriodicCandidate", 2, 0)


def test_y_is_periodic():
    y = limit_prefix(corpus("alpha0.fga"), 60, "c")
    v = rationality_check(y)
    assert v.status == "PeriodicCandidate" and v.period == 4 and v.preperiod <= 1


def test_omega_aperiodic():
    assert rationality_check(limit_prefix(corpus("omega.fga"), 1000, "a")).status == "AperiodicSoFar"


def test_rationality_needs_four_symbols():
    with pytest.raises(ValueError):
        rationality_check([0, 2, 0])


@given(st.lists(st.integers(0, 3), min_size=1, max_size=4), st.lists(st.integers(0, 3), max_size=6),
       st.integers(8, 20))
def test_periodic_shape_found(cycle, pre, reps):
    seq = pre + cycle * reps
    v = rationality_check(seq)
    assert v.status == "PeriodicCandidate"
    p, k = v.period, v.preperiod
    # the reported shape really describes the sequence
    assert all(seq[i] == seq[i + p] for i in range(k, len(seq) - p))
    assert p <= len(cycle)


# ---------------------------------------------------------------- transport

def test_transport_identity(omega):
    s = as_stream(omega, "a")
    t = transport(identity(omega.alphabet), s)
    assert np.array_equal(t.prefix(5000), s.prefix(5000))


def test_transport_fixed_word(omega):
    s = as_stream(omega, "a")
    assert np.array_equal(transport(omega, s).prefix(5000), s.prefix(5000))


def test_transport_conjugation(omega):
    ab = omega.alphabet
    conj = GroupEndo.from_strings(ab, ["a a A", "a b A"], ["A a a", "A b a"])
    s = as_stream(omega, "a")
    t = transport(conj, s)
    expected = reduce_codes([0] + s.prefix(20_000).tolist())
    assert t.prefix(10_000).tolist() == list(expected[:10_000])


def test_transport_round_trip(omega):
    s = as_stream(omega, "a")
    there = transport(inverse(omega), s)
    back = transport(omega, there)
    assert np.array_equal(back.prefix(5000), s.prefix(5000))


def test_transport_margin_doubling():
    phi = corpus("alpha0.fga")
    s = as_stream(phi, "e")
    t = transport(inverse(phi), s, margin=1)
    out = t.prefix(2000)
    assert t.events and t.margin > 1
    assert np.array_equal(out, transport(inverse(phi), as_stream(phi, "e")).prefix(2000))


def test_transport_requires_automorphism():
    with pytest.raises(ValueError):
        transport(corpus("alpha11.fga"), as_stream(corpus("alpha11.fga"), "a"))


# ---------------------------------------------------------------- symbol files

def test_symbol_file_round_trip(tmp_path, omega):
    codes = as_stream(omega, "a").prefix(1000)
    path = tmp_path / "x.txt"
    write_symbols(path, omega.alphabet, codes)
    alphabet, back = read_symbols(path, omega.alphabet)
    assert np.array_equal(back, codes)
    assert path.read_text().startswith("a b b a b b a b a b")


def test_streams_are_labelled_attracting_like(omega):
    assert as_stream(omega, "a").label == "attracting-like"
