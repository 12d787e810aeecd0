import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import freeword.graphs as G
from freeword.limits import PrefixStream
from freeword.words import GroupEndo, reduce_codes

from conftest import corpus, rose

GOLDEN_SQ = (3 + math.sqrt(5)) / 2  # Perron value of [[1,1],[1,2]]
ROSES = ["omega.fga", "alpha0.fga", "alpha1.fga", "alpha2.fga", "alpha11.fga", "alpha21.fga",
         "alpha_rank4.fga", "rcdif.fga", "tribonacci.fga", "tribonacci_inv3.fga", "fibonacci.fga",
         "lamiex1.fga", "identity.fga"]


def names(f, edges):
    return [f.alphabet.generators[e] for e in edges]


def all_maps():
    return [rose(n) for n in ROSES] + [corpus("alpha0.gmap"), corpus("theta.gmap")]


# ---------------------------------------------------------------- tighten

def test_tighten_commutator():
    f = rose("alpha1.fga")
    assert str(G.tighten(f, f.graph.path("a b A B"))) == "a b A B"


def test_tighten_trivial_path():
    f = rose("omega.fga")
    assert len(G.tighten(f, f.graph.path(()))) == 0


def test_tighten_alpha2_twice():
    f = rose("alpha2.fga")
    p = f.graph.path("b C")
    assert str(G.tighten(f, G.tighten(f, p))) == "b A A C"


@given(st.lists(st.integers(0, 7), max_size=30), st.lists(st.integers(0, 7), max_size=30))
def test_tighten_is_multiplicative_on_roses(u, v):
    f = rose("alpha0.fga")
    u, v = reduce_codes(u), reduce_codes(v)
    whole = G.tighten_codes(f, reduce_codes(u + v))
    assert whole == reduce_codes(G.tighten_codes(f, u) + G.tighten_codes(f, v))


def random_path(graph, rng, n):
    """Random reduced edge path in a graph, by a non-backtracking walk."""
    out = []
    v = 0
    for _ in range(n):
        choices = [c for c in range(2 * graph.n_edges) if graph.o(c) == v and (not out or c != out[-1] ^ 1)]
        c = int(rng.choice(choices))
        out.append(c)
        v = graph.t(c)
    return tuple(out)


def test_tighten_is_multiplicative_on_theta(theta):
    rng = np.random.default_rng(3)
    for _ in range(50):
        p = random_path(theta.graph, rng, 12)
        k = int(rng.integers(0, 13))
        left, right = p[:k], p[k:]
        assert G.tighten_codes(theta, p) == reduce_codes(G.tighten_codes(theta, left) +
                                                          G.tighten_codes(theta, right))


# ---------------------------------------------------------------- strata

def test_strata_alpha0():
    f = rose("alpha0.fga")
    got = [(s.kind, names(f, s.edges)) for s in G.compute_strata(f)]
    assert got == [("EG", ["a", "b"]), ("NEG-linear", ["c"]), ("NEG-linear", ["d"]), ("EG", ["e", "f"])]


def test_strata_identity():
    f = rose("identity.fga")
    assert {s.kind for s in G.compute_strata(f)} == {"NEG-fixed"}


def test_strata_alpha11_ordering():
    f = rose("alpha11.fga")
    got = [(s.kind, names(f, s.edges)) for s in G.compute_strata(f)]
    assert got == [("EG", ["c", "d"]), ("EG", ["a", "b"])]


def test_trivial_image_rejected():
    with pytest.raises((G.InvalidMapError, ValueError)):
        G.parse_gmap("vertex v\nedge a v v\nedge b v v\nmap a -> a\nmap b ->\n")


@pytest.mark.parametrize("f", all_maps(), ids=lambda f: f.name)
def test_filtration_sound(f):
    strata = G.compute_strata(f)
    level = {e: i for i, s in enumerate(strata) for e in s.edges}
    for e in range(f.graph.n_edges):
        assert all(level[c >> 1] <= level[e] for c in f.edge_images[e])


@pytest.mark.parametrize("f", all_maps(), ids=lambda f: f.name)
def test_eg_edges_cross_their_stratum_twice(f):
    fk, _ = G.normalize_power(f)
    for s in G.compute_strata(fk):
        if s.kind != "EG":
            continue
        for e in s.edges:
            assert sum((c >> 1) in s.edges for c in fk.edge_images[e]) >= 2


# ---------------------------------------------------------------- growth

def test_growth_rcdif_c():
    g = G.growth_type(rose("rcdif.fga"), "c")
    assert (g.d, g.lam) == (2, 1.0)


def test_growth_omega_a():
    g = G.growth_type(rose("omega.fga"), "a")
    assert g.d == 0 and abs(g.lam - GOLDEN_SQ) < 1e-6


def test_growth_alpha11_a():
    g = G.growth_type(rose("alpha11.fga"), "a")
    assert g.d == 1 and abs(g.lam - GOLDEN_SQ) < 1e-6


def test_growth_non_growing_path():
    g = G.growth_type(rose("alpha1.fga"), "a b A B")
    assert not g.growing


def test_perron_value():
    assert abs(G.perron_value(np.array([[1, 1], [1, 2]])) - GOLDEN_SQ) < 1e-9


# ---------------------------------------------------------------- Nielsen, linear, exceptional

def test_nielsen_commutator():
    f = rose("alpha1.fga")
    assert G.detect_nielsen(f, f.alphabet.parse("a b A B")).kind == "nielsen"


def test_nielsen_growing():
    assert G.detect_nielsen(rose("omega.fga"), (0,)).kind == "growing"


def test_nielsen_pre_nielsen():
    # b -> a, and a is fixed: b reaches a Nielsen path after one step
    f = G.rose_map(GroupEndo.from_strings(["a", "b"], ["a", "a"]))
    status = G.detect_nielsen(f, f.alphabet.parse("b"))
    assert (status.kind, status.steps) == ("pre-nielsen", 1)


def test_fixed_edge_is_not_an_inp():
    f = rose("identity.fga")
    assert G.edge_kind(f, 0) == "NEG-fixed"
    assert G.recognize(f, (0,)).kind == "edge"


def test_exceptional_alpha0():
    f = rose("alpha0.fga")
    fams = G.detect_exceptional(f)
    assert len(fams) == 1
    fam = fams[0]
    assert (names(f, [fam.e >> 1, fam.e2 >> 1]), f.alphabet.format(fam.u), fam.d, fam.d2) == \
        (["c", "d"], "a b A B", 1, 2)


def test_exceptional_none_for_omega():
    assert G.detect_exceptional(rose("omega.fga")) == []


def test_exceptional_alpha2():
    f = rose("alpha2.fga")
    fam = G.detect_exceptional(f)[0]
    assert (names(f, [fam.e >> 1, fam.e2 >> 1]), f.alphabet.format(fam.u), fam.d, fam.d2) == \
        (["b", "c"], "a", 1, 2)


# ---------------------------------------------------------------- collapse

def test_collapse_theta_path(theta):
    g2, proj = G.collapse_edge(theta.graph, "c", theta.graph.path("a C b A"))
    assert g2.format(proj) == "a b A"
    assert g2.betti == theta.graph.betti


def test_collapse_path_without_edge(theta):
    g2, proj = G.collapse_edge(theta.graph, "c", theta.graph.path("a B"))
    assert g2.format(proj) == "a B"


def test_collapse_loop_rejected():
    f = rose("omega.fga")
    with pytest.raises(G.InvalidMapError):
        G.collapse_edge(f.graph, "a")


def brute_collapse(x, e, n_max):
    """Lift spans and fiber sizes by enumerating every factor."""
    def proj(w):
        return tuple(c for c in w if c >> 1 != e >> 1)
    N = len(x)
    span, fiber = [0], [0]
    for n in range(1, n_max + 1):
        fibers = {}
        best = 0
        for L in range(1, 2 * n + 2):
            for i in range(N - L + 1):
                g = x[i: i + L]
                u = proj(g)
                if len(u) == n:
                    fibers.setdefault(u, set()).add(g)
                    if g[0] >> 1 != e >> 1 and g[-1] >> 1 != e >> 1:
                        best = max(best, L)
        span.append(best)
        fiber.append(max(len(s) for s in fibers.values()))
    return span, fiber


def test_collapse_stats_match_enumeration(theta):
    x = PrefixStream.from_ray(theta, "a").prefix(400)
    e = theta.alphabet.code("c")
    span, fiber = G.collapse_lift_stats(x, e, 8)
    bs, bf = brute_collapse(tuple(int(c) for c in x), e, 8)
    assert span.tolist() == bs and fiber.tolist() == bf


def test_theta_collapse_projects_to_omega(theta, omega):
    x = PrefixStream.from_ray(theta, "a").prefix(3000)
    proj, _ = G.project_array(x, theta.alphabet.code("c"))
    y = PrefixStream.from_endo(omega, "a").prefix(len(proj))
    assert np.array_equal(proj, y)


# ---------------------------------------------------------------- substitutions

def test_substitution_omega():
    f = rose("omega.fga")
    tau = G.extract_substitution(f, "a")
    assert tau.symbols() == ["a", "b"]
    assert str(tau) == "a -> a b; b -> b a b"


def test_substitution_tribonacci():
    tau = G.extract_substitution(rose("tribonacci.fga"), "a")
    assert str(tau) == "a -> a b; b -> a c; c -> a"


def test_substitution_refuses_exceptional():
    with pytest.raises(G.InfiniteAlphabetError):
        G.extract_substitution(rose("alpha0.fga"), "e")


@pytest.mark.parametrize("name,seed", [("omega.fga", "a"), ("tribonacci.fga", "a"), ("alpha11.fga", "a"),
                                       ("alpha21.fga", "a"), ("theta.gmap", "a")])
def test_substitution_round_trip(name, seed):
    f = corpus(name)
    f = f if isinstance(f, G.GraphSelfMap) else G.rose_map(f)
    tau = G.extract_substitution(f, seed)
    spelled = tau.expand(tau.fixed_word(2000))
    ray = PrefixStream.from_ray(f, seed).prefix(len(spelled))
    assert spelled == ray.tolist()


# ---------------------------------------------------------------- .gmap

def test_gmap_round_trip(alpha0_map):
    again = G.parse_gmap(G.format_gmap(alpha0_map))
    assert again.edge_images == alpha0_map.edge_images and again.splits == alpha0_map.splits


@pytest.mark.parametrize("text", [
    "vertex v\nedge a v w\nmap a -> a\n",
    "vertex v0 v1\nedge a v0 v1\nedge b v0 v1\nmap a -> a a\nmap b -> b\n",
    "vertex v\nedge a v v\nedge b v v\nmap a -> a b\nmap b -> b\nsplit a -> [a]\n",
])
def test_gmap_errors(text):
    with pytest.raises(ValueError):
        G.parse_gmap(text)


def test_bad_split_rejected():
    text = ("vertex v\nedge a v v\nedge b v v\nmap a -> a b\nmap b -> b a b\n"
            "split a -> [a b]\n")
    f = G.parse_gmap(text)
    with pytest.raises(G.SplittingError):
        G.edge_splitting(f, 0)


# ---------------------------------------------------------------- diagnostics

def test_long_nongrowing_runs_are_reported():
    f = rose("rcdif.fga")
    path = f.alphabet.parse("b " + "a " * 20 + "c " + "a " * 5)
    assert G.long_nongrowing_subpaths(f, path, threshold=10) == [(1, 20)]
    assert G.long_nongrowing_subpaths(f, path, threshold=20) == []
