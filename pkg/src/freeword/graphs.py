"""Graphs with an edge involution, self-maps, strata and growth.

Oriented edges use the same integer encoding as letters: positive edge
``i`` is ``2 * i`` and its reverse is ``2 * i + 1``.  A rose (one vertex)
map is literally a free group endomorphism, so paths are stored as letter
tuples and tightening is free reduction.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

import networkx as nx
import numpy as np

from . import compressed as cw
from .words import (
    Alphabet,
    AlphabetError,
    FormatError,
    GroupEndo,
    ReducedWord,
    apply_array,
    parse_fga,
)

LAMBDA_TOL = 1e-9


class InvalidMapError(ValueError):
    pass


class SplittingError(ValueError):
    """A splitting could not be verified or a term was not recognized."""


class InfiniteAlphabetError(ValueError):
    """The term alphabet does not close up (exceptional paths or cap reached)."""


# ---------------------------------------------------------------- graphs

@dataclass(frozen=True, eq=False)
class Graph:
    vertices: tuple[str, ...]
    edge_names: Alphabet
    origin: tuple[int, ...]
    terminus: tuple[int, ...]

    def __post_init__(self):
        n = self.edge_names.rank
        if len(self.origin) != n or len(self.terminus) != n:
            raise InvalidMapError("every edge needs an origin and a terminus")
        for v in self.origin + self.terminus:
            if not 0 <= v < len(self.vertices):
                raise InvalidMapError(f"vertex index {v} out of range")
        if not self.is_connected():
            raise InvalidMapError("graph is not connected")

    @property
    def n_edges(self) -> int:
        return self.edge_names.rank

    @property
    def betti(self) -> int:
        return self.n_edges - len(self.vertices) + 1

    def o(self, code: int) -> int:
        return self.terminus[code >> 1] if code & 1 else self.origin[code >> 1]

    def t(self, code: int) -> int:
        return self.origin[code >> 1] if code & 1 else self.terminus[code >> 1]

    def is_connected(self) -> bool:
        g = nx.Graph()
        g.add_nodes_from(range(len(self.vertices)))
        g.add_edges_from(zip(self.origin, self.terminus))
        return nx.is_connected(g)

    def path(self, text: str | tuple[int, ...], start: int | None = None) -> "EdgePath":
        codes = tuple(self.edge_names.parse(text)) if isinstance(text, str) else tuple(text)
        return EdgePath(self, codes, start)

    def format(self, codes) -> str:
        return self.edge_names.format(codes)


def rose(alphabet: Alphabet) -> Graph:
    n = alphabet.rank
    return Graph(("v",), alphabet, (0,) * n, (0,) * n)


@dataclass(frozen=True, eq=False)
class EdgePath:
    graph: Graph
    edges: tuple[int, ...]
    start: int | None = None

    def __post_init__(self):
        g = self.graph
        edges = tuple(int(c) for c in self.edges)
        object.__setattr__(self, "edges", edges)
        if not edges:
            if self.start is None:
                object.__setattr__(self, "start", 0)
            return
        for c in edges:
            if not 0 <= c < 2 * g.n_edges:
                raise AlphabetError(f"edge code {c} outside graph")
        for x, y in zip(edges, edges[1:]):
            if y == x ^ 1:
                raise ValueError("edge path is not reduced")
            if g.t(x) != g.o(y):
                raise ValueError(f"edges {g.format([x])} and {g.format([y])} are not concatenable")
        if self.start is not None and self.start != g.o(edges[0]):
            raise ValueError("start vertex does not match the first edge")
        object.__setattr__(self, "start", g.o(edges[0]))

    @property
    def end(self) -> int:
        return self.graph.t(self.edges[-1]) if self.edges else self.start

    def __len__(self) -> int:
        return len(self.edges)

    def __eq__(self, other):
        return (isinstance(other, EdgePath) and self.graph is other.graph
                and self.edges == other.edges and self.start == other.start)

    def __hash__(self):
        return hash((self.edges, self.start))

    def inverse(self) -> "EdgePath":
        return EdgePath(self.graph, tuple(c ^ 1 for c in reversed(self.edges)), self.end)

    def __str__(self) -> str:
        return self.graph.format(self.edges) if self.edges else f"<{self.graph.vertices[self.start]}>"

    def __repr__(self) -> str:
        return f"EdgePath({str(self)!r})"


# ---------------------------------------------------------------- self-maps

@dataclass(eq=False)
class GraphSelfMap:
    graph: Graph
    vertex_image: tuple[int, ...]
    edge_images: tuple[tuple[int, ...], ...]
    splits: tuple[tuple[int, ...] | None, ...] | None = None
    name: str = ""
    assertions: frozenset[str] = frozenset()
    power: int = 1
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        g = self.graph
        if len(self.edge_images) != g.n_edges:
            raise InvalidMapError("one image per edge is required")
        if len(self.vertex_image) != len(g.vertices):
            raise InvalidMapError("one image per vertex is required")
        for i, img in enumerate(self.edge_images):
            name = g.edge_names.generators[i]
            if not img:
                raise InvalidMapError(f"edge {name} has a trivial image")
            try:
                EdgePath(g, img)
            except ValueError as exc:
                raise InvalidMapError(f"image of {name}: {exc}") from None
            if g.o(img[0]) != self.vertex_image[g.origin[i]] or g.t(img[-1]) != self.vertex_image[g.terminus[i]]:
                raise InvalidMapError(f"image of {name} does not match the vertex map")
        if self.splits is not None:
            if len(self.splits) != g.n_edges:
                raise InvalidMapError("splits must list every edge (None for automatic)")
            for i, s in enumerate(self.splits):
                if s is not None and (sum(s) != len(self.edge_images[i]) or min(s) < 1):
                    raise InvalidMapError(f"split of {g.edge_names.generators[i]} does not cover its image")

    @property
    def alphabet(self) -> Alphabet:
        return self.graph.edge_names

    @property
    def is_rose(self) -> bool:
        return len(self.graph.vertices) == 1

    def image(self, code: int) -> tuple[int, ...]:
        img = self.edge_images[code >> 1]
        if code & 1:
            return tuple(c ^ 1 for c in reversed(img))
        return img

    def image_codes(self) -> list[tuple[int, ...]]:
        return [self.image(c) for c in range(2 * self.graph.n_edges)]

    @property
    def endo(self) -> GroupEndo:
        """The map on edge words, viewed as a substitution with reduction."""
        if "endo" not in self._cache:
            a = self.alphabet
            self._cache["endo"] = GroupEndo(a, tuple(ReducedWord(a, img) for img in self.edge_images))
        return self._cache["endo"]

    def iterated(self) -> cw.IteratedImages:
        """Shared compressed images f^k(x), extended on demand."""
        if "iter" not in self._cache:
            self._cache["iter"] = [cw.IteratedImages(self.image_codes())]
        return self._cache["iter"][0]

    def compressed_image(self, codes, k: int) -> cw.Node | None:
        levels = self._cache.setdefault("levels", {})
        it = self.iterated()
        if 0 not in levels:
            levels[0] = list(it.images)
        while it.level < k:
            it.step()
            levels[it.level] = list(it.images)
        imgs = levels[k]
        return cw.reduced_product(imgs[int(c)] for c in codes)

    def split_lengths(self, code: int) -> tuple[int, ...] | None:
        if self.splits is None or self.splits[code >> 1] is None:
            return None
        s = self.splits[code >> 1]
        return tuple(reversed(s)) if code & 1 else s

    def __str__(self) -> str:
        g = self.graph
        return "; ".join(f"{n} -> {g.format(img)}" for n, img in zip(g.edge_names.generators, self.edge_images))


def rose_map(phi: GroupEndo) -> GraphSelfMap:
    """The one-vertex realization of a free group endomorphism."""
    g = rose(phi.alphabet)
    return GraphSelfMap(g, (0,), tuple(w.letters for w in phi.images), None, phi.name, phi.assertions)


def tighten(f: GraphSelfMap, path: EdgePath | tuple[int, ...]) -> EdgePath:
    """f#(path): edgewise image, then free reduction."""
    if isinstance(path, EdgePath):
        if path.graph is not f.graph:
            raise AlphabetError("path belongs to another graph")
        codes, start = path.edges, path.start
    else:
        codes, start = tuple(path), None
    out: list[int] = []
    for c in codes:
        for x in f.image(c):
            if out and out[-1] == x ^ 1:
                out.pop()
            else:
                out.append(x)
    if start is None:
        start = f.graph.o(codes[0]) if codes else 0
    return EdgePath(f.graph, tuple(out), f.vertex_image[start])


def tighten_codes(f: GraphSelfMap, codes) -> tuple[int, ...]:
    return tighten(f, tuple(codes)).edges


def compose_maps(f: GraphSelfMap, g: GraphSelfMap) -> GraphSelfMap:
    """The map x -> f#(g(x))."""
    if f.graph is not g.graph:
        raise AlphabetError("maps live on different graphs")
    images = tuple(tighten_codes(f, img) for img in g.edge_images)
    vimg = tuple(f.vertex_image[v] for v in g.vertex_image)
    return GraphSelfMap(f.graph, vimg, images, None, f.name, f.assertions)


def power_map(f: GraphSelfMap, k: int) -> GraphSelfMap:
    """f^k with splittings composed when f carries annotations."""
    if k < 1:
        raise ValueError("power must be positive")
    if k == 1:
        return f
    if k in f._cache.setdefault("powers", {}):
        return f._cache["powers"][k]
    images = []
    g = f.graph
    for i in range(g.n_edges):
        images.append(f.compressed_image((2 * i,), k))
    images = tuple(tuple(cw.to_letters(n)) for n in images)
    vimg = list(range(len(g.vertices)))
    for _ in range(k):
        vimg = [f.vertex_image[v] for v in vimg]
    splits = None
    if f.splits is not None and all(s is not None for s in f.splits):
        splits = []
        for i in range(g.n_edges):
            terms = [Term("edge", (2 * i,))]
            for _ in range(k):
                terms = [t2 for t in terms for t2 in term_image(f, t)]
            splits.append(tuple(len(t.path) for t in terms))
        splits = tuple(splits)
    name = f"{f.name}^{k}" if f.name else ""
    pk = GraphSelfMap(g, tuple(vimg), images, splits, name, f.assertions, f.power * k)
    f._cache["powers"][k] = pk
    return pk


# ---------------------------------------------------------------- Nielsen paths

@dataclass(frozen=True)
class NielsenStatus:
    kind: str  # "nielsen" | "pre-nielsen" | "growing" | "unknown"
    steps: int = 0

    @property
    def non_growing(self) -> bool:
        return self.kind in ("nielsen", "pre-nielsen")

    def __str__(self) -> str:
        return f"{self.kind}({self.steps})" if self.kind == "pre-nielsen" else self.kind


def detect_nielsen(f: GraphSelfMap, path, cap: int = 64, length_factor: float = 1e4,
                   rising: int = 16) -> NielsenStatus:
    """Classify the f#-orbit of a path.

    Nielsen if fixed, PreNielsen(k) if the k-th iterate is fixed, Growing if
    the length passes ``length_factor`` times the original length or rises
    strictly over the last ``rising`` iterates without repeating, otherwise
    Unknown.
    """
    codes = tuple(path.edges) if isinstance(path, EdgePath) else tuple(path)
    base = max(len(codes), 1)
    seen = {codes}
    lengths = [len(codes)]
    cur = codes
    for k in range(cap + 1):
        nxt = tighten_codes(f, cur)
        if nxt == cur:
            return NielsenStatus("nielsen" if k == 0 else "pre-nielsen", k)
        if len(nxt) > length_factor * base:
            return NielsenStatus("growing", k + 1)
        if nxt in seen:
            return NielsenStatus("unknown", k + 1)  # periodic, not fixed
        seen.add(nxt)
        lengths.append(len(nxt))
        cur = nxt
    tail = lengths[-rising - 1:]
    if len(tail) == rising + 1 and all(x < y for x, y in zip(tail, tail[1:])):
        return NielsenStatus("growing", cap)
    return NielsenStatus("unknown", cap)


# ---------------------------------------------------------------- strata

@dataclass
class Stratum:
    index: int
    edges: tuple[int, ...]
    kind: str  # "zero" | "EG" | "NEG-fixed" | "NEG-linear" | "NEG-general"
    matrix: np.ndarray | None = None
    perron: float = 1.0
    prefix: tuple[int, ...] = ()   # f(e) = prefix . e . suffix for NEG edges
    suffix: tuple[int, ...] = ()
    nielsen: NielsenStatus | None = None
    unconfirmed: bool = False
    legal: bool = True

    @property
    def is_neg(self) -> bool:
        return self.kind.startswith("NEG")

    def __str__(self) -> str:
        extra = f", lambda={self.perron:.6f}" if self.kind == "EG" else ""
        return f"H{self.index}[{self.kind}{extra}]"


def perron_value(m, tol: float = 1e-10, cap: int = 10_000) -> float:
    """Spectral radius of a non-negative matrix by power iteration on M + I."""
    m = np.asarray(m, dtype=float)
    n = m.shape[0]
    if n == 0:
        return 0.0
    a = m + np.eye(n)
    x = np.ones(n) / n
    lam = 0.0
    for _ in range(cap):
        y = a @ x
        s = y.sum()
        new = s / x.sum()
        x = y / s
        if abs(new - lam) <= tol * max(new, 1.0):
            lam = new
            break
        lam = new
    return lam - 1.0


def dependency_graph(f: GraphSelfMap) -> nx.DiGraph:
    """Edge i -> edge j when j (either orientation) occurs in f(i)."""
    g = nx.DiGraph()
    g.add_nodes_from(range(f.graph.n_edges))
    for i, img in enumerate(f.edge_images):
        for c in img:
            g.add_edge(i, c >> 1)
    return g


def _occurrence_matrix(f: GraphSelfMap, edges) -> np.ndarray:
    pos = {e: k for k, e in enumerate(edges)}
    m = np.zeros((len(edges), len(edges)), dtype=np.int64)
    for e in edges:
        for c in f.edge_images[e]:
            if (c >> 1) in pos:
                m[pos[e], pos[c >> 1]] += 1
    return m


def _filtration(f: GraphSelfMap) -> list[tuple[int, ...]]:
    dg = dependency_graph(f)
    cond = nx.condensation(dg)
    members = {n: tuple(sorted(cond.nodes[n]["members"])) for n in cond.nodes}
    # bottom-up: a component comes after everything it depends on
    order = list(nx.lexicographical_topological_sort(cond.reverse(copy=True), key=lambda n: members[n][0]))
    return [members[n] for n in order]


def compute_strata(f: GraphSelfMap, nielsen_cap: int = 64) -> list[Stratum]:
    """Strata of the dependency filtration, ordered from the bottom up."""
    key = ("strata", nielsen_cap)
    if key in f._cache:
        return f._cache[key]
    out = []
    for idx, comp in enumerate(_filtration(f), 1):
        m = _occurrence_matrix(f, comp)
        if len(comp) == 1:
            e = comp[0]
            img = f.edge_images[e]
            hits = [k for k, c in enumerate(img) if (c >> 1) == e]
            if not hits:
                out.append(Stratum(idx, comp, "zero", m, 0.0))
            elif len(hits) > 1:
                out.append(Stratum(idx, comp, "EG", m, float(len(hits))))
            elif img[hits[0]] != 2 * e:
                out.append(Stratum(idx, comp, "NEG-general", m, 1.0, unconfirmed=True, legal=False))
            else:
                k = hits[0]
                pre, suf = img[:k], img[k + 1:]
                if not pre and not suf:
                    out.append(Stratum(idx, comp, "NEG-fixed", m, 1.0))
                    continue
                statuses = [detect_nielsen(f, p, nielsen_cap) for p in (pre, suf) if p]
                if all(s.non_growing for s in statuses):
                    kind, unconf = "NEG-linear", False
                elif any(s.kind == "growing" for s in statuses):
                    kind, unconf = "NEG-general", False
                else:
                    kind, unconf = "NEG-general", True
                st = next((s for s in statuses if s.kind != "nielsen"), statuses[0])
                out.append(Stratum(idx, comp, kind, m, 1.0, pre, suf, st, unconf))
        else:
            lam = perron_value(m)
            kind = "EG" if lam > 1 + 1e-9 else "NEG-general"
            out.append(Stratum(idx, comp, kind, m, lam, unconfirmed=kind != "EG", legal=kind == "EG"))
    for s in out:
        if s.kind == "EG":
            s.legal = _stratum_is_legal(f, s)
    f._cache[key] = out
    return out


def _stratum_is_legal(f: GraphSelfMap, s: Stratum, depth: int = 12, max_len: int = 2_000_000) -> bool:
    """No edge of the stratum is ever cancelled when iterating its edges."""
    mine = np.zeros(2 * f.graph.n_edges, dtype=bool)
    for e in s.edges:
        mine[2 * e] = mine[2 * e + 1] = True
    own_count = np.array([sum(1 for x in f.image(c) if mine[x]) for c in range(2 * f.graph.n_edges)])
    endo = f.endo
    for e in s.edges:
        w = np.array([2 * e], dtype=np.int32)
        for _ in range(depth):
            expected = int(own_count[w].sum())
            w = apply_array(endo, w)
            if int(mine[w].sum()) != expected:
                return False
            if len(w) > max_len:
                break
    return True


def is_well_formed(f: GraphSelfMap, strata: list[Stratum] | None = None) -> bool:
    """Strata have the standard shapes: NEG edges as e.u or u.e, EG edges with
    at least two edges of their own stratum in every image, no irreducible
    permutation blocks."""
    strata = strata if strata is not None else compute_strata(f)
    for s in strata:
        if s.kind == "EG":
            if (s.matrix.sum(axis=1) < 2).any():
                return False
        elif s.is_neg:
            if s.kind == "NEG-general" and s.unconfirmed and s.nielsen is None:
                return False
            if s.prefix and s.suffix:
                return False
    return True


def normalize_power(f: GraphSelfMap, cap: int = 6) -> tuple[GraphSelfMap, int]:
    """Smallest power f^k (k <= cap) with well-formed strata."""
    for k in range(1, cap + 1):
        fk = power_map(f, k)
        if is_well_formed(fk):
            return fk, k
    raise InvalidMapError(f"strata not well formed for any power up to {cap}")


def height(strata: list[Stratum]) -> dict[int, Stratum]:
    return {e: s for s in strata for e in s.edges}


# ---------------------------------------------------------------- growth

@dataclass(frozen=True)
class GrowthType:
    d: int
    lam: float
    unconfirmed: bool = False
    measured: bool = False

    @property
    def growing(self) -> bool:
        return not (self.d == 0 and self.lam <= 1 + LAMBDA_TOL)

    def key(self) -> tuple[float, int]:
        return (round(self.lam, 6), self.d)

    def __lt__(self, other):
        return self.key() < other.key()

    def same_rate(self, other) -> bool:
        return abs(self.lam - other.lam) <= 1e-6 * max(self.lam, 1.0)

    def __str__(self) -> str:
        return f"n^{self.d}*{self.lam:.6f}^n" + ("?" if self.unconfirmed else "")


NON_GROWING = GrowthType(0, 1.0)


def _max_growth(types) -> GrowthType:
    best = NON_GROWING
    unconf = False
    for t in types:
        unconf = unconf or t.unconfirmed
        if t.key() > best.key():
            best = t
    return GrowthType(best.d, best.lam, unconf or best.unconfirmed, best.measured)


def measured_rate(f: GraphSelfMap, code: int, n: int = 120, tol: float = 1e-12) -> float:
    """Growth ratio |f^(k+1)(e)| / |f^k(e)| once it settles (at most n / power
    iterates of f, counted in iterates of the underlying map)."""
    it = cw.IteratedImages(f.image_codes())
    prev, ratio, calm = 1, 0.0, 0
    for _ in range(max(8, n // max(f.power, 1))):
        it.step()
        cur = cw.length(it.images[code])
        new = cur / prev if prev else 0.0
        calm = calm + 1 if abs(new - ratio) <= tol * max(new, 1.0) else 0
        prev, ratio = cur, new
        if calm >= 3:
            break
    return ratio


def edge_growth(f: GraphSelfMap, edge: int) -> GrowthType:
    """Growth type of a positive edge, by induction up the filtration."""
    table = f._cache.setdefault("growth", {})
    if edge in table:
        return table[edge]
    strata = compute_strata(f)
    h = height(strata)
    for s in strata:
        for e in s.edges:
            if e not in table:
                table[e] = _edge_growth_in(f, e, s, h)
        if edge in table:
            break
    return table[edge]


def _edge_growth_in(f: GraphSelfMap, e: int, s: Stratum, h) -> GrowthType:
    img = f.edge_images[e]
    if s.kind == "NEG-fixed":
        return NON_GROWING
    if s.kind == "zero":
        return path_growth(f, img)
    if s.is_neg:
        if s.kind == "NEG-linear":
            return GrowthType(1, 1.0)
        pieces = [p for p in (s.prefix, s.suffix) if p]
        if not pieces:  # orientation-reversing or block without expansion
            return GrowthType(0, 1.0, unconfirmed=True)
        g = _max_growth(path_growth(f, p) for p in pieces)
        if not g.growing:
            return GrowthType(1, 1.0, g.unconfirmed or s.unconfirmed)
        if g.lam > 1 + LAMBDA_TOL:
            return GrowthType(g.d, g.lam, g.unconfirmed or s.unconfirmed)
        return GrowthType(g.d + 1, 1.0, g.unconfirmed or s.unconfirmed)
    # EG: the stratum is irreducible, so every edge of it has the same type;
    # lower pieces of all its edges feed in
    lam, measured = s.perron, False
    if not s.legal:
        lam, measured = measured_rate(f, 2 * e), True
    mine = set(s.edges)
    pieces = []
    for x in s.edges:
        cur = []
        for c in f.edge_images[x]:
            if (c >> 1) in mine:
                if cur:
                    pieces.append(tuple(cur))
                    cur = []
            else:
                cur.append(c)
        if cur:
            pieces.append(tuple(cur))
    below = _max_growth(path_growth(f, p) for p in pieces) if pieces else NON_GROWING
    if not below.growing or below.lam < lam * (1 - 1e-6):
        return GrowthType(0, lam, below.unconfirmed, measured)
    if below.lam > lam * (1 + 1e-6):
        return GrowthType(below.d, below.lam, below.unconfirmed, measured or below.measured)
    return GrowthType(below.d + 1, lam, below.unconfirmed, measured)


def path_growth(f: GraphSelfMap, path) -> GrowthType:
    """Growth type of an edge path: (0, 1) when pre-Nielsen, otherwise the
    largest growth type among the terms of a splitting of the path."""
    codes = tuple(path.edges) if isinstance(path, EdgePath) else tuple(path)
    if not codes:
        return NON_GROWING
    status = detect_nielsen(f, codes)
    if status.non_growing:
        return NON_GROWING
    try:
        terms = split_path(f, codes)
    except SplittingError:
        terms = [Term("edge", (c,)) for c in codes]
    g = _max_growth(term_growth(f, t) for t in terms)
    if status.kind == "unknown":
        g = GrowthType(g.d, g.lam, True, g.measured)
    return g


def term_growth(f: GraphSelfMap, t: "Term") -> GrowthType:
    if t.kind == "edge":
        return edge_growth(f, t.path[0] >> 1)
    if t.kind == "INP":
        return NON_GROWING
    if t.kind == "exceptional":
        return GrowthType(1, 1.0)
    return _max_growth(edge_growth(f, c >> 1) for c in t.path)


def growth_type(f: GraphSelfMap, path: EdgePath | str | tuple[int, ...]) -> GrowthType:
    if isinstance(path, str):
        path = f.graph.path(path)
    return path_growth(f, path)


def long_nongrowing_subpaths(f: GraphSelfMap, path, threshold: int = 16) -> list[tuple[int, int]]:
    """Maximal runs of non-growing edges longer than ``threshold``, as
    (start, length).  Diagnostic only: the runs are reported, not rejected."""
    codes = tuple(path.edges) if isinstance(path, EdgePath) else tuple(path)
    out, start = [], None
    for i, c in enumerate(codes + (None,)):
        still = c is not None and not edge_growth(f, c >> 1).growing
        if still and start is None:
            start = i
        elif not still and start is not None:
            if i - start > threshold:
                out.append((start, i - start))
            start = None
    return out


def iterated_lengths(f: GraphSelfMap, path, n_max: int) -> list[int]:
    """Exact |f#^k(path)| for k = 0..n_max (compressed, no expansion)."""
    codes = tuple(path.edges) if isinstance(path, EdgePath) else tuple(path)
    out = []
    for k in range(n_max + 1):
        out.append(cw.length(f.compressed_image(codes, k)))
    return out


# ---------------------------------------------------------------- terms and splittings

@dataclass(frozen=True)
class Term:
    """One term of a splitting.

    kind is "edge", "INP", "exceptional" or "connecting".  For exceptional
    terms ``info`` is (e, u, e2, p, d, d2): the path is e u^p reverse(e2)
    with f(e) = e u^d and f(e2) = e2 u^d2.
    """

    kind: str
    path: tuple[int, ...]
    info: tuple = ()

    def family(self):
        """Key identifying the term up to the exponent of an exceptional path."""
        if self.kind == "exceptional":
            e, u, e2, _, d, d2 = self.info
            return ("exceptional", e, u, e2)
        return (self.kind, self.path)

    def inverse(self) -> "Term":
        inv = tuple(c ^ 1 for c in reversed(self.path))
        if self.kind == "exceptional":
            e, u, e2, p, d, d2 = self.info
            return Term("exceptional", inv, (e2, u, e, -p, d2, d))
        return Term(self.kind, inv)


def _primitive_root(w: tuple[int, ...]) -> tuple[tuple[int, ...], int]:
    n = len(w)
    for p in range(1, n + 1):
        if n % p == 0 and w[:p] * (n // p) == w:
            return w[:p], n // p
    return w, 1


def linear_edges(f: GraphSelfMap) -> dict[int, tuple[tuple[int, ...], int]]:
    """Linear edge e -> (root u, d) with f(e) = e u^d, d > 0 up to inverting u.

    u is normalized so that d > 0 for the positive orientation of the root
    as it appears in the image.
    """
    out = {}
    for s in compute_strata(f):
        if s.kind != "NEG-linear" or s.prefix:
            continue
        root, d = _primitive_root(s.suffix)
        out[s.edges[0]] = (root, d)
    return out


def _canonical_root(u: tuple[int, ...], d: int) -> tuple[tuple[int, ...], int]:
    inv = tuple(c ^ 1 for c in reversed(u))
    return (u, d) if u <= inv else (inv, -d)


@dataclass(frozen=True)
class ExceptionalFamily:
    e: int
    u: tuple[int, ...]
    e2: int
    d: int
    d2: int

    @property
    def exceptional(self) -> bool:
        return self.d != self.d2


def detect_exceptional(f: GraphSelfMap, include_equal: bool = False) -> list[ExceptionalFamily]:
    """Pairs of linear edges over a common Nielsen root with exponents d != d2.

    With ``include_equal`` the d == d2 pairs (which give Nielsen paths) are
    listed as well.
    """
    lin = linear_edges(f)
    groups: dict[tuple[int, ...], list[tuple[int, int]]] = {}
    for e, (u, d) in sorted(lin.items()):
        cu, cd = _canonical_root(u, d)
        groups.setdefault(cu, []).append((e, cd))
    out = []
    for u, members in groups.items():
        for i, (e, d) in enumerate(members):
            for e2, d2 in members[i + 1:]:
                if (d > 0) != (d2 > 0):
                    continue
                if d < 0:
                    uu, dd, dd2 = tuple(c ^ 1 for c in reversed(u)), -d, -d2
                else:
                    uu, dd, dd2 = u, d, d2
                fam = ExceptionalFamily(2 * e, uu, 2 * e2, dd, dd2)
                if fam.exceptional or include_equal:
                    out.append(fam)
    return out


def _match_exceptional(f: GraphSelfMap, block: tuple[int, ...]) -> Term | None:
    if len(block) < 2 or block[0] & 1 or not block[-1] & 1:
        return None
    e, e2 = block[0], block[-1] ^ 1
    lin = linear_edges(f)
    if (e >> 1) not in lin or (e2 >> 1) not in lin or e == e2:
        return None
    u1, d1 = _canonical_root(*lin[e >> 1])
    u2, d2 = _canonical_root(*lin[e2 >> 1])
    if u1 != u2 or (d1 > 0) != (d2 > 0) or d1 == d2:
        return None
    u = u1 if d1 > 0 else tuple(c ^ 1 for c in reversed(u1))
    d, dd = abs(d1), abs(d2)
    mid = block[1:-1]
    if len(mid) % len(u):
        return None
    k = len(mid) // len(u)
    if mid == u * k:
        p = k
    elif mid == tuple(c ^ 1 for c in reversed(u)) * k:
        p = -k
    else:
        return None
    return Term("exceptional", block, (e, u, e2, p, d, dd))


def _is_nielsen(f: GraphSelfMap, block) -> bool:
    return tighten_codes(f, block) == tuple(block)


def recognize(f: GraphSelfMap, block: tuple[int, ...]) -> Term | None:
    block = tuple(block)
    h = height(compute_strata(f))
    if len(block) == 1:
        return Term("edge", block)
    exc = _match_exceptional(f, block)
    if exc is not None:
        return exc
    if _is_nielsen(f, block):
        # indivisible: no proper prefix ending at a vertex is itself Nielsen
        for k in range(1, len(block)):
            if _is_nielsen(f, block[:k]):
                return None
        return Term("INP", block)
    if all(h[c >> 1].kind == "zero" for c in block):
        return Term("connecting", block)
    return None


def _junction_ok(f: GraphSelfMap, left, right, depth: int) -> bool:
    for k in range(1, depth + 1):
        a = f.compressed_image(left, k)
        b = f.compressed_image(right, k)
        if cw.cancellation(a, b):
            return False
    return True


def split_path(f: GraphSelfMap, codes, depth: int = 8) -> list[Term]:
    """Automatic splitting: start from single edges and merge neighbours
    whose images cancel within ``depth`` iterates; every resulting block
    must be recognized as a term."""
    codes = tuple(codes)
    key = ("split", codes, depth)
    cache = f._cache.setdefault("splits", {})
    if key in cache:
        return cache[key]
    blocks = [(c,) for c in codes]
    i = 0
    while i < len(blocks) - 1:
        if _junction_ok(f, blocks[i], blocks[i + 1], depth):
            i += 1
        else:
            blocks[i:i + 2] = [blocks[i] + blocks[i + 1]]
            i = max(i - 1, 0)
    terms = []
    for b in blocks:
        t = recognize(f, b)
        if t is None:
            raise SplittingError(f"unrecognized block {f.graph.format(b)}")
        terms.append(t)
    cache[key] = terms
    return terms


def _cut(codes, lengths) -> list[tuple[int, ...]]:
    out, i = [], 0
    for n in lengths:
        out.append(tuple(codes[i:i + n]))
        i += n
    return out


def verify_splitting(f: GraphSelfMap, blocks, depth: int = 8) -> list[Term]:
    """Check a user splitting: recognized terms, no cancellation between
    neighbours for ``depth`` iterates."""
    terms = []
    for b in blocks:
        t = recognize(f, b)
        if t is None:
            raise SplittingError(f"term {f.graph.format(b)} is not an edge, INP, exceptional or connecting path")
        terms.append(t)
    for x, y in zip(blocks, blocks[1:]):
        if not _junction_ok(f, x, y, depth):
            raise SplittingError(f"cancellation between terms {f.graph.format(x)} and {f.graph.format(y)}")
    return terms


def edge_splitting(f: GraphSelfMap, code: int, depth: int = 8) -> list[Term]:
    """Complete splitting of f(e) for an oriented edge."""
    cache = f._cache.setdefault("edge_split", {})
    if code in cache:
        return cache[code]
    if code & 1:
        out = [t.inverse() for t in reversed(edge_splitting(f, code ^ 1, depth))]
    else:
        img = f.image(code)
        lengths = f.split_lengths(code)
        if lengths is not None:
            out = verify_splitting(f, _cut(img, lengths), depth)
        else:
            out = split_path(f, img, depth)
    cache[code] = out
    return out


def term_image(f: GraphSelfMap, t: Term) -> list[Term]:
    """tau(t): the terms of the tightened image of a term."""
    if t.kind == "edge":
        return edge_splitting(f, t.path[0])
    if t.kind == "INP":
        return [t]
    if t.kind == "exceptional":
        e, u, e2, p, d, d2 = t.info
        q = p + d - d2
        mid = u * q if q >= 0 else tuple(c ^ 1 for c in reversed(u)) * (-q)
        return [Term("exceptional", (e,) + mid + (e2 ^ 1,), (e, u, e2, q, d, d2))]
    return split_path(f, tighten_codes(f, t.path))


def edge_kind(f: GraphSelfMap, code: int) -> str:
    return height(compute_strata(f))[code >> 1].kind


# ---------------------------------------------------------------- term closure

@dataclass
class TermGraph:
    """Closure of a set of terms under tau, with exceptional terms grouped
    by family."""

    terms: dict  # family key -> representative Term
    succ: dict   # family key -> list of family keys (with repetition, in order)
    roots: list

    def digraph(self) -> nx.DiGraph:
        g = nx.DiGraph()
        g.add_nodes_from(self.terms)
        for k, vs in self.succ.items():
            for v in vs:
                g.add_edge(k, v)
        return g


def term_closure(f: GraphSelfMap, start: list[Term], cap: int = 10_000) -> TermGraph:
    terms, succ = {}, {}
    queue = []
    for t in start:
        k = t.family()
        if k not in terms:
            terms[k] = t
            queue.append(k)
    while queue:
        k = queue.pop()
        img = term_image(f, terms[k])
        succ[k] = [t.family() for t in img]
        for t in img:
            kk = t.family()
            if kk not in terms:
                if len(terms) >= cap:
                    raise InfiniteAlphabetError(f"term alphabet exceeds {cap}")
                terms[kk] = t
                queue.append(kk)
    return TermGraph(terms, succ, [t.family() for t in start])


@dataclass
class Substitution:
    """A substitution tau on a finite alphabet of terms."""

    terms: list[Term]
    images: list[list[int]]
    seed: int
    graph: Graph

    def symbols(self) -> list[str]:
        return [self.graph.format(t.path).replace(" ", "") for t in self.terms]

    def expand(self, word) -> list[int]:
        out = []
        for i in word:
            out.extend(self.terms[i].path)
        return out

    def fixed_word(self, n_terms: int) -> list[int]:
        w = [self.seed]
        while len(w) < n_terms:
            nxt = [j for i in w for j in self.images[i]]
            if len(nxt) <= len(w):
                break
            w = nxt
        return w[:n_terms]

    def __str__(self) -> str:
        s = self.symbols()
        return "; ".join(f"{s[i]} -> {' '.join(s[j] for j in img)}" for i, img in enumerate(self.images))


def extract_substitution(f: GraphSelfMap, seed: int | str, cap: int = 10_000) -> Substitution:
    """The substitution induced on terms by a seed edge with f(e) = e.gamma."""
    if isinstance(seed, str):
        seed = f.alphabet.code(seed)
    first = edge_splitting(f, seed)
    if not first or first[0] != Term("edge", (seed,)):
        raise InvalidMapError("seed edge image does not start with the seed edge")
    tg = term_closure(f, [Term("edge", (seed,))], cap)
    if any(t.kind == "exceptional" for t in tg.terms.values()):
        raise InfiniteAlphabetError("exceptional paths present: the term alphabet is infinite")
    keys = list(tg.terms)
    keys.sort(key=lambda k: (k != ("edge", (seed,)), len(tg.terms[k].path), tg.terms[k].path))
    index = {k: i for i, k in enumerate(keys)}
    images = [[index[k2] for k2 in tg.succ[k]] for k in keys]
    return Substitution([tg.terms[k] for k in keys], images, 0, f.graph)


# ---------------------------------------------------------------- collapsing

def collapse_edge(graph: Graph, edge: int | str, path=()) -> tuple[Graph, tuple[int, ...]]:
    """Collapse a non-loop edge to a point and erase it from a path.

    Returns the new graph and the projected path, re-encoded over the
    remaining edges.
    """
    if isinstance(edge, str):
        edge = graph.edge_names.code(edge)
    i = edge >> 1
    o, t = graph.origin[i], graph.terminus[i]
    if o == t:
        raise InvalidMapError("cannot collapse a loop edge")
    keep = [j for j in range(graph.n_edges) if j != i]
    vmap = [v if v != t else o for v in range(len(graph.vertices))]
    survivors = sorted(set(vmap))
    vidx = {v: k for k, v in enumerate(survivors)}
    names = Alphabet(tuple(graph.edge_names.generators[j] for j in keep))
    g2 = Graph(tuple(graph.vertices[v] for v in survivors), names,
               tuple(vidx[vmap[graph.origin[j]]] for j in keep),
               tuple(vidx[vmap[graph.terminus[j]]] for j in keep))
    recode = {}
    for k, j in enumerate(keep):
        recode[2 * j] = 2 * k
        recode[2 * j + 1] = 2 * k + 1
    codes = path.edges if isinstance(path, EdgePath) else path
    projected = tuple(recode[c] for c in codes if (c >> 1) != i)
    return g2, projected


def project_array(codes: np.ndarray, edge: int) -> tuple[np.ndarray, np.ndarray]:
    """Erase an edge (both orientations) from a long path.

    Returns the projected codes (re-encoded as in collapse_edge) and the
    positions in the original array of the surviving letters.
    """
    i = edge >> 1
    keep = (codes >> 1) != i
    pos = np.flatnonzero(keep)
    out = codes[keep].astype(np.int64)
    out = np.where((out >> 1) > i, out - 2, out)
    return out.astype(np.int32), pos


_HASH_BASES = (np.uint64(0x9E3779B97F4A7C15), np.uint64(0xC2B2AE3D27D4EB4F))


def _window_hashers(codes: np.ndarray):
    """Position-independent 64-bit hash of codes[l:r] (two bases folded with the length)."""
    x = codes.astype(np.uint64) + np.uint64(1)
    out = []
    with np.errstate(over="ignore"):
        for b in _HASH_BASES:
            pw = np.concatenate([[np.uint64(1)], np.cumprod(np.full(len(x) - 1, b, dtype=np.uint64))])
            inv = np.uint64(pow(int(b), -1, 2**64))
            ipw = np.concatenate([[np.uint64(1)], np.cumprod(np.full(len(x) - 1, inv, dtype=np.uint64))])
            s = np.concatenate([[np.uint64(0)], np.cumsum(x * pw, dtype=np.uint64)])
            out.append((s, ipw))

    def h(l: np.ndarray, r: np.ndarray) -> np.ndarray:
        with np.errstate(over="ignore"):
            (s1, i1), (s2, i2) = out
            a = (s1[r] - s1[l]) * i1[l]
            b = (s2[r] - s2[l]) * i2[l]
            return a ^ (b * np.uint64(0xFF51AFD7ED558CCD)) ^ ((r - l).astype(np.uint64) << np.uint64(40))

    return h


def collapse_lift_stats(codes, edge: int, n_max: int) -> tuple[np.ndarray, np.ndarray]:
    """Measure how the factors of a path relate to those of its collapse.

    For n = 1..n_max returns ``span[n]``, the longest factor of the path
    needed to cover a length-n factor of the projection, and ``fiber[n]``,
    the largest number of distinct factors of the path with the same
    length-n projection (a factor may extend the cover by a letter of the
    collapsed edge at either end).
    """
    codes = np.asarray(codes, dtype=np.int32)
    proj, pos = project_array(codes, edge)
    N, M = len(codes), len(proj)
    hx, hp = _window_hashers(codes), _window_hashers(proj)
    is_e = (codes >> 1) == (edge >> 1)
    span = np.zeros(n_max + 1, dtype=np.int64)
    fiber = np.zeros(n_max + 1, dtype=np.int64)
    for n in range(1, min(n_max, M) + 1):
        i = np.arange(M - n + 1)
        lo, hi = pos[i], pos[i + n - 1] + 1
        span[n] = int((hi - lo).max())
        left = (lo > 0) & is_e[np.maximum(lo - 1, 0)]
        right = (hi < N) & is_e[np.minimum(hi, N - 1)]
        u = hp(i, i + n)
        ls, rs, us = [lo], [hi], [u]
        for mask, dl, dr in ((left, 1, 0), (right, 0, 1), (left & right, 1, 1)):
            ls.append(lo[mask] - dl)
            rs.append(hi[mask] + dr)
            us.append(u[mask])
        g = hx(np.concatenate(ls), np.concatenate(rs))
        _, first = np.unique(g, return_index=True)
        _, counts = np.unique(np.concatenate(us)[first], return_counts=True)
        fiber[n] = int(counts.max())
    return span, fiber


# ---------------------------------------------------------------- .gmap files

_MAP = re.compile(r"^(map|split)\s+(\S+)\s*->(.*)$")


def parse_gmap(text: str, name: str = "") -> GraphSelfMap:
    """Parse the graph map format.

    ::

        vertex v0 v1
        edge a v0 v1
        map a -> a C b
        split a -> [a][C b]

    A text starting with ``letters:`` is read as an automorphism and
    realized on the rose.
    """
    if re.search(r"^\s*letters:", text, re.M):
        return rose_map(parse_fga(text, name))
    vertices: list[str] = []
    edges: list[tuple[str, str, str]] = []
    maps: dict[str, str] = {}
    splits: dict[str, str] = {}
    assertions: set[str] = set()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        words = line.split()
        if words[0] == "vertex":
            vertices.extend(words[1:])
        elif words[0] == "edge":
            if len(words) != 4:
                raise FormatError("expected 'edge NAME ORIGIN TERMINUS'", lineno)
            edges.append((words[1], words[2], words[3]))
        elif words[0] == "assert:":
            assertions.update(words[1:])
        else:
            m = _MAP.match(line)
            if not m:
                raise FormatError(f"cannot parse {raw.strip()!r}", lineno)
            target = maps if m.group(1) == "map" else splits
            if m.group(2) in target:
                raise FormatError(f"duplicate {m.group(1)} for {m.group(2)}", lineno)
            target[m.group(2)] = m.group(3).strip()
    if not edges:
        raise FormatError("no edges declared")
    if len(set(vertices)) != len(vertices):
        raise FormatError("duplicate vertex names")
    vindex = {v: i for i, v in enumerate(vertices)}
    try:
        alphabet = Alphabet(tuple(e[0] for e in edges))
    except AlphabetError as exc:
        raise FormatError(str(exc)) from None
    for e, o, t in edges:
        if o not in vindex or t not in vindex:
            raise FormatError(f"edge {e} uses an undeclared vertex")
    try:
        graph = Graph(tuple(vertices), alphabet, tuple(vindex[e[1]] for e in edges),
                      tuple(vindex[e[2]] for e in edges))
    except InvalidMapError as exc:
        raise FormatError(str(exc)) from None
    images = []
    for e, _, _ in edges:
        if e not in maps:
            raise FormatError(f"no map line for edge {e}")
        try:
            images.append(tuple(alphabet.parse(maps[e])))
        except AlphabetError as exc:
            raise FormatError(str(exc)) from None
    for e in list(maps) + list(splits):
        if e not in alphabet.generators:
            raise FormatError(f"map or split for unknown edge {e}")
    vimg = [None] * len(vertices)
    for i, img in enumerate(images):
        if not img:
            raise FormatError(f"edge {edges[i][0]} has a trivial image")
        for v, w in ((graph.origin[i], graph.o(img[0])), (graph.terminus[i], graph.t(img[-1]))):
            if vimg[v] is not None and vimg[v] != w:
                raise FormatError(f"inconsistent vertex image for {vertices[v]}")
            vimg[v] = w
    vimg = [v if v is not None else i for i, v in enumerate(vimg)]
    split_lengths = None
    if splits:
        split_lengths = []
        for i, (e, _, _) in enumerate(edges):
            if e not in splits:
                split_lengths.append(None)
                continue
            blocks = re.findall(r"\[([^\]]*)\]", splits[e])
            if not blocks or re.sub(r"\[[^\]]*\]", "", splits[e]).strip():
                raise FormatError(f"split for {e} must be a sequence of [..] blocks")
            toks = [b.split() for b in blocks]
            if [t for b in toks for t in b] != [alphabet.symbol(c) for c in images[i]]:
                raise FormatError(f"split for {e} does not spell its image")
            split_lengths.append(tuple(len(b) for b in toks))
        split_lengths = tuple(split_lengths)
    try:
        return GraphSelfMap(graph, tuple(vimg), tuple(images), split_lengths, name, frozenset(assertions))
    except InvalidMapError as exc:
        raise FormatError(str(exc)) from None


def load_gmap(path: str | Path) -> GraphSelfMap:
    path = Path(path)
    return parse_gmap(path.read_text(encoding="utf-8"), name=path.stem)


def format_gmap(f: GraphSelfMap) -> str:
    g = f.graph
    lines = [f"vertex {' '.join(g.vertices)}"]
    for i, e in enumerate(g.edge_names.generators):
        lines.append(f"edge {e} {g.vertices[g.origin[i]]} {g.vertices[g.terminus[i]]}")
    for i, e in enumerate(g.edge_names.generators):
        lines.append(f"map {e} -> {g.format(f.edge_images[i])}")
    if f.splits is not None:
        for i, e in enumerate(g.edge_names.generators):
            if f.splits[i] is not None:
                blocks = _cut(f.edge_images[i], f.splits[i])
                lines.append(f"split {e} -> " + "".join(f"[{g.format(b)}]" for b in blocks))
    return "\n".join(lines) + "\n"
