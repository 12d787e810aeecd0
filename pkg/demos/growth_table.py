"""Growth type n^d lam^n of every edge of every bundled map, next to the
measured ratio |f^60(e)| / (lam^60 60^d)."""
from freeword.graphs import GraphSelfMap, edge_growth, iterated_lengths, normalize_power, rose_map
from freeword.suite import corpus_dir, load_input

for path in sorted(corpus_dir().iterdir()):
    f = load_input(path)
    f = f if isinstance(f, GraphSelfMap) else rose_map(f)
    fk, k = normalize_power(f)
    for e, name in enumerate(f.graph.edge_names.generators):
        g = edge_growth(fk, e)
        lam = g.lam ** (1 / k)
        L = iterated_lengths(f, (2 * e,), 60)[-1]
        print(f"{path.name:<20} {name}  d={g.d}  lam={lam:.6f}  ratio={L / (lam**60 * 60**g.d):.4g}")
