"""Count the windows C1 p^d1 lam1^p <= n <= C2 p^d2 lam2^p for the three
divergence regimes and compare with 1, log log n and log n."""
from freeword.complexity import window_sweep

CASES = {
    "same rate, same degree": (1, 1, 2, 5, 1, 2),
    "same rate, degree 1 vs 2": (1, 1, 2, 1, 2, 2),
    "rates 2 vs 3": (1, 1, 2, 1, 1, 3),
}
ns = [10**k for k in range(2, 9)]
for label, params in CASES.items():
    rows, m1, m2 = window_sweep(params, ns)
    print(f"{label}  {params}")
    for r in rows:
        print(f"  n={r.n:<10} P_n={r.count:<3} phi={r.phi_class:<7} ratio={r.ratio:.3f}")
    print(f"  M2/M1 = {m2 / m1:.3f}")
