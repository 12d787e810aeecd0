"""Factor complexity versus recurrence complexity on the rcdif fixed word.

The word c b b a b a a a b a a a a ... has about n^2/2 factors of length n,
but only n + 1 of them occur infinitely often.
"""
from freeword.classify import classify_empirical
from freeword.complexity import recurrence_profile
from freeword.limits import as_stream
from freeword.suite import load_input, resolve

phi = load_input(resolve("rcdif.fga"))
x = as_stream(phi, "c").prefix(10**6)
prof = recurrence_profile(x, 1000)

print("n      p(n)    p_rec(n)")
for n in (1, 2, 5, 10, 50, 100, 500, 1000):
    print(f"{n:<6} {prof.p[n - 1]:<7} {prof.p_rec[n - 1]}")
print("p class:    ", classify_empirical(prof).cls)
print("p_rec class:", classify_empirical(prof, recurrence=True).cls)
