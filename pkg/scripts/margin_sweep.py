"""Compare Ext ladders at the default lift margin against a larger margin.

Any difference means the default undercounts lifting obstructions for that
pair.  Usage: python scripts/margin_sweep.py [max_factors] [extra]
"""

import itertools
import sys
import time

from canforge.catalog import names, system
from canforge.homology import ext_dim, hom_complex, resolve_margin
from canforge.mf import flag_ideal_mf


def proper_subsets(n: int) -> list[set[int]]:
    return [set(I) for k in range(1, n) for I in itertools.combinations(range(1, n + 1), k)]


def main(max_factors: int = 4, extra: int = 2, orders=(4, 5, 6, 7)) -> int:
    bad = checked = 0
    start = time.time()
    for name in names(max_factors):
        s = system(name)
        subs = proper_subsets(s.n)[:5]
        for I, J in itertools.product(subs, repeat=2):
            M, N = flag_ideal_mf(s, I), flag_ideal_mf(s, J)
            for i in (1, 2):
                m = resolve_margin(hom_complex(M, N, i % 2), None)
                a = ext_dim(M, N, i, orders).dims
                b = ext_dim(M, N, i, orders, lift_margin=m + extra).dims
                checked += 1
                if a != b:
                    bad += 1
                    print(f"{name} {sorted(I)} {sorted(J)} i={i} margin={m}: {a} vs {b}")
    print(f"{checked} ladders, {bad} disagreements, {time.time() - start:.0f}s")
    return bad


if __name__ == "__main__":
    args = [int(a) for a in sys.argv[1:]]
    sys.exit(1 if main(*args) else 0)
