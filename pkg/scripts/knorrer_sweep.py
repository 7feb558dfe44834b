"""Ext^1 and Ext^2 of every flag-ideal pair, four variables against two.

Prints one row per (system, I, J, i) and a summary line.
Usage: python scripts/knorrer_sweep.py [max_factors]
"""

import itertools
import sys
import time

from canforge.catalog import names, system
from canforge.homology import ext_dim
from canforge.mf import flag_ideal_mf, knorrer_reduce

ORDERS = (4, 5, 6)


def main(max_factors: int = 3) -> int:
    start = time.time()
    bad = rows = 0
    print(f"{'system':<18}{'I':<10}{'J':<10}{'i':<3}{'uv - f':<22}{'f':<22}")
    for name in names(max_factors):
        s = system(name)
        subs = [set(c) for k in range(1, s.n) for c in itertools.combinations(range(1, s.n + 1), k)]
        for I, J in itertools.product(subs, repeat=2):
            M, N = flag_ideal_mf(s, I), flag_ideal_mf(s, J)
            for i in (1, 2):
                big = ext_dim(M, N, i, ORDERS)
                small = ext_dim(knorrer_reduce(M), knorrer_reduce(N), i, ORDERS)
                rows += 1
                mark = "" if big.describe() == small.describe() else "  <-- differs"
                bad += bool(mark)
                print(f"{name:<18}{str(sorted(I)):<10}{str(sorted(J)):<10}{i:<3}"
                      f"{big.describe():<22}{small.describe():<22}{mark}")
    print(f"{rows} ladders, {bad} differ, {time.time() - start:.0f}s")
    return bad


if __name__ == "__main__":
    sys.exit(1 if main(*[int(a) for a in sys.argv[1:]]) else 0)
