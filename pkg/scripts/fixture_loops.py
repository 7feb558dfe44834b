"""Loop multiset of the identity-flag quiver for four-factor systems.

Compares the fixture [x, y, y, x+y] with variants where f_1 and f_4 share a
tangent line.  A loop at R appears exactly when (f_1, f_4) is not all of
m = (x, y), because otherwise x-type generators of m_R already factor
through T_{I1} and T_{I3}.
"""

import time

from canforge.can import cycle_annotations, flag_of_permutation, gabriel_quiver
from canforge.mf import FactorSystem

SYSTEMS = {
    "fixture": ["x", "y", "y", "x+y"],
    "shared tangent x": ["x", "y", "y", "x+y^2"],
    "shared tangent y": ["y+x^2", "x", "x", "y-x^2"],
}


def main():
    flag = flag_of_permutation([1, 2, 3, 4])
    for name, facs in SYSTEMS.items():
        t = time.time()
        s = FactorSystem.parse(facs)
        q = gabriel_quiver(s, flag)
        loops = {q.labels[i]: c for i, c in enumerate(q.loops) if c}
        print(f"{name:<18} {facs}  status={q.status}  cycle arrows={q.n_arrows}  "
              f"loops={loops}  ({time.time() - t:.1f}s)")
    ann = cycle_annotations(FactorSystem.parse(SYSTEMS["fixture"]), flag)
    print("fixture cycle labels:", {f"{a}->{b}": v for (a, b), v in sorted(ann.items())})


if __name__ == "__main__":
    main()
