"""Named factor systems used by the test suite and the experiment scripts."""

from __future__ import annotations

from .arith import QQ, Field
from .mf import FactorSystem

# name -> factor texts; every factor is irreducible over Q
SYSTEMS: dict[str, list[str]] = {
    "smooth": ["x"],
    "cusp": ["x^2+y^3"],
    "conifold": ["x", "y"],
    "double_line": ["x", "x"],
    "tangent_pair": ["x", "x+y^2"],
    "line_cusp": ["x", "y^2-x^3"],
    "three_lines": ["x", "y", "x+y"],
    "lines_cusp": ["x", "y", "x^2+y^3"],
    "tangent_triple": ["y", "y+x^2", "y-x^2"],
    "double_line_plus": ["x", "x", "y"],
    "four_lines": ["x", "y", "x+y", "x-y"],
    "fixture": ["x", "y", "y", "x+y"],
    "mixed_four": ["x", "y^2+x^3", "y", "x-y"],
}


def system(name: str, field: Field = QQ) -> FactorSystem:
    return FactorSystem.parse(SYSTEMS[name], field)


def names(max_n: int = 4, isolated: bool | None = None) -> list[str]:
    out = []
    for name, facs in SYSTEMS.items():
        if len(facs) > max_n:
            continue
        if isolated is not None and system(name).isolated != isolated:
            continue
        out.append(name)
    return out
