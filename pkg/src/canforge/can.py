"""The cA_n layer: flags, flag modules, base classification, blowup charts,
contraction types and the Gabriel quiver of End(T^F).

Throughout, R = K[[u,v,x,y]]/(uv - f_1...f_n).  A flag F = (I_1 < ... < I_m)
gives the module T^F = R + T_{I_1} + ... + T_{I_m} and a tower of blowups
whose level-j charts are

    u V_1 = f_{I_1},  U_k V_{k+1} = f_{I_{k+1}} / f_{I_k},  U_j v = f / f_{I_j}.

Right-hand sides are kept as multisets of factor indices, so every quotient
of products is exact by construction.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field as dc_field
from typing import Sequence

from .arith import Poly
from .factor import factorization_report
from .homology import (
    DEFAULT_ORDERS,
    INCONCLUSIVE,
    ExtResult,
    NonSplitError,
    classify_ladder,
    end_algebra,
    ext_dim,
    fl_torsion_dim,
    radical_quiver,
)
from .mf import FactorSystem, MatrixFactorization, flag_ideal_mf, free_module

MAX_FLAG_N = 8
QUIVER_ORDERS = (4, 5)

# criterion names used in provenance records
CT_CRITERION = "factor-order criterion: every f_i outside m^2"
SMOOTH_CRITERION = "ord(f) <= 1"
ISOLATED_CRITERION = "factors pairwise non-associate"
QF_CRITERION = "single irreducible factor"
CHART_CRITERION = "chart gaps: singular iff gap product in m^2"
CONTRACTION_RULE = ("extrapolated rule: divisorial iff the new gap shares an associate "
                    "class with the remaining factors")


# ---------------------------------------------------------------------------
# Flags
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Flag:
    n: int
    chain: tuple[frozenset, ...] = ()

    def __post_init__(self):
        chain = tuple(frozenset(I) for I in self.chain)
        object.__setattr__(self, "chain", chain)
        full = frozenset(range(1, self.n + 1))
        for I in chain:
            if not I or I == full or not I <= full:
                raise ValueError(f"flag entries must be proper nonempty subsets of 1..{self.n}")
        for a, b in zip(chain, chain[1:]):
            if not a < b:
                raise ValueError("flag entries must be strictly increasing")

    @property
    def m(self) -> int:
        return len(self.chain)

    @property
    def maximal(self) -> bool:
        return self.m == self.n - 1

    def key(self) -> tuple:
        return (self.m, tuple(tuple(sorted(I)) for I in self.chain))

    def __str__(self):
        return "(" + ", ".join("{" + ",".join(map(str, sorted(I))) + "}" for I in self.chain) + ")"

    def to_json(self) -> list[list[int]]:
        return [sorted(I) for I in self.chain]


def _chains_from(n: int, start: frozenset, full: frozenset):
    yield ()
    rest = sorted(full - start)
    for k in range(1, len(rest)):
        for add in itertools.combinations(rest, k):
            nxt = start | frozenset(add)
            for tail in _chains_from(n, nxt, full):
                yield (nxt,) + tail


def enumerate_flags(n: int, maximal_only: bool = False) -> list[Flag]:
    """All flags in {1..n} (including the empty one), or only maximal ones.

    Sorted by length, then lexicographically by the sorted subsets.
    """
    if not 1 <= n <= MAX_FLAG_N:
        raise ValueError(f"n must lie in 1..{MAX_FLAG_N}")
    full = frozenset(range(1, n + 1))
    flags = [Flag(n, c) for c in _chains_from(n, frozenset(), full)]
    if maximal_only:
        flags = [F for F in flags if F.maximal]
    return sorted(flags, key=Flag.key)


def flag_of_permutation(omega: Sequence[int]) -> Flag:
    """({w(1)}, {w(1), w(2)}, ..., {w(1), ..., w(n-1)}) for w in one-line notation."""
    n = len(omega)
    if sorted(omega) != list(range(1, n + 1)):
        raise ValueError(f"{list(omega)} is not a permutation of 1..{n}")
    return Flag(n, tuple(frozenset(omega[:k]) for k in range(1, n)))


# ---------------------------------------------------------------------------
# Flag modules
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FlagModule:
    flag: Flag
    summands: tuple[MatrixFactorization, ...]
    labels: tuple[str, ...]

    def to_json(self) -> dict:
        return {"flag": self.flag.to_json(), "labels": list(self.labels),
                "ideals": ["R"] + [_ideal_text(s) for s in self.summands[1:]]}


def _ideal_text(mf: MatrixFactorization) -> str:
    return f"(u, {mf.phi[0][1]})"


def build_flag_module(sys: FactorSystem, flag: Flag) -> FlagModule:
    """R + T_{I_1} + ... + T_{I_m}, labelled R, T_{I1}, ..."""
    if flag.n != sys.n:
        raise ValueError(f"flag is on {flag.n} letters but there are {sys.n} factors")
    summands = [free_module(sys.hypersurface())]
    labels = ["R"]
    for j, I in enumerate(flag.chain, start=1):
        summands.append(flag_ideal_mf(sys, I))
        labels.append(f"T_{{I{j}}}")
    return FlagModule(flag, tuple(summands), tuple(labels))


# ---------------------------------------------------------------------------
# Classification of the base
# ---------------------------------------------------------------------------


@dataclass
class ClassificationReport:
    smooth: bool
    isolated: bool
    q_factorial: bool
    ct: bool
    terminal_note: str
    mm_note: str
    field_caveat: str
    provenance: dict[str, str]
    notes: list[str] = dc_field(default_factory=list)
    refinement: dict | None = None

    def to_json(self) -> dict:
        out = {"smooth": self.smooth, "isolated": self.isolated,
               "q_factorial": self.q_factorial, "ct": self.ct,
               "terminal_note": self.terminal_note, "mm_note": self.mm_note,
               "field_caveat": self.field_caveat, "provenance": dict(self.provenance),
               "notes": list(self.notes)}
        if self.refinement is not None:
            out["refinement"] = self.refinement
        return out


def classify_base(sys: FactorSystem, refine: bool = False,
                  order: int = 8) -> ClassificationReport:
    """Smoothness, isolatedness, Q-factoriality and the CT criterion for R.

    With ``refine=True`` every order-2 factor is run through the formal
    quadratic splitter over the configured field and the verdicts are
    recomputed for the refined factor list.
    """
    f = sys.f
    smooth = f.ord() <= 1
    isolated = sys.isolated
    q_fact = sys.n == 1
    ct = all(p.ord() <= 1 for p in sys.factors)
    caveat = (f"over {sys.field}: irreducibility of the factors is "
              + "; ".join(f"f{i + 1} {t}" for i, t in enumerate(sys.trust))
              + "; complete-local Q-factoriality is field-sensitive")
    if smooth:
        terminal = "smooth"
    elif isolated:
        terminal = "isolated cA_n singularity, hence terminal"
    else:
        terminal = "non-isolated (repeated associate factor), hence not terminal"
    if sys.n == 1:
        mm = "R itself is an MM module (f irreducible)"
    else:
        mm = "T^w for every maximal flag w is an MM generator; R alone is not MM"
    notes = []
    if ct and not isolated:
        notes.append("non-isolated: CT criterion still applies to the stated factor list")
    if any(t.startswith("formally reducible") for t in sys.trust):
        notes.append("some factor splits after completion; see refinement")
    prov = {"smooth": SMOOTH_CRITERION, "isolated": ISOLATED_CRITERION,
            "q_factorial": QF_CRITERION, "ct": CT_CRITERION,
            "field": str(sys.field)}
    rep = ClassificationReport(smooth, isolated, q_fact, ct, terminal, mm, caveat, prov, notes)
    if refine:
        rep.refinement = refine_classification(sys, order)
    return rep


def refine_classification(sys: FactorSystem, order: int = 8) -> dict:
    """Re-split order-2 factors formally and recompute the factor-count verdicts."""
    per_factor = []
    orders: list[int] = []
    for p in sys.factors:
        if p.ord() == 2:
            rep = factorization_report(p, order, sys.field)
            per_factor.append(rep)
            if rep["status"] == "split":
                orders.extend(rep["factor_orders"])
                continue
        else:
            per_factor.append({"status": "not attempted", "order": int(p.ord())})
        orders.append(int(p.ord()))
    count = len(orders)
    return {"field": str(sys.field), "order": order, "factor_count": count,
            "factor_orders": orders, "q_factorial": count == 1,
            "ct": all(o <= 1 for o in orders), "factors": per_factor,
            "note": f"completion over {sys.field} has {count} formal factor(s)"}


# ---------------------------------------------------------------------------
# Blowup charts
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Chart:
    level: int
    index: int
    coordinates: tuple[str, ...]
    equation: Poly  # U*V - gap, in ``coordinates``
    gap_factors: tuple[int, ...]
    rhs: Poly  # gap product in x, y

    @property
    def lhs(self) -> str:
        return f"{self.coordinates[0]}*{self.coordinates[1]}"

    def text(self) -> str:
        return f"{self.lhs} = {self.rhs}"

    def to_json(self) -> dict:
        return {"level": self.level, "index": self.index, "coordinates": list(self.coordinates),
                "equation": self.text(), "gap_factors": list(self.gap_factors),
                "rhs_factored": self.factored}

    @property
    def factored(self) -> str:
        return "*".join(f"f{i}" for i in self.gap_factors)


@dataclass(frozen=True)
class ChartTower:
    flag: Flag
    levels: tuple[tuple[Chart, ...], ...]

    def to_json(self) -> dict:
        return {"flag": self.flag.to_json(),
                "levels": [[c.to_json() for c in lvl] for lvl in self.levels]}


def _gaps(flag: Flag, j: int) -> list[tuple[int, ...]]:
    """Gap multisets of level j: I_1, I_2 - I_1, ..., full - I_j."""
    full = frozenset(range(1, flag.n + 1))
    chain = (frozenset(),) + flag.chain[:j] + (full,)
    return [tuple(sorted(b - a)) for a, b in zip(chain, chain[1:])]


def _chart_coords(j: int, k: int) -> tuple[str, str]:
    if j == 0:
        return "u", "v"
    first = "u" if k == 0 else f"U{k}"
    second = "v" if k == j else f"V{k + 1}"
    return first, second


def blowup_charts(sys: FactorSystem, flag: Flag) -> ChartTower:
    """Levels 0..m of the blowup tower; level j has j+1 charts."""
    if flag.n != sys.n:
        raise ValueError(f"flag is on {flag.n} letters but there are {sys.n} factors")
    levels = []
    for j in range(flag.m + 1):
        charts = []
        for k, gap in enumerate(_gaps(flag, j)):
            U, V = _chart_coords(j, k)
            coords = (U, V, "x", "y")
            rhs = sys.f_of(gap)
            eq = Poly.var(coords, U, sys.field) * Poly.var(coords, V, sys.field) - rhs.embed(coords)
            charts.append(Chart(j, k, coords, eq, gap, rhs))
        levels.append(tuple(charts))
    return ChartTower(flag, tuple(levels))


@dataclass(frozen=True)
class SingularPoint:
    chart: Chart
    local_type: str
    isolated: bool
    q_factorial: bool
    gap_factors: tuple[int, ...]

    def to_json(self) -> dict:
        return {"level": self.chart.level, "chart": self.chart.index,
                "local_type": self.local_type, "isolated": self.isolated,
                "q_factorial": self.q_factorial, "gap_factors": list(self.gap_factors),
                "provenance": {"criterion": CHART_CRITERION}}


def _gap_isolated(sys: FactorSystem, gap: Sequence[int]) -> bool:
    classes = [sys.class_of(i) for i in gap]
    return len(classes) == len(set(classes))


def singular_points(sys: FactorSystem, flag: Flag) -> list[list[SingularPoint]]:
    """Per level, the chart origins uv = g with g in m^2."""
    tower = blowup_charts(sys, flag)
    out = []
    for lvl in tower.levels:
        pts = []
        for ch in lvl:
            if ch.rhs.ord() >= 2:
                pts.append(SingularPoint(ch, f"uv = {ch.rhs}", _gap_isolated(sys, ch.gap_factors),
                                         len(ch.gap_factors) == 1, ch.gap_factors))
        out.append(pts)
    return out


def keydb_types(sys: FactorSystem) -> list[str]:
    """Independent factor scan: {uv = f_i : f_i in m^2}."""
    return [f"uv = {p}" for p in sys.factors if p.ord() >= 2]


def ct_for_flag(sys: FactorSystem, flag: Flag) -> bool:
    """CT verdict read off the charts: the top level has no singular point."""
    if not flag.maximal:
        raise ValueError("CT verdict from charts needs a maximal flag")
    return not singular_points(sys, flag)[-1]


# ---------------------------------------------------------------------------
# Contractions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Contraction:
    level: int
    kind: str  # "Flop" | "Divisorial"
    gap: tuple[int, ...]
    remainder: tuple[int, ...]

    def to_json(self) -> dict:
        return {"level": self.level, "type": self.kind, "gap": list(self.gap),
                "remainder": list(self.remainder), "rule": CONTRACTION_RULE,
                "curve_multiplicity": 1, "curve_multiplicity_source": "theorem-backed, not computed"}


def classify_contractions(sys: FactorSystem, flag: Flag) -> list[Contraction]:
    """Flop or Divisorial for each map X^{F_j} -> X^{F_(j-1)}, j = 1..m."""
    if flag.n != sys.n:
        raise ValueError(f"flag is on {flag.n} letters but there are {sys.n} factors")
    full = frozenset(range(1, sys.n + 1))
    out = []
    prev: frozenset = frozenset()
    for j, I in enumerate(flag.chain, start=1):
        gap = tuple(sorted(I - prev))
        rem = tuple(sorted(full - I))
        shared = {sys.class_of(i) for i in gap} & {sys.class_of(i) for i in rem}
        out.append(Contraction(j, "Divisorial" if shared else "Flop", gap, rem))
        prev = I
    return out


# ---------------------------------------------------------------------------
# Quiver
# ---------------------------------------------------------------------------


@dataclass
class Quiver:
    labels: list[str]
    arrows: list[list[int]]  # off-diagonal arrow counts, zero diagonal
    loops: list[int]
    orders: list[int]
    status: str  # "certified" | "Inconclusive" | "failed"
    field: str
    per_order: dict[int, list[list[int]]] = dc_field(default_factory=dict)
    annotations: dict[tuple[int, int], list[str]] = dc_field(default_factory=dict)
    warning: str = ""

    @property
    def n_arrows(self) -> int:
        return sum(map(sum, self.arrows))

    def to_json(self) -> dict:
        out = {"labels": self.labels, "arrows": self.arrows, "loops": self.loops,
               "status": self.status,
               "per_order": {str(k): v for k, v in sorted(self.per_order.items())},
               "annotations": [{"source": self.labels[i], "target": self.labels[j], "labels": a}
                               for (i, j), a in sorted(self.annotations.items())],
               "provenance": {"criterion": "computed: rad/rad^2 of End(T^F)",
                              "orders": self.orders, "field": self.field}}
        if self.warning:
            out["warning"] = self.warning
        return out


def cycle_annotations(sys: FactorSystem, flag: Flag) -> dict[tuple[int, int], list[str]]:
    """Chart-gap labels for the cycle R -> T_{I1} -> ... -> T_{Im} -> R and back."""
    m = flag.m
    if m == 0:
        return {}
    gaps = _gaps(flag, m)
    out: dict[tuple[int, int], list[str]] = {}
    verts = list(range(m + 1)) + [0]
    for k in range(m + 1):
        a, b = verts[k], verts[k + 1]
        g = str(sys.f_of(gaps[k]))
        if k == m:
            fwd = f"({g})/u" if any(ch in g for ch in "+- ") else f"{g}/u"
        else:
            fwd = g
        out.setdefault((a, b), []).append(fwd)
        out.setdefault((b, a), []).append("u" if (b, a) == (0, m) else "inc")
    return out


def gabriel_quiver(sys: FactorSystem, flag: Flag, orders: Sequence[int] = QUIVER_ORDERS,
                   jobs: int = 1) -> Quiver:
    """Arrow counts of End(T^F) at two (or more) orders; they must agree."""
    fm = build_flag_module(sys, flag)
    labels = list(fm.labels)
    per_order: dict[int, list[list[int]]] = {}
    try:
        for N in orders:
            alg = end_algebra(fm.summands, N, jobs=jobs)
            per_order[N] = radical_quiver(alg, labels).arrows
    except NonSplitError as exc:
        k = len(labels)
        return Quiver(labels, [[0] * k for _ in range(k)], [0] * k, list(orders), "failed",
                      str(sys.field), per_order, {}, str(exc))
    mats = list(per_order.values())
    final = mats[-1]
    status, warning = "certified", ""
    if any(m_ != final for m_ in mats):
        status = "Inconclusive"
        warning = "arrow counts differ between truncation orders"
    k = len(labels)
    arrows = [[final[i][j] if i != j else 0 for j in range(k)] for i in range(k)]
    loops = [final[i][i] for i in range(k)]
    return Quiver(labels, arrows, loops, list(orders), status, str(sys.field), per_order,
                  cycle_annotations(sys, flag), warning)


# ---------------------------------------------------------------------------
# Rigidity
# ---------------------------------------------------------------------------


@dataclass
class RigidityReport:
    flag: Flag
    blocks: dict[tuple[int, int], ExtResult]
    total_dims: dict[int, int]
    verdict: str
    value: int | None
    fl_torsion: dict[tuple[int, int], int | str]
    note: str
    labels: tuple[str, ...]
    field: str

    def describe(self) -> str:
        if self.verdict == "Stabilized":
            return f"Stabilized({self.value})"
        if self.verdict == "Growing":
            return f"Growing(slope {self.value})"
        return "Inconclusive(max order reached)"

    def to_json(self) -> dict:
        blocks = []
        for (i, j), r in sorted(self.blocks.items()):
            b = {"source": self.labels[i], "target": self.labels[j], **r.to_json()}
            if (i, j) in self.fl_torsion:
                b["fl_torsion_experimental"] = self.fl_torsion[(i, j)]
            blocks.append(b)
        orders = sorted(self.total_dims)
        return {"flag": self.flag.to_json(), "ext1_total": {
                    "dims": {str(k): v for k, v in sorted(self.total_dims.items())},
                    "verdict": self.describe(),
                    "provenance": {"criterion": "computed", "orders": orders, "field": self.field}},
                "blocks": blocks, "note": self.note}


def _ext_job(args):
    M, Nn, orders, keep = args
    return ext_dim(M, Nn, 1, orders, keep_spaces=keep)


def rigidity_report(sys: FactorSystem, flag: Flag, orders: Sequence[int] = DEFAULT_ORDERS,
                    jobs: int = 1) -> RigidityReport:
    """Ext^1(T^F, T^F) as a sum over summand pairs, with an interpretation."""
    from .homology import _parallel_map

    fm = build_flag_module(sys, flag)
    orders = list(orders)
    consecutive = all(b == a + 1 for a, b in zip(orders, orders[1:]))
    keep = not sys.isolated and consecutive
    k = len(fm.summands)
    pairs = [(i, j) for i in range(1, k) for j in range(1, k)]
    results = _parallel_map(_ext_job, [(fm.summands[i], fm.summands[j], orders, keep)
                                       for i, j in pairs], jobs)
    blocks = dict(zip(pairs, results))
    total = {N: sum(r.dims[N] for r in results) for N in orders}
    verdict, value = classify_ladder([total[N] for N in orders])
    fl: dict[tuple[int, int], int | str] = {}
    if keep:
        for key, r in blocks.items():
            if r.verdict != "Stabilized" or r.value:
                fl[key] = fl_torsion_dim(r)
            r.spaces = {}
    if verdict == "Stabilized" and value == 0:
        note = "rigid, hence modifying"
        if sys.isolated and flag.maximal:
            note += "; MM expected for maximal flags over an isolated base"
    elif fl and all(v == 0 for v in fl.values()):
        note = "Ext^1 not finite length but fl_torsion 0 (experimental): consistent with modifying"
    elif any(v == INCONCLUSIVE for v in fl.values()):
        note = "fl_torsion experimental estimate inconclusive"
    else:
        note = "not rigid at the computed orders"
    return RigidityReport(flag, blocks, total, verdict, value, fl, note, fm.labels,
                          str(sys.field))
