import itertools

import pytest
from hypothesis import given
from hypothesis import strategies as st

from canforge.arith import PLANE, Poly, gaussian_field, parse_poly
from canforge.can import (
    Flag,
    blowup_charts,
    build_flag_module,
    classify_base,
    classify_contractions,
    ct_for_flag,
    cycle_annotations,
    enumerate_flags,
    flag_of_permutation,
    gabriel_quiver,
    keydb_types,
    rigidity_report,
    singular_points,
)
from canforge.catalog import names, system
from canforge.mf import FactorSystem, verify_mf

IDENTITY4 = flag_of_permutation([1, 2, 3, 4])


def xy(text):
    return parse_poly(text, PLANE)


def brute_force_chains(n):
    """Every strictly increasing chain of proper nonempty subsets, by filtering all sequences."""
    full = set(range(1, n + 1))
    proper = [frozenset(c) for k in range(1, n) for c in itertools.combinations(sorted(full), k)]
    out = set()
    for m in range(n):
        for seq in itertools.permutations(proper, m):
            if all(a < b for a, b in zip(seq, seq[1:])):
                out.add(seq)
    return out


# -- flags ------------------------------------------------------------------


@pytest.mark.parametrize("n, maximal, total", [(1, 1, 1), (2, 2, 3), (3, 6, 13), (4, 24, 75)])
def test_flag_counts(n, maximal, total):
    assert len(enumerate_flags(n)) == total
    assert len(enumerate_flags(n, maximal_only=True)) == maximal


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_flags_match_brute_force(n):
    assert {F.chain for F in enumerate_flags(n)} == brute_force_chains(n)


def test_flag_order_is_length_then_lex():
    flags = enumerate_flags(3)
    assert [F.to_json() for F in flags[:5]] == [[], [[1]], [[1, 2]], [[1, 3]], [[2]]]
    assert flags == sorted(flags, key=Flag.key)


@given(st.permutations(range(1, 6)))
def test_permutation_flags_are_maximal(omega):
    F = flag_of_permutation(omega)
    assert F.maximal and F.m == 4
    assert [min(b - a) for a, b in zip((frozenset(),) + F.chain, F.chain)] == list(omega[:4])


def test_permutations_biject_onto_maximal_flags():
    from_perms = {flag_of_permutation(w) for w in itertools.permutations(range(1, 5))}
    assert from_perms == set(enumerate_flags(4, maximal_only=True))


@pytest.mark.parametrize("chain", [[{1}, {1}], [{2}, {1, 3}], [{1, 2, 3}], [set()], [{4}]])
def test_bad_flags_rejected(chain):
    with pytest.raises(ValueError):
        Flag(3, tuple(frozenset(c) for c in chain))


@pytest.mark.parametrize("omega", [[1, 1, 2], [0, 1, 2], [2, 3]])
def test_bad_permutations_rejected(omega):
    with pytest.raises(ValueError):
        flag_of_permutation(omega)


def test_flag_size_limits():
    with pytest.raises(ValueError):
        enumerate_flags(0)
    with pytest.raises(ValueError):
        enumerate_flags(9)


# -- flag modules -----------------------------------------------------------


def test_flag_module_summands():
    s = system("three_lines")
    fm = build_flag_module(s, flag_of_permutation([2, 1, 3]))
    assert fm.labels == ("R", "T_{I1}", "T_{I2}")
    assert [mf.label for mf in fm.summands] == ["R", "T_{2}", "T_{1,2}"]
    assert fm.to_json()["ideals"] == ["R", "(u, y)", "(u, x*y)"]
    assert all(verify_mf(mf) for mf in fm.summands)


def test_flag_module_size_mismatch():
    with pytest.raises(ValueError):
        build_flag_module(system("conifold"), flag_of_permutation([1, 2, 3]))


# -- classification ---------------------------------------------------------


@pytest.mark.parametrize(
    "name, smooth, isolated, qf, ct",
    [("smooth", True, True, True, True), ("cusp", False, True, True, False),
     ("conifold", False, True, False, True), ("double_line", False, False, False, True),
     ("lines_cusp", False, True, False, False), ("fixture", False, False, False, True)],
)
def test_classify_base(name, smooth, isolated, qf, ct):
    rep = classify_base(system(name))
    assert (rep.smooth, rep.isolated, rep.q_factorial, rep.ct) == (smooth, isolated, qf, ct)
    assert set(rep.provenance) == {"smooth", "isolated", "q_factorial", "ct", "field"}


def test_terminal_notes():
    assert "terminal" in classify_base(system("conifold")).terminal_note
    assert "not terminal" in classify_base(system("double_line")).terminal_note


def test_factorial_over_q_split_over_gaussians():
    f = "x^2+x^3+y^2"
    over_q = classify_base(FactorSystem.parse([f]), refine=True)
    assert over_q.q_factorial and "Q" in over_q.field_caveat
    assert over_q.refinement["factor_count"] == 1
    K = gaussian_field()
    over_i = classify_base(FactorSystem.parse([f], K), refine=True, order=8)
    assert over_i.q_factorial  # verdict for the stated list, caveated
    assert over_i.refinement["factor_count"] == 2
    assert over_i.refinement["factor_orders"] == [1, 1]
    assert over_i.refinement["ct"] and not over_i.refinement["q_factorial"]


# -- charts -----------------------------------------------------------------


def test_fixture_chart_tower():
    s = system("fixture")
    tower = blowup_charts(s, IDENTITY4)
    gaps = [[c.gap_factors for c in lvl] for lvl in tower.levels]
    assert gaps == [[(1, 2, 3, 4)], [(1,), (2, 3, 4)], [(1,), (2,), (3, 4)],
                    [(1,), (2,), (3,), (4,)]]
    assert [c.rhs for c in tower.levels[1]] == [xy("x"), xy("y^2*(x+y)")]
    assert [c.rhs for c in tower.levels[2]] == [xy("x"), xy("y"), xy("y*(x+y)")]
    assert [c.rhs for c in tower.levels[3]] == [xy("x"), xy("y"), xy("y"), xy("x+y")]


@pytest.mark.parametrize("name", ["three_lines", "lines_cusp", "fixture", "mixed_four"])
def test_chart_levels_and_products(name):
    s = system(name)
    for F in enumerate_flags(s.n):
        tower = blowup_charts(s, F)
        assert [len(lvl) for lvl in tower.levels] == list(range(1, F.m + 2))
        for lvl in tower.levels:
            prod = lvl[0].rhs * 0 + 1
            for ch in lvl:
                prod = prod * ch.rhs
                U, V = (Poly.var(ch.coordinates, c) for c in ch.coordinates[:2])
                assert ch.equation == U * V - ch.rhs.embed(ch.coordinates)
            assert prod == s.f


def test_chart_coordinates_glue_to_the_original_pair():
    tower = blowup_charts(system("three_lines"), flag_of_permutation([1, 2, 3]))
    assert [c.coordinates[:2] for c in tower.levels[2]] == [("u", "V1"), ("U1", "V2"), ("U2", "v")]
    assert tower.levels[0][0].text() == "u*v = " + str(system("three_lines").f)


def test_fixture_singular_points():
    pts = singular_points(system("fixture"), IDENTITY4)
    assert [len(p) for p in pts] == [1, 1, 1, 0]
    lvl1, lvl2 = pts[1][0], pts[2][0]
    assert lvl1.chart.index == 1 and lvl1.gap_factors == (2, 3, 4) and not lvl1.isolated
    assert lvl2.chart.index == 2 and lvl2.isolated and not lvl2.q_factorial


@pytest.mark.parametrize("omega", list(itertools.permutations([1, 2, 3])))
def test_ct_three_lines(omega):
    s, F = system("three_lines"), flag_of_permutation(omega)
    assert ct_for_flag(s, F) and singular_points(s, F)[-1] == []


@pytest.mark.parametrize("omega", list(itertools.permutations([1, 2, 3])))
def test_not_ct_lines_and_cusp(omega):
    s, F = system("lines_cusp"), flag_of_permutation(omega)
    assert not ct_for_flag(s, F)
    (pt,) = singular_points(s, F)[-1]
    assert pt.local_type == f"uv = {xy('x^2+y^3')}" == keydb_types(s)[0]


@pytest.mark.parametrize("name", names(4))
def test_top_level_matches_independent_factor_scan(name):
    s = system(name)
    for F in enumerate_flags(s.n, maximal_only=True):
        top = [p.local_type for p in singular_points(s, F)[-1]]
        assert sorted(top) == sorted(keydb_types(s))
        assert ct_for_flag(s, F) == classify_base(s).ct


def test_ct_needs_maximal_flag():
    with pytest.raises(ValueError):
        ct_for_flag(system("three_lines"), Flag(3, (frozenset({1}),)))


# -- contractions -----------------------------------------------------------


def test_fixture_contractions():
    kinds = [c.kind for c in classify_contractions(system("fixture"), IDENTITY4)]
    assert kinds == ["Flop", "Divisorial", "Flop"]


@pytest.mark.parametrize("name", names(4, isolated=True))
def test_isolated_bases_only_flop(name):
    s = system(name)
    for F in enumerate_flags(s.n):
        assert all(c.kind == "Flop" for c in classify_contractions(s, F))


def test_double_line_is_divisorial():
    (c,) = classify_contractions(system("double_line"), Flag(2, (frozenset({1}),)))
    assert c.kind == "Divisorial" and c.gap == (1,) and c.remainder == (2,)


# -- quivers ----------------------------------------------------------------


def test_conifold_gabriel_quiver():
    q = gabriel_quiver(system("conifold"), Flag(2, (frozenset({1}),)))
    assert (q.status, q.arrows, q.loops) == ("certified", [[0, 2], [2, 0]], [0, 0])


def test_empty_flag_quiver_is_the_loops_of_R():
    q = gabriel_quiver(system("smooth"), Flag(1, ()))
    assert q.loops == [3] and q.arrows == [[0]]
    q = gabriel_quiver(system("conifold"), Flag(2, ()))
    assert q.loops == [4]  # m/m^2 of K[[u,v,x,y]]/(uv - xy)


@pytest.mark.parametrize("omega", [(1, 2, 3), (3, 1, 2)])
def test_three_lines_quiver_is_a_symmetric_cycle(omega):
    q = gabriel_quiver(system("three_lines"), flag_of_permutation(omega))
    assert q.status == "certified"
    assert q.arrows == [list(r) for r in zip(*q.arrows)]
    assert q.n_arrows == 6 and q.loops == [0, 0, 0]


def test_fixture_quiver():
    q = gabriel_quiver(system("fixture"), IDENTITY4, jobs=2)
    assert q.status == "certified"
    cycle = [[0, 1, 0, 1], [1, 0, 1, 0], [0, 1, 0, 1], [1, 0, 1, 0]]
    assert q.arrows == cycle
    assert q.loops[2] == 1


def test_shared_tangent_gives_a_loop_at_R():
    # f_1 = x and f_4 = x + y^2 share a tangent, so (f_1, f_4) != m and R gains a loop
    s = FactorSystem.parse(["x", "y", "y", "x+y^2"])
    q = gabriel_quiver(s, IDENTITY4, jobs=2)
    assert q.loops == [1, 0, 1, 0]


def test_cycle_annotations_fixture():
    ann = cycle_annotations(system("fixture"), IDENTITY4)
    assert ann[(0, 1)] == ["x"] and ann[(1, 2)] == ["y"] and ann[(2, 3)] == ["y"]
    assert ann[(3, 0)] == [f"({xy('x+y')})/u"]
    assert ann[(0, 3)] == ["u"] and ann[(1, 0)] == ["inc"]


# -- rigidity ---------------------------------------------------------------


@pytest.mark.parametrize("name", ["conifold", "three_lines", "tangent_pair"])
def test_maximal_flags_rigid_over_isolated_bases(name):
    s = system(name)
    for F in enumerate_flags(s.n, maximal_only=True)[:3]:
        r = rigidity_report(s, F)
        assert r.describe() == "Stabilized(0)"
        assert r.note.startswith("rigid")


def test_double_line_rigidity_is_growing_with_zero_torsion():
    r = rigidity_report(system("double_line"), Flag(2, (frozenset({1}),)))
    assert r.describe() == "Growing(slope 1)"
    assert r.fl_torsion == {(1, 1): 0}
    assert "fl_torsion 0" in r.note


def test_rigidity_json_labels():
    js = rigidity_report(system("conifold"), Flag(2, (frozenset({1}),))).to_json()
    assert js["ext1_total"]["verdict"] == "Stabilized(0)"
    assert [(b["source"], b["target"]) for b in js["blocks"]] == [("T_{I1}", "T_{I1}")]
