import itertools
import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from canforge.arith import AMBIENT, Poly
from canforge.catalog import system
from canforge.homology import (
    _image_ranks,
    _image_vectors,
    INCONCLUSIVE,
    HomologyError,
    NonSplitError,
    TruncatedRing,
    classify_ladder,
    end_algebra,
    ext_dim,
    fl_torsion_dim,
    hom_complex,
    hom_space,
    radical_quiver,
    resolve_margin,
    stable_hom_dim,
)
from canforge.linalg import rank
from canforge.mf import direct_sum, flag_ideal_mf, free_module, knorrer_reduce, shift


@pytest.fixture(scope="module")
def conifold():
    s = system("conifold")
    return s, free_module(s.hypersurface()), flag_ideal_mf(s, {1})


# -- truncated ring ---------------------------------------------------------


@pytest.mark.parametrize("N", [0, 1, 2, 3, 4])
def test_normal_forms_are_uv_free_monomials(N):
    tr = TruncatedRing(system("conifold").hypersurface(), N)
    expected = {e for e in itertools.product(range(N + 1), repeat=4)
                if sum(e) <= N and min(e[0], e[1]) == 0}
    assert set(tr.basis) == expected


@pytest.mark.parametrize("N", [2, 3, 4])
def test_order_one_ring_is_regular(N):
    # uv - x: R = K[[u,v,y]], so R/m^(N+1) has the size of a 3-variable truncation
    tr = TruncatedRing(system("smooth").hypersurface(), N)
    assert tr.dim == math.comb(N + 3, 3)


def test_rewrite_uv_to_f():
    s = system("three_lines")
    tr = TruncatedRing(s.hypersurface(), 4)
    u, v = Poly.var(AMBIENT, "u"), Poly.var(AMBIENT, "v")
    assert tr.mul(u, v) == s.f.embed(AMBIENT).truncate(4)


def test_multiplication_commutative_exhaustive():
    tr = TruncatedRing(system("conifold").hypersurface(), 3)
    mons = [Poly(AMBIENT, {e: 1}) for e in tr.basis]
    for a, b in itertools.combinations(mons, 2):
        assert tr.mul(a, b) == tr.mul(b, a)


@settings(max_examples=30)
@given(st.randoms(use_true_random=False))
def test_multiplication_associative(rnd):
    tr = TruncatedRing(system("lines_cusp").hypersurface(), 5)
    mons = [Poly(AMBIENT, {e: 1}) for e in tr.basis]
    a, b, c = (rnd.choice(mons) for _ in range(3))
    assert tr.mul(tr.mul(a, b), c) == tr.mul(a, tr.mul(b, c))


# -- Hom --------------------------------------------------------------------


def test_hom_from_free_is_the_module(conifold):
    s, R, T1 = conifold
    tr = TruncatedRing(s.hypersurface(), 4)
    assert hom_space(R, T1, tr).dim == tr.module_dim(T1)


@pytest.mark.parametrize("name", ["three_lines", "tangent_pair", "double_line"])
def test_hom_from_free_every_flag_ideal(name):
    s = system(name)
    tr = TruncatedRing(s.hypersurface(), 3)
    R = free_module(s.hypersurface())
    for I in [{1}, set(range(1, s.n))]:
        M = flag_ideal_mf(s, I)
        assert hom_space(R, M, tr).dim == tr.module_dim(M)


def test_identity_endomorphism(conifold):
    s, R, T1 = conifold
    hs = hom_space(T1, T1, 4)
    assert hs.dim >= 1
    assert hs.space.coord_vec(hs.identity())


def test_hom_to_free_matches_dual_ideal(conifold):
    s, R, T1 = conifold
    tr = TruncatedRing(s.hypersurface(), 4)
    # Hom(T_1, R) is (x, v), isomorphic to (u, y) = T_2 under u<->v, x<->y
    assert hom_space(T1, R, tr).dim == tr.module_dim(flag_ideal_mf(s, {2}))
    q = radical_quiver(end_algebra([R, T1], tr))
    assert q.generators[1][0] == 2  # inclusion and v/x


def test_hom_space_mismatched_hypersurfaces(conifold):
    _, _, T1 = conifold
    other = flag_ideal_mf(system("three_lines"), {1})
    with pytest.raises(HomologyError):
        hom_space(T1, other, 3)
    with pytest.raises(HomologyError):
        ext_dim(T1, other, 1)


# -- Ext --------------------------------------------------------------------


@pytest.mark.parametrize("i, verdict", [(1, ("Stabilized", 0)), (2, ("Stabilized", 1))])
def test_conifold_ext(conifold, i, verdict):
    _, _, T1 = conifold
    r = ext_dim(T1, T1, i, (4, 5, 6))
    assert (r.verdict, r.value) == verdict


def test_double_line_ext_grows():
    s = system("double_line")
    T1 = flag_ideal_mf(s, {1})
    r = ext_dim(T1, T1, 1, (4, 5, 6, 7))
    assert r.describe() == "Growing(slope 1)"
    assert [r.dims[N] for N in (4, 5, 6, 7)] == [5, 6, 7, 8]  # K[[y]] / y^(N+1)


def test_ext_json_shape(conifold):
    _, _, T1 = conifold
    js = ext_dim(T1, T1, 2).to_json()
    assert js["verdict"] == "Stabilized(1)" and js["dims"] == {"4": 1, "5": 1, "6": 1}
    assert set(js) == {"i", "dims", "verdict", "field", "hypersurface"}


def test_ext_with_free_argument_vanishes(conifold):
    _, R, T1 = conifold
    assert ext_dim(R, T1, 1).describe() == "Stabilized(0)"


@pytest.mark.parametrize("orders", [(4, 5), (5, 4, 6), ()])
def test_ext_order_ladder_validation(conifold, orders):
    _, _, T1 = conifold
    with pytest.raises(ValueError):
        ext_dim(T1, T1, 1, orders)


@pytest.mark.parametrize(
    "dims, verdict",
    [([3, 3, 3], ("Stabilized", 3)), ([1, 2, 3], ("Growing", 1)), ([2, 4, 6], ("Growing", 2)),
     ([1, 2, 4], ("Inconclusive", None)), ([3, 2, 2], ("Inconclusive", None)),
     ([5, 1, 1, 1], ("Stabilized", 1))],
)
def test_classify_ladder(dims, verdict):
    assert classify_ladder(dims) == verdict


@pytest.mark.parametrize("name, I, J", [("three_lines", {1}, {1, 2}), ("conifold", {1}, {1}),
                                        ("tangent_pair", {2}, {1})])
@pytest.mark.parametrize("i", [1, 2])
def test_two_periodicity(name, I, J, i):
    s = system(name)
    M, N = flag_ideal_mf(s, I), flag_ideal_mf(s, J)
    assert ext_dim(M, N, i, (3, 4, 5)).dims == ext_dim(shift(M), N, i + 1, (3, 4, 5)).dims


@pytest.mark.parametrize("name, I, J", [("three_lines", {1}, {2}), ("lines_cusp", {3}, {3}),
                                        ("double_line", {1}, {1}), ("tangent_triple", {2}, {2})])
def test_default_margin_matches_larger_margin(name, I, J):
    s = system(name)
    M, N = flag_ideal_mf(s, I), flag_ideal_mf(s, J)
    for i in (1, 2):
        m = resolve_margin(hom_complex(M, N, i % 2), None)
        assert ext_dim(M, N, i, (4, 5, 6, 7)).dims == ext_dim(M, N, i, (4, 5, 6, 7), m + 2).dims


def test_margin_two_undercounts_on_a_cusp():
    # f_3 = x^2 + y^3 and xy are coprime, so odd Ext vanishes; margin 2 keeps a fake cycle
    T3 = flag_ideal_mf(system("lines_cusp"), {3})
    assert ext_dim(T3, T3, 1, (4, 5, 6, 7), lift_margin=2).dims[7] == 1
    assert ext_dim(T3, T3, 1, (4, 5, 6, 7)).dims[7] == 0


def test_margin_rule():
    s = system("tangent_triple")
    assert resolve_margin(hom_complex(flag_ideal_mf(s, {2}), flag_ideal_mf(s, {2}), 1), None) == 4
    conifold = system("conifold")
    T1 = flag_ideal_mf(conifold, {1})
    assert resolve_margin(hom_complex(T1, T1, 1), None) == 2
    assert resolve_margin(hom_complex(T1, T1, 1), 5) == 5


@pytest.mark.parametrize("name", ["conifold", "tangent_pair", "double_line", "line_cusp"])
def test_knorrer_agreement_two_factor_systems(name):
    s = system(name)
    mods = [flag_ideal_mf(s, {1}), flag_ideal_mf(s, {2})]
    for M, N in itertools.product(mods, repeat=2):
        for i in (1, 2):
            big = ext_dim(M, N, i)
            small = ext_dim(knorrer_reduce(M), knorrer_reduce(N), i)
            assert (big.verdict, big.value) == (small.verdict, small.value)


def test_stable_hom_is_ext_two(conifold):
    _, R, T1 = conifold
    assert stable_hom_dim(T1, T1, 5) == 1
    assert stable_hom_dim(R, T1, 5) == 0


# -- finite-length torsion --------------------------------------------------


def test_fl_torsion_growing_module_is_zero():
    s = system("double_line")
    T1 = flag_ideal_mf(s, {1})
    assert fl_torsion_dim(ext_dim(T1, T1, 1, (4, 5, 6), keep_spaces=True)) == 0


@pytest.mark.parametrize("i, expected", [(1, 0), (2, 1)])
def test_fl_torsion_stabilized_isolated(conifold, i, expected):
    _, _, T1 = conifold
    assert fl_torsion_dim(ext_dim(T1, T1, i, (4, 5, 6), keep_spaces=True)) == expected


def test_fl_torsion_needs_consecutive_orders(conifold):
    _, _, T1 = conifold
    with pytest.raises(ValueError):
        fl_torsion_dim(ext_dim(T1, T1, 1, (2, 4, 6), keep_spaces=True))


def test_fl_torsion_sentinel_is_a_string():
    assert isinstance(INCONCLUSIVE, str)


# -- endomorphism algebra and quiver ----------------------------------------


def test_end_of_free_is_the_ring(conifold):
    s, R, _ = conifold
    tr = TruncatedRing(s.hypersurface(), 4)
    assert end_algebra([R], tr).dim == tr.dim


def test_end_algebra_is_sum_of_blocks(conifold):
    _, R, T1 = conifold
    alg = end_algebra([R, T1], 4)
    blocks = [hom_space(a, b, 4).dim for a in (R, T1) for b in (R, T1)]
    assert alg.dim == sum(blocks)


def test_end_algebra_identity_and_associativity(conifold):
    _, R, T1 = conifold
    alg = end_algebra([R, T1], 3)
    basis = alg.basis()
    one = alg.identity()
    rnd = random.Random(7)
    for _ in range(50):
        a, b, c = (alg.element(*rnd.choice(basis)) for _ in range(3))
        assert alg.multiply(alg.multiply(a, b), c) == alg.multiply(a, alg.multiply(b, c))
    for key, t in basis[::7]:
        e = alg.element(key, t)
        assert alg.multiply(one, e) == e == alg.multiply(e, one)


def test_conifold_quiver(conifold):
    _, R, T1 = conifold
    for N in (4, 5):
        assert radical_quiver(end_algebra([R, T1], N)).arrows == [[0, 2], [2, 0]]


def test_smooth_point_has_three_loops():
    s = system("smooth")
    assert radical_quiver(end_algebra([free_module(s.hypersurface())], 4)).arrows == [[3]]


def test_non_basic_vertex_is_reported():
    s = system("three_lines")
    lump = direct_sum(flag_ideal_mf(s, {1}), flag_ideal_mf(s, {1, 2}))
    with pytest.raises(NonSplitError):
        radical_quiver(end_algebra([free_module(s.hypersurface()), lump], 3))


def test_parallel_blocks_are_identical(conifold):
    _, R, T1 = conifold
    serial = end_algebra([R, T1], 3).block_dims()
    assert end_algebra([R, T1], 3, jobs=2).block_dims() == serial


@pytest.mark.parametrize("name, I, J", [("lines_cusp", {1}, {3}), ("tangent_triple", {2}, {1, 3})])
@pytest.mark.parametrize("degree", [0, 1])
def test_staged_image_ranks_match_direct_ranks(name, I, J, degree):
    s = system(name)
    cx = hom_complex(flag_ideal_mf(s, I), flag_ideal_mf(s, J), degree)
    staged = _image_ranks(cx.A, cx.nvars, (3, 4, 5), cx.field)
    assert staged == {N: rank(_image_vectors(cx.A, cx.nvars, N), cx.field) for N in (3, 4, 5)}
