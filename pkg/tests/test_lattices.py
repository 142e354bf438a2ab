import random

import pytest
import sympy
from hypothesis import assume, given
from hypothesis import strategies as st

from ggt import lattices as lat
from oracles import annihilator, divisors, int_matrices, is_saturation, rank, rational_solution, same_span

LM = lat.LatticeMap.of


def _mat(rows):
    return sympy.Matrix(rows)


# ----------------------------------------------------------- normal forms


def test_hnf_examples():
    assert lat.hnf([[1, 0], [0, 1]]) == [[1, 0], [0, 1]]
    assert lat.hnf([[2, 0], [0, 4]]) == [[2, 0], [0, 4]]


@given(int_matrices(3, 3))
def test_hnf_keeps_the_column_span(m):
    h, u = lat.hnf(m, with_transform=True)
    assert same_span(h, m)
    assert lat.matmul(m, u) == h
    assert abs(_mat(u).det()) == 1


@given(int_matrices(3, 4))
def test_hnf_shape(m):
    h = lat.hnf(m)
    pivots = []
    for j in range(4):
        col = [h[i][j] for i in range(3)]
        if not any(col):
            pivots.append(None)
            continue
        i = next(i for i in range(3) if col[i])
        assert col[i] > 0
        pivots.append(i)
    nonzero = [p for p in pivots if p is not None]
    # zero columns last, pivot rows strictly increasing
    assert pivots[: len(nonzero)] == nonzero
    assert nonzero == sorted(set(nonzero))
    for j, i in enumerate(nonzero):
        for k in range(j):
            assert 0 <= h[i][k] < h[i][j]


def test_snf_examples():
    assert lat.snf([[2]])[1] == [[2]]
    assert lat.snf([[1, 0], [0, 1]])[1] == [[1, 0], [0, 1]]


@given(int_matrices(4, 3))
def test_snf_reassembles_exactly(m):
    u, d, v = lat.snf(m)
    assert lat.matmul(lat.matmul(u, m), v) == d
    assert abs(_mat(u).det()) == 1 and abs(_mat(v).det()) == 1
    diag = lat.diagonal(d)
    for i in range(4):
        for j in range(3):
            if i != j:
                assert d[i][j] == 0
    nz = [x for x in diag if x]
    assert all(x > 0 for x in nz)
    assert diag[: len(nz)] == nz
    assert all(b % a == 0 for a, b in zip(nz, nz[1:]))
    assert nz == divisors(m)


def test_snf_random_four_by_three():
    rng = random.Random(5)
    for _ in range(50):
        m = [[rng.randint(-9, 9) for _ in range(3)] for _ in range(4)]
        u, d, v = lat.snf(m)
        assert lat.matmul(lat.inverse_unimodular(u), lat.matmul(d, lat.inverse_unimodular(v))) == m


@given(int_matrices(3, 3))
def test_det_matches_sympy(m):
    assert lat.det(m) == _mat(m).det()


@given(int_matrices(3, 2), st.lists(st.integers(-5, 5), min_size=2, max_size=2))
def test_solve_and_kernel(a, x):
    b = [sum(a[i][j] * x[j] for j in range(2)) for i in range(3)]
    y = lat.solve(a, b)
    assert y is not None
    assert [sum(a[i][j] * y[j] for j in range(2)) for i in range(3)] == b
    k = lat.kernel(a)
    cols = list(zip(*k)) if k and k[0] else []
    assert len(cols) == 2 - rank(a)
    for col in cols:
        assert all(sum(a[i][j] * col[j] for j in range(2)) == 0 for i in range(3))


def test_solve_reports_no_integer_solution():
    assert lat.solve([[2]], [1]) is None
    assert lat.solve([[1], [1]], [1, 2]) is None


# ------------------------------------------------------------- saturation


def test_saturate_examples():
    assert lat.saturate(LM([[2], [0]])).columns() == [(1, 0)]
    assert lat.saturate(LM([[1], [0]])).columns() == [(1, 0)]
    sat = lat.saturate(LM([[2, 0], [2, 4]]))
    assert is_saturation([[2, 2], [0, 4]], [list(c) for c in sat.columns()], 2)
    assert same_span(sat.as_list(), [[1, 0], [0, 1]])


def test_saturate_rejects_non_injective():
    with pytest.raises(ValueError):
        lat.saturate(LM([[1, 2], [1, 2]]))


def injective_maps(n, k):
    return int_matrices(n, k).filter(lambda m: rank(m) == k)


@given(st.integers(1, 4).flatmap(lambda n: st.integers(1, n).flatmap(lambda k: injective_maps(n, k))))
def test_saturation_properties(m):
    sub = LM(m)
    sat = lat.saturate(sub)
    cols = [list(c) for c in sat.columns()]
    assert is_saturation([list(c) for c in sub.columns()], cols, sub.rows)
    assert lat.saturate(sat).columns() == sat.columns()
    assert lat.is_saturated(sat)
    # the input has finite index in its saturation
    coords = [sat.preimage(c) for c in sub.columns()]
    index = abs(_mat(coords).det()) if coords else 1
    assert index == abs(sympy.prod(divisors(m)))


@given(st.integers(1, 4).flatmap(lambda n: st.integers(1, n).flatmap(lambda k: injective_maps(n, k))))
def test_complete_basis_is_unimodular(m):
    sat = lat.saturate(LM(m))
    q = lat.complete_basis(sat)
    assert abs(lat.det(q)) == 1
    assert [tuple(r[: sat.cols]) for r in q] == [tuple(r) for r in sat.matrix]


# --------------------------------------------------------------- pushouts


def check_pushout(i1, i2, m, j1, j2):
    """Universal property against a rational-span oracle."""
    a1, a2, c = i1.rows, i2.rows, i1.cols
    n = a1 + a2
    # commuting square
    assert j1.compose(i1).matrix == j2.compose(i2).matrix
    # injective legs
    assert rank(j1.as_list(), a1) == a1 and rank(j2.as_list(), a2) == a2
    # rank of the rational pushout
    assert m.rank == n - c
    proj = [list(r1) + list(r2) for r1, r2 in zip(j1.matrix, j2.matrix)]
    # M is generated by the two images
    assert divisors(proj, n) == [1] * m.rank
    # the kernel of [j1 j2] is exactly the rational span of the relations
    rels = [list(i1.matrix[i][j] for i in range(a1)) + [-i2.matrix[i][j] for i in range(a2)] for j in range(c)]
    ann = annihilator(rels, n)
    assert rank(ann, n) == m.rank
    # any cocone killing the relations factors uniquely and integrally
    for t in ann:
        h = rational_solution(_mat(proj).T.tolist(), t)
        assert h is not None and all(x.denominator == 1 for x in h)


def test_pushout_index_two_example():
    i1 = LM([[2]])
    m, j1, j2 = lat.pushout_free_abelian(i1, i1)
    assert m.rank == 1
    assert abs(j1.matrix[0][0]) == 1 and j1.matrix == j2.matrix
    assert abs(j1.compose(i1).matrix[0][0]) == 2
    check_pushout(i1, i1, m, j1, j2)


def test_pushout_of_identities():
    i = lat.LatticeMap.identity(2)
    m, j1, j2 = lat.pushout_free_abelian(i, i)
    assert m.rank == 2
    assert j1.matrix == j2.matrix and abs(lat.det(j1.as_list())) == 1
    check_pushout(i, i, m, j1, j2)


def test_pushout_rational_embedding_example():
    i1, i2 = LM([[2], [0]]), LM([[3]])
    m, j1, j2 = lat.pushout_free_abelian(i1, i2)
    assert m.rank == 2
    # embed both in Q^2 along C: A1 = Z^2 as is, A2 = Z sending 1 to (2/3, 0).
    # Their Z-span has basis (1/3, 0), (0, 1), so A1 sits in it with index 3
    # and A2 = 2 (1/3, 0) with index 2 in its saturation.
    assert abs(lat.det(j1.as_list())) == 3
    assert divisors(j2.as_list()) == [2]
    proj = [list(r1) + list(r2) for r1, r2 in zip(j1.matrix, j2.matrix)]
    assert divisors(proj) == [1, 1]
    check_pushout(i1, i2, m, j1, j2)


def test_pushout_rejects_degenerate_and_non_injective():
    with pytest.raises(lat.DegenerateError):
        lat.pushout_free_abelian(LM([[]], 1, 0), LM([[]], 1, 0))
    with pytest.raises(ValueError):
        lat.pushout_free_abelian(LM([[1, 1]]), LM([[1, 0], [0, 1]]))


def pushout_inputs():
    return st.integers(1, 3).flatmap(
        lambda c: st.tuples(
            st.integers(c, 4).flatmap(lambda a: injective_maps(a, c)),
            st.integers(c, 4).flatmap(lambda a: injective_maps(a, c)),
        )
    )


@given(pushout_inputs(), st.integers(0, 2), st.randoms(use_true_random=False))
def test_pushout_universal_property_with_injective_cocones(mats, extra, rnd):
    i1, i2 = LM(mats[0]), LM(mats[1])
    m, j1, j2 = lat.pushout_free_abelian(i1, i2)
    check_pushout(i1, i2, m, j1, j2)
    # a random injective cocone into Z^(m + extra): rows killing the relations
    a1, a2, c = i1.rows, i2.rows, i1.cols
    rels = [list(i1.matrix[i][j] for i in range(a1)) + [-i2.matrix[i][j] for i in range(a2)] for j in range(c)]
    ann = annihilator(rels, a1 + a2)
    mix = [[rnd.randint(-3, 3) for _ in ann] for _ in range(len(ann) + extra)]
    assume(rank(mix) == len(ann))
    cocone = (_mat(mix) * _mat(ann)).tolist()
    proj = [list(r1) + list(r2) for r1, r2 in zip(j1.matrix, j2.matrix)]
    # induced map h with h [j1 j2] = cocone: exists integrally, unique, injective
    rows = []
    for t in cocone:
        h = rational_solution(_mat(proj).T.tolist(), t)
        assert h is not None and all(x.denominator == 1 for x in h)
        rows.append([int(x) for x in h])
    assert rank(proj) == m.rank  # [j1 j2] is onto M rationally: uniqueness
    assert rank(rows, m.rank) == m.rank  # injective


# ------------------------------------------------------- abelian diagrams


def test_abelianize_two_planes_glued_along_a_line():
    z2, z1 = lat.Lattice(2), lat.Lattice(1)
    first = LM([[1], [0]])
    d = lat.AbelianDiagram((z2, z2, z1), ((2, 0, first), (2, 1, first)))
    res, legs = lat.abelianize_diagram(d, 0)
    assert res.rank == 3
    assert len(legs) == 4


def test_abelianize_single_vertex():
    d = lat.AbelianDiagram((lat.Lattice(3),), ())
    res, legs = lat.abelianize_diagram(d, 0)
    assert res.rank == 3
    assert same_span(legs[0].as_list(), lat.identity(3))
    assert abs(lat.det(legs[0].as_list())) == 1


def test_abelianize_double_and_single_gluing():
    z = lat.Lattice(1)
    d = lat.AbelianDiagram((z, z, z), ((2, 0, LM([[2]])), (2, 1, LM([[1]]))))
    res, legs = lat.abelianize_diagram(d, 0)
    # relation matrix with rows (x, y, c): c - 2x, c - y
    relations = [[-2, 0, 1], [0, -1, 1]]
    assert divisors(relations) == [1, 1]
    assert res.rank == 3 - 2
    m, j1, j2 = lat.pushout_free_abelian(LM([[2]]), LM([[1]]))
    assert res.rank == m.rank


def test_abelianize_reports_torsion():
    z = lat.Lattice(1)
    d = lat.AbelianDiagram((z, z, z), ((2, 0, LM([[2]])), (2, 1, LM([[2]]))))
    with pytest.raises(lat.TorsionError) as exc:
        lat.abelianize_diagram(d, 0)
    assert list(exc.value.divisors) == [2]


def test_abelianize_adds_the_free_part():
    d = lat.AbelianDiagram((lat.Lattice(1),), ())
    res, legs = lat.abelianize_diagram(d, 2)
    assert res.rank == 3 and legs[-1].cols == 2


@given(pushout_inputs())
def test_abelianize_matches_pushout_on_a_one_edge_tree(mats):
    i1, i2 = LM(mats[0]), LM(mats[1])
    nodes = (lat.Lattice(i1.rows), lat.Lattice(i2.rows), lat.Lattice(i1.cols))
    d = lat.AbelianDiagram(nodes, ((2, 0, i1), (2, 1, i2)))
    m, j1, j2 = lat.pushout_free_abelian(i1, i2)
    try:
        res, legs = lat.abelianize_diagram(d, 0)
    except lat.TorsionError as exc:
        rels = [list(i1.matrix[i][j] for i in range(i1.rows)) + [-i2.matrix[i][j] for i in range(i2.rows)]
                for j in range(i1.cols)]
        assert [x for x in divisors(rels) if x > 1] == list(exc.divisors)
        return
    assert res.rank == m.rank
    both = [list(a) + list(b) for a, b in zip(legs[0].matrix, legs[1].matrix)]
    proj = [list(a) + list(b) for a, b in zip(j1.matrix, j2.matrix)]
    assert divisors(both) == divisors(proj)


def test_diagram_shape_is_checked():
    with pytest.raises(ValueError):
        lat.AbelianDiagram((lat.Lattice(1), lat.Lattice(2)), ((0, 1, LM([[1]])),))
