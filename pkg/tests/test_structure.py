import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st
from sympy.utilities.iterables import partitions

from conftest import exact_height, jordan_matrix, random_blocks, sizes_by_eigenvalue, sympy_structure, triangular_similar
from gkschur.errors import InvalidInputError
from gkschur.lab import gk_figure_matrix
from gkschur.structure import (
    GKVector,
    JordanStructure,
    cluster_eigenvalues,
    dual_partition,
    gk_numbers,
    jordan_structure,
    same_gk,
    same_jordan_structure,
    structure_from_blocks,
    truncate_structure,
)


def test_structure_validation():
    with pytest.raises(InvalidInputError):
        JordanStructure(((0j, (1, 2)),), 3)
    with pytest.raises(InvalidInputError):
        JordanStructure(((0j, (2, 1)),), 4)


def test_json_round_trip():
    omega = structure_from_blocks([(1.5, 2), (1.5, 1), (-2j, 3)])
    assert JordanStructure.from_json(omega.to_json()) == omega


def test_dual_examples():
    assert dual_partition([5, 3, 3, 1], 12) == (4, 3, 3, 1, 1) + (0,) * 7
    assert dual_partition([1, 1, 1]) == (3, 0, 0)


@pytest.mark.parametrize("n", range(1, 13))
def test_dual_is_an_involution(n):
    for p in partitions(n):
        m = sorted((k for k, c in p.items() for _ in range(c)), reverse=True)
        assert list(dual_partition(dual_partition(m, n), n))[: len(m)] == m


def test_cluster_examples():
    assert cluster_eigenvalues([0, 0, 0], 1e-6) == [(0, 3)]
    eps = 1e-4
    assert len(cluster_eigenvalues([np.sqrt(eps), -np.sqrt(eps)], np.sqrt(eps))) == 2
    got = cluster_eigenvalues([0, eps, -eps, 0, 0, 0, eps], 0.0)
    assert sorted(m for _, m in got) == [1, 2, 4]


def test_structure_examples():
    assert jordan_structure(np.eye(3)).entries == ((1 + 0j, (1, 1, 1)),)
    assert jordan_structure(jordan_matrix([(0, 4), (0, 3)])).entries == ((0j, (4, 3)),)
    fig = sizes_by_eigenvalue(jordan_structure(gk_figure_matrix()))
    assert fig == {1: (2, 2, 2, 1), 3: (2,), 5: (1, 1, 1)}


def test_gk_examples():
    g = gk_numbers(jordan_structure(gk_figure_matrix()))
    assert g.m == (5, 3, 3, 1) + (0,) * 8
    assert g.k == (4, 3, 3, 1, 1) + (0,) * 7
    g = gk_numbers(jordan_structure(jordan_matrix([(2.0, 5)])))
    assert g.m == (5, 0, 0, 0, 0) and g.k == (1, 1, 1, 1, 1)
    g = gk_numbers(jordan_structure(np.eye(4)))
    assert g.m == (1, 1, 1, 1) and g.k == (4, 0, 0, 0)


def test_same_structure_examples():
    T0 = np.array([[0, 1, 0], [0, 0, 0], [0, 0, 0]], dtype=complex)
    B = T0.copy()
    B[2, 1] = 1e-3
    o = jordan_structure(T0)
    assert same_jordan_structure(o, o, [0])
    assert same_jordan_structure(o, jordan_structure(B))
    eps = 1e-6
    assert not same_jordan_structure(
        jordan_structure(jordan_matrix([(0, 2)])), jordan_structure(np.diag([np.sqrt(eps), -np.sqrt(eps)]))
    )
    with pytest.raises(InvalidInputError):
        same_jordan_structure(o, o, [1])


def test_same_gk_examples():
    from gkschur.lab import gk_split_pair

    T0, B = gk_split_pair(1e-4)
    assert same_gk(gk_numbers(jordan_structure(T0)), gk_numbers(jordan_structure(B)))
    assert not same_gk(gk_numbers(jordan_structure(jordan_matrix([(0, 2)]))), gk_numbers(jordan_structure(np.zeros((2, 2)))))
    with pytest.raises(InvalidInputError):
        same_gk(GKVector((1,), (1,)), GKVector((2, 0), (1, 1)))


def test_truncate_examples():
    assert truncate_structure(structure_from_blocks([(0, 2), (0, 1)]), 0, 0).entries == ((0j, (1, 1)),)
    assert truncate_structure(structure_from_blocks([(0, 4), (0, 3)]), 0, 0).entries == ((0j, (3, 3)),)
    lam = 2.0
    got = truncate_structure(structure_from_blocks([(lam, 3)] * 3), 0, 0)
    assert got.entries == ((lam + 0j, (3, 3, 2)),)
    with pytest.raises(InvalidInputError):
        truncate_structure(structure_from_blocks([(0, 1)]), 0, 3)


def test_truncating_a_single_block_removes_the_eigenvalue():
    got = truncate_structure(structure_from_blocks([(0, 1), (1, 2)]), 0, 0)
    assert got.entries == ((1 + 0j, (2,)),) and got.ambient_dim == 2


def test_matches_block_list_oracle(rng):
    # 200 random structures, triangular and permutation-scrambled forms
    for trial in range(200):
        n = int(rng.integers(1, 11))
        blocks = random_blocks(rng, n)
        want = sizes_by_eigenvalue(structure_from_blocks(blocks))
        T = triangular_similar(rng, blocks, integer=True)
        assert sizes_by_eigenvalue(jordan_structure(T)) == want, (trial, blocks)
        p = rng.permutation(n)
        A = jordan_matrix(blocks)[np.ix_(p, p)]
        assert sizes_by_eigenvalue(jordan_structure(A)) == want, (trial, blocks)


def test_matches_sympy_jordan_form(rng):
    for _ in range(25):
        n = int(rng.integers(2, 6))
        blocks = random_blocks(rng, n)
        L = np.tril(rng.integers(-1, 2, size=(n, n)), -1) + np.eye(n, dtype=int)
        U = np.triu(rng.integers(-1, 2, size=(n, n)), 1) + np.eye(n, dtype=int)
        P = L @ U
        Pinv = np.array(sympy.Matrix(P).inv(), dtype=float)
        A = np.round(P @ jordan_matrix(blocks).real @ Pinv)
        assert sizes_by_eigenvalue(jordan_structure(A)) == sympy_structure(A.astype(int))


def test_similarity_invariance(rng):
    for _ in range(40):
        n = int(rng.integers(2, 8))
        blocks = random_blocks(rng, n)
        A = jordan_matrix(blocks)
        while True:
            P = np.eye(n) + 0.3 * rng.standard_normal((n, n))
            if np.linalg.cond(P) <= 10:
                break
        B = P @ A @ np.linalg.inv(P)
        assert sizes_by_eigenvalue(jordan_structure(B)) == sizes_by_eigenvalue(jordan_structure(A))


def test_truncation_consistency(rng):
    for _ in range(60):
        n = int(rng.integers(2, 8))
        blocks = random_blocks(rng, n)
        T = triangular_similar(rng, blocks, integer=True)
        omega = jordan_structure(T)
        h = exact_height(T.real.astype(int))
        t = omega.index_of(T[0, 0])
        predicted = truncate_structure(omega, t, omega.sizes(t).index(h))
        assert sizes_by_eigenvalue(jordan_structure(T[1:, 1:])) == sizes_by_eigenvalue(predicted)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 3), st.integers(1, 4)), min_size=1, max_size=5))
def test_gk_numbers_are_conjugate(blocks):
    omega = structure_from_blocks(blocks)
    g = gk_numbers(omega)
    assert sum(g.m) == omega.ambient_dim
    assert g.k[0] == max(len(s) for _, s in omega.entries)
    assert all(a >= b for a, b in zip(g.m, g.m[1:]))


def test_warning_when_rank_is_borderline():
    # coupling 3e-8 next to a unit eigenvalue sits within a decade of the 1e-8 cutoff
    A = np.diag([1.0, 0.0, 0.0]).astype(complex)
    A[1, 2] = 3e-8
    omega = jordan_structure(A)
    assert omega.warnings
