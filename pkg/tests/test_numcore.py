import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gkschur.errors import InvalidInputError, NumericalFailureError, RankDeficiencyError
from gkschur.numcore import (
    SchurPair,
    SubspaceBasis,
    Tolerance,
    kernel_basis,
    numerical_rank,
    qr_decompose,
    random_unitary,
    rank_decision,
    reorder_schur,
    schur_decompose,
    spectral_norm,
    unitary_completion,
)


def test_tolerance_validation():
    with pytest.raises(InvalidInputError):
        Tolerance(rank_rel=0.0)
    with pytest.raises(InvalidInputError):
        Tolerance(residual_rel=2.0)
    assert Tolerance().with_radius(0.1).cluster_radius == 0.1


def test_spectral_norm_examples():
    assert spectral_norm(np.zeros((2, 2))) == 0.0
    assert spectral_norm(np.eye(4)) == pytest.approx(1.0)
    eps = 1e-5
    A = np.array([[0, eps], [1, 0]])
    A0 = np.array([[0, 0], [1, 0]])
    assert spectral_norm(A - A0) == pytest.approx(eps, rel=1e-14)


def test_spectral_norm_rejects_nan():
    with pytest.raises(InvalidInputError):
        spectral_norm(np.array([[np.nan]]))


def test_norm_axioms_and_unitary_invariance(rng):
    for _ in range(50):
        A, B = (rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5)) for _ in range(2))
        c = complex(rng.standard_normal(), rng.standard_normal())
        assert spectral_norm(c * A) == pytest.approx(abs(c) * spectral_norm(A), rel=1e-12)
        assert spectral_norm(A + B) <= spectral_norm(A) + spectral_norm(B) + 1e-12
        U, V = random_unitary(rng, 5), random_unitary(rng, 5)
        assert spectral_norm(U @ A @ V) == pytest.approx(spectral_norm(A), rel=1e-10)


def test_numerical_rank_examples():
    assert numerical_rank(np.zeros((3, 3))) == 0
    assert numerical_rank(np.array([[0, 1], [0, 0]])) == 1
    assert numerical_rank(np.diag([1.0, 1e-30]), Tolerance(rank_rel=1e-12)) == 1


def test_rank_decision_flags_close_calls():
    _, amb = rank_decision(np.diag([1.0, 3e-8]))
    assert amb
    _, amb = rank_decision(np.diag([1.0, 1e-3]))
    assert not amb


def test_kernel_basis_examples():
    assert kernel_basis(np.zeros((3, 3))).dim == 3
    K = kernel_basis(np.array([[0, 1], [0, 0]]))
    assert K.dim == 1 and abs(abs(K.columns[0, 0]) - 1) < 1e-14
    K = kernel_basis(np.array([[0, 1, 0], [0, 0, 0], [0, 0, 0]]))
    P = K.columns @ K.columns.conj().T
    assert np.allclose(P, np.diag([1, 0, 1]), atol=1e-14)


def test_subspace_basis_checks_orthonormality():
    with pytest.raises(InvalidInputError):
        SubspaceBasis(np.array([[1.0, 1.0], [0.0, 1.0]]))
    B = SubspaceBasis.from_span(np.array([[1.0, 1.0], [0.0, 1.0], [0.0, 0.0]]))
    assert B.dim == 2
    assert B.complement().dim == 1
    assert SubspaceBasis.zero(4).dim == 0


def test_unitary_completion_examples():
    assert np.allclose(unitary_completion(np.array([1.0, 0, 0])), np.eye(3))
    eps = 1e-3
    c = 1 / np.sqrt(1 + eps**2)
    expected = np.array([[c, 0, -eps * c], [0, 1, 0], [eps * c, 0, c]])
    V = unitary_completion(np.array([1.0, 0, eps]))
    assert np.abs(V - expected).max() < 1e-15
    V = unitary_completion(np.array([0.0, 1.0]))
    assert np.allclose(V[:, 0], [0, 1])
    assert spectral_norm(V - np.eye(2)) <= 2


def test_unitary_completion_rejects_zero():
    with pytest.raises(InvalidInputError):
        unitary_completion(np.zeros(3))


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 7), st.integers(0, 2**32 - 1))
def test_unitary_completion_properties(n, seed):
    g = np.random.default_rng(seed)
    v = g.standard_normal(n) + 1j * g.standard_normal(n)
    V = unitary_completion(v)
    assert spectral_norm(V.conj().T @ V - np.eye(n)) <= 1e-12
    assert np.abs(V[:, 0] - v / np.linalg.norm(v)).max() <= 1e-12


def test_qr_examples():
    S0 = np.array([[2.0, 1.0], [0.0, 3.0]])
    Q, R = qr_decompose(S0)
    assert np.array_equal(Q, np.eye(2)) and np.array_equal(R, S0)
    Q, R = qr_decompose(np.eye(3))
    assert np.allclose(Q, np.eye(3)) and np.allclose(R, np.eye(3))
    Q, R = qr_decompose(np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert np.allclose(Q, [[0, 1], [1, 0]], atol=1e-15) and np.allclose(R, np.eye(2), atol=1e-15)


def test_qr_rejects_singular():
    with pytest.raises(RankDeficiencyError):
        qr_decompose(np.array([[1.0, 1.0], [1.0, 1.0]]))


def test_qr_round_trip(rng):
    for _ in range(30):
        M = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6)) + 4 * np.eye(6)
        Q, R = qr_decompose(M)
        assert spectral_norm(M - Q @ R) <= 1e-12 * spectral_norm(M)
        d = np.diag(R)
        assert np.all(d.imag == 0) and np.all(d.real > 0)
        assert np.array_equal(R, np.triu(R))


def test_schur_examples():
    D = np.diag([3.0, 1.0, 2.0])
    P = schur_decompose(D)
    assert np.array_equal(P.U, np.eye(3)) and np.array_equal(P.T, D)
    eps = 1e-4
    P = schur_decompose(np.array([[0, eps], [1, 0]]))
    assert np.allclose(sorted(np.diag(P.T).real), [-np.sqrt(eps), np.sqrt(eps)], atol=1e-14)


def test_schur_hermitian_is_diagonal(rng):
    Z = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
    H = Z + Z.conj().T
    P = schur_decompose(H)
    assert spectral_norm(P.T - np.diag(np.diag(P.T))) <= 1e-10 * spectral_norm(H)


def test_schur_diagonal_matches_polynomial_roots(rng):
    # independent oracle: roots of the characteristic polynomial
    for n in range(1, 5):
        for _ in range(10):
            A = rng.standard_normal((n, n))
            P = schur_decompose(A)
            roots = np.roots(np.poly(A))
            d = list(np.diag(P.T))
            for r in roots:
                k = int(np.argmin([abs(r - x) for x in d]))
                assert abs(r - d.pop(k)) < 1e-8


def test_schur_reordering(rng):
    A = rng.standard_normal((5, 5))
    P = schur_decompose(A)
    target = sorted(np.diag(P.T), key=lambda z: z.real)
    Q = schur_decompose(A, diag_order=target)
    assert np.allclose(np.diag(Q.T), target, atol=1e-10)
    res = SchurPair(Q.U, Q.T).check(A=A)
    assert res["unitarity"] < 1e-12 and res["triangularity"] == 0.0 and res["reconstruction"] < 1e-12


def test_reorder_keeps_factorization():
    T = np.array([[1.0, 2.0, 3.0], [0, 2.0, 1.0], [0, 0, 3.0]], dtype=complex)
    U, T2 = reorder_schur(np.eye(3), T, [3.0, 2.0, 1.0])
    assert np.allclose(np.diag(T2), [3, 2, 1])
    assert spectral_norm(U @ T2 @ U.conj().T - T) < 1e-13


def test_schur_failure_maps_to_numerical_error(monkeypatch):
    import scipy.linalg

    def boom(*a, **k):
        raise np.linalg.LinAlgError("no convergence")

    monkeypatch.setattr(scipy.linalg, "schur", boom)
    with pytest.raises(NumericalFailureError):
        schur_decompose(np.array([[0.0, 1.0], [1.0, 0.0]]))


def test_qr_is_lipschitz(rng):
    S0 = np.triu(rng.standard_normal((5, 5)), 1) * 0.3 + np.diag(rng.uniform(1, 2, 5))
    assert np.linalg.cond(S0) <= 10
    Q0, R0 = qr_decompose(S0)
    E = rng.standard_normal((5, 5))
    E /= spectral_norm(E)
    hs = [10.0**-p for p in range(3, 10)]
    ds = []
    for h in hs:
        Q, R = qr_decompose(S0 + h * E)
        ds.append(spectral_norm(Q - Q0) + spectral_norm(R - R0))
    slope = np.polyfit(np.log(hs), np.log(ds), 1)[0]
    assert 0.95 <= slope <= 1.05
