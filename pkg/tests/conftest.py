import numpy as np
import pytest
import scipy.linalg
import sympy

from gkschur.lab import jordan_block
from gkschur.structure import structure_from_blocks


def jordan_matrix(blocks):
    """Block diagonal Jordan matrix from ``[(eigenvalue, size), ...]``."""
    return scipy.linalg.block_diag(*[jordan_block(lam, k) for lam, k in blocks])


def unit_upper(rng, n, scale=1.0, integer=False):
    """Unit upper triangular matrix; integer entries keep the inverse integral."""
    if integer:
        R = np.triu(rng.integers(-2, 3, size=(n, n)), 1).astype(float)
    else:
        R = scale * np.triu(rng.standard_normal((n, n)), 1)
    return np.eye(n) + R


def triangular_similar(rng, blocks, integer=False, scale=0.5):
    """Upper triangular ``R J R^-1`` for a unit upper triangular ``R``."""
    J = jordan_matrix(blocks)
    R = unit_upper(rng, J.shape[0], scale, integer)
    T = R @ J @ np.linalg.inv(R)
    if integer:
        T = np.round(T)
    return np.triu(T).astype(np.complex128)


def random_basis(rng, n, k):
    Z = rng.standard_normal((n, k)) + 1j * rng.standard_normal((n, k))
    Q, _ = np.linalg.qr(Z)
    return Q


def sizes_by_eigenvalue(omega):
    return {complex(round(lam.real, 6), round(lam.imag, 6)): s for lam, s in omega.entries}


def sympy_structure(A):
    """Jordan block sizes per eigenvalue from sympy's exact Jordan form."""
    _, J = sympy.Matrix(A).jordan_form()
    n = J.shape[0]
    blocks, i = [], 0
    while i < n:
        k = 1
        while i + k < n and J[i + k - 1, i + k] == 1:
            k += 1
        blocks.append((complex(J[i, i]), k))
        i += k
    return sizes_by_eigenvalue(structure_from_blocks(blocks))


def random_blocks(rng, n):
    blocks, left = [], n
    n_eigs = int(rng.integers(1, 4))
    while left:
        k = int(rng.integers(1, left + 1))
        blocks.append((int(rng.integers(0, n_eigs)), k))
        left -= k
    return blocks


def exact_height(T):
    """Largest h with e1 in the image of (T - T11)^(h-1), in exact arithmetic."""
    M = sympy.Matrix(T) - T[0, 0] * sympy.eye(T.shape[0])
    e = sympy.zeros(T.shape[0], 1)
    e[0] = 1
    h, P = 1, sympy.eye(T.shape[0])
    while True:
        P = M * P
        if P.rank() == 0 or P.row_join(e).rank() > P.rank():
            return h
        h += 1


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)
