"""Orthogonal projectors, gaps and semigaps between subspaces of C^n."""

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .numcore import DEFAULT_TOL, SubspaceBasis, Tolerance, as_matrix, kernel_basis, spectral_norm

__all__ = [
    "SubspaceBasis",
    "Projector",
    "projector",
    "gap",
    "semigap",
    "kernel_semigap",
    "HausdorffEstimate",
    "invariant_subspace_family",
    "hausdorff_inv_distance",
]


class Projector:
    """Orthogonal projector, stored as a dense Hermitian idempotent matrix."""

    def __init__(self, matrix, check=True):
        P = np.asarray(matrix, dtype=np.complex128)
        if check:
            if spectral_norm(P @ P - P) > 1e-12 or spectral_norm(P.conj().T - P) > 1e-12:
                raise InvalidInputError("matrix is not an orthogonal projector")
        self.matrix = P

    @property
    def ambient_dim(self):
        return self.matrix.shape[0]


def _basis(M) -> SubspaceBasis:
    if isinstance(M, SubspaceBasis):
        return M
    return SubspaceBasis(M)


def projector(M) -> Projector:
    B = _basis(M)
    Q = B.columns
    return Projector(Q @ Q.conj().T, check=False)


def _same_ambient(M, N):
    if M.ambient_dim != N.ambient_dim:
        raise InvalidInputError(f"ambient dimensions differ: {M.ambient_dim} vs {N.ambient_dim}")


def gap(M, N) -> float:
    """Gap ``||P_M - P_N||`` between two subspaces; lies in [0, 1]."""
    M, N = _basis(M), _basis(N)
    _same_ambient(M, N)
    return min(1.0, spectral_norm(projector(M).matrix - projector(N).matrix))


def semigap(M, N) -> float:
    """One-sided gap: largest distance from a unit vector of `M` to `N`.

    Computed as the largest singular value of ``(I - P_N) B_M`` with ``B_M``
    the orthonormal basis of `M`. The zero subspace has semigap 0 to anything.
    """
    M, N = _basis(M), _basis(N)
    _same_ambient(M, N)
    if M.dim == 0:
        return 0.0
    R = M.columns - N.columns @ (N.columns.conj().T @ M.columns)
    return min(1.0, spectral_norm(R))


def kernel_semigap(A, A0, tol: Tolerance = DEFAULT_TOL) -> float:
    """Semigap from ``ker A`` to ``ker A0``.

    Both kernels use the same absolute cutoff, ``tol.rank_rel`` times the
    larger of the two norms, so a perturbation that lifts a zero singular
    value above roundoff but below the cutoff leaves the kernel dimension
    unchanged.
    """
    A = as_matrix(A, "A", square=True)
    A0 = as_matrix(A0, "A0", square=True)
    if A.shape != A0.shape:
        raise InvalidInputError("A and A0 must have the same size")
    scale = max(spectral_norm(A), spectral_norm(A0))
    return semigap(kernel_basis(A, tol, scale), kernel_basis(A0, tol, scale))


@dataclass(frozen=True)
class HausdorffEstimate:
    """Hausdorff distance evaluated over a restricted family of invariant subspaces.

    ``restricted`` is always true: the families are finite subsets of the
    (generally infinite) invariant-subspace lattices, so `value` is an
    estimate rather than the true distance.
    """

    value: float
    family_sizes: tuple
    restricted: bool = True


def invariant_subspace_family(A, tol: Tolerance = DEFAULT_TOL, max_dim=None):
    """Invariant subspaces spanned by prefixes of the Jordan chains of `A`.

    Every choice of one prefix length per chain gives an invariant subspace;
    choosing full chains recovers sums of generalized eigenspaces. The zero
    subspace and the whole space are included.
    """
    from .matching import jordan_chains
    from .structure import jordan_structure

    A = as_matrix(A, "A", square=True)
    n = A.shape[0]
    max_dim = n if max_dim is None else max_dim
    chains = jordan_chains(A, jordan_structure(A, tol), tol).chains
    lengths = [len(c.vectors) for c in chains]
    family, seen = [], set()
    for prefix in itertools.product(*[range(L + 1) for L in lengths]):
        d = sum(prefix)
        if d > max_dim or prefix in seen:
            continue
        seen.add(prefix)
        vecs = [v for c, k in zip(chains, prefix) for v in c.vectors[:k]]
        if vecs:
            family.append(SubspaceBasis.from_span(np.column_stack(vecs), tol, n))
        else:
            family.append(SubspaceBasis.zero(n))
    return family


def hausdorff_inv_distance(A, B, tol: Tolerance = DEFAULT_TOL, max_dim=None) -> HausdorffEstimate:
    A = as_matrix(A, "A", square=True)
    B = as_matrix(B, "B", square=True)
    if A.shape != B.shape:
        raise InvalidInputError("A and B must have the same size")
    if max_dim is not None and not 0 <= max_dim <= A.shape[0]:
        raise InvalidInputError("max_dim must lie in [0, n]")
    FA = invariant_subspace_family(A, tol, max_dim)
    FB = invariant_subspace_family(B, tol, max_dim)

    def one_side(F, G):
        return max(min(gap(M, N) for N in G) for M in F)

    value = max(one_side(FA, FB), one_side(FB, FA))
    return HausdorffEstimate(float(value), (len(FA), len(FB)))
