"""Dense complex matrix primitives.

Norms, tolerance-controlled rank and null spaces, QR with a positive real
diagonal, unitary completion of a single vector, and a complex Schur
decomposition with diagonal reordering by adjacent swaps.

All routines accept anything ``numpy.asarray`` understands and work on
``complex128`` copies; inputs are never modified.
"""

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.linalg

from .errors import InvalidInputError, NumericalFailureError, RankDeficiencyError

__all__ = [
    "Tolerance",
    "DEFAULT_TOL",
    "SchurPair",
    "SubspaceBasis",
    "as_matrix",
    "as_vector",
    "spectral_norm",
    "numerical_rank",
    "rank_decision",
    "kernel_basis",
    "unitary_completion",
    "qr_decompose",
    "schur_decompose",
    "reorder_schur",
    "is_upper_triangular",
    "random_unitary",
]


@dataclass(frozen=True)
class Tolerance:
    """Numerical thresholds used by every rank or clustering decision.

    Parameters
    ----------
    rank_rel
        Relative singular-value cutoff: a singular value counts as nonzero
        when it exceeds ``rank_rel * scale``.
    residual_rel
        Relative residual accepted for computed factorizations.
    cluster_radius
        Linkage radius for eigenvalue clustering. ``None`` lets each caller
        pick a radius from the data.
    """

    rank_rel: float = 1e-8
    residual_rel: float = 1e-10
    cluster_radius: Optional[float] = None

    def __post_init__(self):
        if not 0.0 < self.rank_rel < 1.0:
            raise InvalidInputError(f"rank_rel must lie in (0, 1), got {self.rank_rel}")
        if not 0.0 < self.residual_rel < 1.0:
            raise InvalidInputError(f"residual_rel must lie in (0, 1), got {self.residual_rel}")
        if self.cluster_radius is not None and not self.cluster_radius >= 0.0:
            raise InvalidInputError(f"cluster_radius must be >= 0, got {self.cluster_radius}")

    def with_radius(self, radius):
        return Tolerance(self.rank_rel, self.residual_rel, radius)


DEFAULT_TOL = Tolerance()


def as_matrix(M, name="matrix", square=False) -> np.ndarray:
    A = np.array(M, dtype=np.complex128, copy=True)
    if A.ndim != 2 or A.shape[0] == 0 or A.shape[1] == 0:
        raise InvalidInputError(f"{name} must be a nonempty 2-D array, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InvalidInputError(f"{name} has non-finite entries")
    if square and A.shape[0] != A.shape[1]:
        raise InvalidInputError(f"{name} must be square, got shape {A.shape}")
    return A


def as_vector(v, name="vector") -> np.ndarray:
    x = np.array(v, dtype=np.complex128, copy=True).reshape(-1)
    if x.size == 0:
        raise InvalidInputError(f"{name} is empty")
    if not np.all(np.isfinite(x)):
        raise InvalidInputError(f"{name} has non-finite entries")
    return x


def is_upper_triangular(M, atol=0.0) -> bool:
    M = np.asarray(M)
    return bool(np.all(np.abs(np.tril(M, -1)) <= atol))


def spectral_norm(M) -> float:
    """Largest singular value of `M` (0 for the zero matrix)."""
    A = np.asarray(M, dtype=np.complex128)
    if A.size == 0:
        return 0.0
    if not np.all(np.isfinite(A)):
        raise InvalidInputError("matrix has non-finite entries")
    if A.ndim == 1:
        return float(np.linalg.norm(A))
    return float(np.linalg.norm(A, 2))


def _cutoff(s, tol, scale):
    ref = s[0] if scale is None else scale
    return tol.rank_rel * ref


def rank_decision(M, tol: Tolerance = DEFAULT_TOL, scale=None):
    """Numerical rank of `M` and whether the decision was close.

    Returns ``(rank, ambiguous)`` where `ambiguous` is true when some singular
    value lies within a factor 10 of the cutoff on either side.

    `scale` replaces the matrix's own largest singular value as the reference
    for the relative cutoff. Callers working on blocks or shifted powers of a
    matrix pass the norm of the original matrix here.
    """
    A = np.asarray(M, dtype=np.complex128)
    if A.size == 0:
        return 0, False
    if not np.all(np.isfinite(A)):
        raise InvalidInputError("matrix has non-finite entries")
    s = scipy.linalg.svdvals(A)
    if s[0] == 0.0:
        return 0, False
    cut = _cutoff(s, tol, scale)
    rank = int(np.sum(s > cut))
    ambiguous = bool(np.any((s > cut / 10.0) & (s < cut * 10.0)))
    return rank, ambiguous


def numerical_rank(M, tol: Tolerance = DEFAULT_TOL, scale=None) -> int:
    return rank_decision(M, tol, scale)[0]


class SubspaceBasis:
    """Orthonormal basis of a subspace of C^n, stored as columns.

    An empty basis (zero columns) represents the zero subspace.
    """

    def __init__(self, columns, ambient_dim=None, check=True):
        C = np.asarray(columns, dtype=np.complex128)
        if C.ndim == 1:
            C = C.reshape(-1, 1)
        if C.ndim != 2:
            raise InvalidInputError("basis columns must form a 2-D array")
        if ambient_dim is None:
            ambient_dim = C.shape[0]
        if C.shape[0] != ambient_dim:
            if C.size == 0:
                C = np.zeros((ambient_dim, 0), dtype=np.complex128)
            else:
                raise InvalidInputError(
                    f"basis rows {C.shape[0]} differ from ambient dimension {ambient_dim}"
                )
        if ambient_dim <= 0:
            raise InvalidInputError("ambient dimension must be positive")
        if C.shape[1] > ambient_dim:
            raise InvalidInputError("more basis vectors than the ambient dimension")
        if not np.all(np.isfinite(C)):
            raise InvalidInputError("basis has non-finite entries")
        if check and C.shape[1]:
            err = np.abs(C.conj().T @ C - np.eye(C.shape[1])).max()
            if err > 1e-12:
                raise InvalidInputError(f"basis columns are not orthonormal (error {err:.3g})")
        self.columns = C
        self.ambient_dim = int(ambient_dim)

    @property
    def dim(self) -> int:
        return self.columns.shape[1]

    @classmethod
    def from_span(cls, vectors, tol: Tolerance = DEFAULT_TOL, ambient_dim=None, scale=None):
        """Orthonormal basis for the span of the columns of `vectors`."""
        V = np.asarray(vectors, dtype=np.complex128)
        if V.ndim == 1:
            V = V.reshape(-1, 1)
        n = V.shape[0] if ambient_dim is None else ambient_dim
        if V.size == 0:
            return cls(np.zeros((n, 0)), n, check=False)
        U, s, _ = np.linalg.svd(V, full_matrices=False)
        if s[0] == 0.0:
            return cls(np.zeros((n, 0)), n, check=False)
        r = int(np.sum(s > _cutoff(s, tol, scale)))
        return cls(U[:, :r], n, check=False)

    @classmethod
    def full(cls, n):
        return cls(np.eye(n, dtype=np.complex128), n, check=False)

    @classmethod
    def zero(cls, n):
        return cls(np.zeros((n, 0), dtype=np.complex128), n, check=False)

    def complement(self) -> "SubspaceBasis":
        n, k = self.ambient_dim, self.dim
        if k == 0:
            return SubspaceBasis.full(n)
        U, _, _ = np.linalg.svd(self.columns, full_matrices=True)
        return SubspaceBasis(U[:, k:], n, check=False)

    def __repr__(self):
        return f"SubspaceBasis(dim={self.dim}, ambient_dim={self.ambient_dim})"


def kernel_basis(M, tol: Tolerance = DEFAULT_TOL, scale=None) -> SubspaceBasis:
    """Orthonormal basis of the numerical null space of `M`.

    Right singular vectors whose singular values do not exceed the cutoff
    ``tol.rank_rel * scale`` (scale defaults to the largest singular value).
    """
    A = np.asarray(M, dtype=np.complex128)
    if A.ndim != 2:
        raise InvalidInputError("kernel_basis expects a 2-D array")
    if not np.all(np.isfinite(A)):
        raise InvalidInputError("matrix has non-finite entries")
    n = A.shape[1]
    _, s, vh = np.linalg.svd(A, full_matrices=True)
    if s.size == 0 or s[0] == 0.0:
        return SubspaceBasis.full(n)
    r = int(np.sum(s > _cutoff(s, tol, scale)))
    return SubspaceBasis(vh[r:].conj().T, n, check=False)


def unitary_completion(v, n=None) -> np.ndarray:
    """Unitary matrix whose first column is ``v / ||v||`` and which is close to I.

    The completion is a plane rotation carrying e1 onto the phase-normalized
    direction ``w = conj(phase(v_1)) v / ||v||`` (so ``w_1`` is real and
    nonnegative), followed by restoring that phase on the first column only.
    The rotation acts as the identity on the orthogonal complement of
    ``span{e1, w}``, which gives ``||V - I|| <= 2 ||v/||v|| - e1||`` up to the
    phase term.
    """
    x = as_vector(v, "v")
    if n is not None and x.size != n:
        raise InvalidInputError(f"vector length {x.size} differs from n={n}")
    n = x.size
    nrm = np.linalg.norm(x)
    if nrm == 0.0:
        raise InvalidInputError("cannot complete the zero vector")
    u = x / nrm
    phase = u[0] / abs(u[0]) if u[0] != 0 else 1.0
    w = u * np.conj(phase)
    c = w[0].real
    tail = w.copy()
    tail[0] = 0.0
    s = np.linalg.norm(tail)
    V = np.eye(n, dtype=np.complex128)
    if s > 0.0:
        q = tail / s
        e1 = np.zeros(n, dtype=np.complex128)
        e1[0] = 1.0
        V += (c - 1.0) * (np.outer(e1, e1) + np.outer(q, q.conj()))
        V += s * (np.outer(q, e1) - np.outer(e1, q.conj()))
    V[:, 0] = u
    return V


def qr_decompose(M, tol: Tolerance = DEFAULT_TOL):
    """QR factorization with a strictly positive real diagonal in R.

    Raises
    ------
    RankDeficiencyError
        If `M` is numerically singular under ``tol.rank_rel``.
    """
    A = as_matrix(M, "M", square=True)
    n = A.shape[0]
    d = np.diag(A)
    if is_upper_triangular(A) and np.all(d.imag == 0) and np.all(d.real > 0):
        return np.eye(n, dtype=np.complex128), A
    if numerical_rank(A, tol) < n:
        raise RankDeficiencyError("QR input is numerically singular")
    Q, R = np.linalg.qr(A)
    r = np.diag(R)
    ph = r / np.abs(r)
    Q = Q * ph[np.newaxis, :]
    R = ph.conj()[:, np.newaxis] * R
    R = np.triu(R)
    R[np.diag_indices(n)] = np.abs(r)
    res = spectral_norm(A - Q @ R)
    if res > tol.residual_rel * spectral_norm(A):
        raise NumericalFailureError(f"QR residual {res:.3g} exceeds tolerance")
    return Q, R


@dataclass
class SchurPair:
    """One Schur factorization ``A = U T U*``."""

    U: np.ndarray
    T: np.ndarray

    def reconstruct(self):
        return self.U @ self.T @ self.U.conj().T

    def check(self, tol: Tolerance = DEFAULT_TOL, A=None):
        """Residuals of the defining properties, as a dict of floats."""
        n = self.U.shape[0]
        out = {
            "unitarity": spectral_norm(self.U.conj().T @ self.U - np.eye(n)),
            "triangularity": spectral_norm(np.tril(self.T, -1)),
        }
        if A is not None:
            out["reconstruction"] = spectral_norm(np.asarray(A) - self.reconstruct())
        return out


def _swap(U, T, k):
    # exchange diagonal entries k, k+1 of the triangular factor in place
    a, c, b = T[k, k], T[k + 1, k + 1], T[k, k + 1]
    x = np.array([b, c - a])
    nx = np.linalg.norm(x)
    if nx == 0.0:
        return
    x = x / nx
    G = np.array([[x[0], -np.conj(x[1])], [x[1], np.conj(x[0])]])
    T[:, k : k + 2] = T[:, k : k + 2] @ G
    T[k : k + 2, :] = G.conj().T @ T[k : k + 2, :]
    U[:, k : k + 2] = U[:, k : k + 2] @ G
    T[k + 1, k] = 0.0
    T[k, k], T[k + 1, k + 1] = c, a


def reorder_schur(U, T, order: Sequence[complex]):
    """Reorder a complex Schur form so that ``diag(T)`` follows `order`.

    Position ``i`` receives the remaining diagonal entry closest to
    ``order[i]``; entries are moved by adjacent swaps.
    """
    U = np.array(U, dtype=np.complex128)
    T = np.array(T, dtype=np.complex128)
    n = T.shape[0]
    order = list(order)
    if len(order) > n:
        raise InvalidInputError("ordering hint longer than the matrix dimension")
    for i, target in enumerate(order):
        d = np.abs(np.diag(T)[i:] - target)
        j = i + int(np.argmin(d))
        for k in range(j - 1, i - 1, -1):
            _swap(U, T, k)
    return U, T


def schur_decompose(M, diag_order=None, tol: Tolerance = DEFAULT_TOL) -> SchurPair:
    """Complex Schur decomposition ``M = U T U*``.

    Already upper triangular input is returned as ``(I, M)``. `diag_order`,
    if given, is a sequence of eigenvalue targets for the diagonal of T.
    """
    A = as_matrix(M, "M", square=True)
    n = A.shape[0]
    if is_upper_triangular(A):
        U, T = np.eye(n, dtype=np.complex128), A
    else:
        try:
            T, U = scipy.linalg.schur(A, output="complex")
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise NumericalFailureError(f"Schur iteration failed: {exc}", iterations=None) from exc
        T = np.triu(T)
    if diag_order is not None:
        U, T = reorder_schur(U, T, diag_order)
    pair = SchurPair(U, T)
    res = pair.check(tol, A)
    scale = max(spectral_norm(A), np.finfo(float).tiny)
    if res["unitarity"] > tol.residual_rel or res["reconstruction"] > tol.residual_rel * scale:
        raise NumericalFailureError(f"Schur post-conditions violated: {res}")
    return pair


def random_unitary(rng: np.random.Generator, n: int) -> np.ndarray:
    """Haar-distributed unitary matrix."""
    Z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2.0)
    Q, R = np.linalg.qr(Z)
    d = np.diag(R)
    return Q * (d / np.abs(d))[np.newaxis, :]
