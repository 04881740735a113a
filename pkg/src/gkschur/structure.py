"""Jordan structure, Gohberg-Kaashoek numbers and the truncation rule.

All block-size partitions are stored non-increasing.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import InvalidInputError
from .numcore import (
    DEFAULT_TOL,
    Tolerance,
    as_matrix,
    is_upper_triangular,
    kernel_basis,
    rank_decision,
    spectral_norm,
)

__all__ = [
    "JordanStructure",
    "GKVector",
    "dual_partition",
    "cluster_eigenvalues",
    "jordan_structure",
    "gk_numbers",
    "same_jordan_structure",
    "same_gk",
    "truncate_structure",
    "structure_from_blocks",
    "triangular_restriction",
    "default_cluster_radius",
]

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class JordanStructure:
    """Per-eigenvalue Jordan block sizes.

    ``entries`` is a tuple of ``(eigenvalue, sizes)`` with each ``sizes``
    tuple non-increasing. ``warnings`` collects tolerance-related notes from
    the extraction; an empty tuple means every rank decision was clear.
    """

    entries: Tuple[Tuple[complex, Tuple[int, ...]], ...]
    ambient_dim: int
    warnings: Tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        total = 0
        for _, sizes in self.entries:
            if any(s <= 0 for s in sizes) or list(sizes) != sorted(sizes, reverse=True):
                raise InvalidInputError(f"block sizes must be positive and non-increasing: {sizes}")
            total += sum(sizes)
        if total != self.ambient_dim:
            raise InvalidInputError(f"block sizes sum to {total}, expected {self.ambient_dim}")

    @property
    def eigenvalues(self) -> List[complex]:
        return [lam for lam, _ in self.entries]

    def sizes(self, i) -> Tuple[int, ...]:
        return self.entries[i][1]

    def index_of(self, lam) -> int:
        """Index of the eigenvalue nearest to `lam`."""
        return int(np.argmin([abs(mu - lam) for mu in self.eigenvalues]))

    def to_json(self) -> dict:
        g = gk_numbers(self)
        return {
            "eigs": [
                {"re": float(np.real(lam)), "im": float(np.imag(lam)), "sizes": list(sizes)}
                for lam, sizes in self.entries
            ],
            "m": list(g.m),
            "k": list(g.k),
        }

    @classmethod
    def from_json(cls, obj) -> "JordanStructure":
        entries = tuple(
            (complex(e["re"], e.get("im", 0.0)), tuple(int(s) for s in e["sizes"])) for e in obj["eigs"]
        )
        return cls(entries, sum(sum(s) for _, s in entries))


@dataclass(frozen=True)
class GKVector:
    m: Tuple[int, ...]
    k: Tuple[int, ...]

    @property
    def n(self) -> int:
        return len(self.m)

    def to_json(self) -> dict:
        return {"m": list(self.m), "k": list(self.k)}


def dual_partition(m: Sequence[int], n: Optional[int] = None) -> Tuple[int, ...]:
    """Conjugate partition: ``k_i = max{l : m_l >= i}`` (0 over the empty set).

    The result is zero-padded to length `n` (default ``len(m)``).
    """
    m = [int(x) for x in m]
    n = len(m) if n is None else n
    out = []
    for i in range(1, n + 1):
        ls = [l for l, ml in enumerate(m, start=1) if ml >= i]
        out.append(max(ls) if ls else 0)
    return tuple(out)


def _linkage_labels(values, radius):
    z = np.asarray(values, dtype=np.complex128).reshape(-1)
    n = z.size
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i in range(n):
        for j in range(i + 1, n):
            if abs(z[i] - z[j]) <= radius:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[max(ri, rj)] = min(ri, rj)
    roots = {}
    labels = []
    for i in range(n):
        r = find(i)
        labels.append(roots.setdefault(r, len(roots)))
    return labels


def cluster_eigenvalues(values, radius: float):
    """Single-linkage clusters of `values` with linkage distance <= `radius`.

    Returns ``[(center, multiplicity), ...]`` in order of first appearance,
    each center being the arithmetic mean of its cluster.
    """
    if radius < 0:
        raise InvalidInputError("radius must be nonnegative")
    z = np.asarray(values, dtype=np.complex128).reshape(-1)
    labels = _linkage_labels(z, radius)
    out = []
    for c in range(max(labels, default=-1) + 1):
        members = z[[i for i, l in enumerate(labels) if l == c]]
        out.append((complex(members.mean()), int(members.size)))
    return out


def _clusters_with_members(values, radius):
    z = np.asarray(values, dtype=np.complex128).reshape(-1)
    labels = _linkage_labels(z, radius)
    groups = []
    for c in range(max(labels, default=-1) + 1):
        idx = [i for i, l in enumerate(labels) if l == c]
        groups.append(idx)
    return groups


def _partition_from_weyr(weyr):
    # block sizes are the conjugate of the Weyr characteristic
    weyr = [w for w in weyr if w > 0]
    if not weyr:
        return ()
    return tuple(s for s in dual_partition(weyr, weyr[0]) if s > 0)


def _staircase(N, tol, scale, max_dim):
    """Dimensions of ker N^i for i = 1, 2, ... until they stop growing.

    Uses ``ker N^i = {x : N x in ker N^(i-1)}`` so only matrices of norm
    about ``||N||`` are rank-tested.
    """
    n = N.shape[0]
    dims = [0]
    basis = np.zeros((n, 0), dtype=np.complex128)
    ambiguous = False
    while True:
        P = basis @ basis.conj().T
        M = N - P @ N
        rank, amb = rank_decision(M, tol, scale)
        ambiguous |= amb
        d = n - rank
        if d <= dims[-1]:
            break
        basis = kernel_basis(M, tol, scale).columns
        dims.append(d)
        if d >= max_dim:
            break
    return dims, ambiguous


def default_cluster_radius(A, tol: Tolerance = DEFAULT_TOL, scale=None) -> float:
    """Clustering radius used when ``tol.cluster_radius`` is unset.

    Upper triangular input: half the smallest gap between distinct diagonal
    entries (entries within roundoff of each other count as equal). Otherwise
    ``||A|| * rank_rel**(1/n)``. A given `scale` larger than ``||A||`` takes
    its place.
    """
    if tol.cluster_radius is not None:
        return tol.cluster_radius
    A = np.asarray(A, dtype=np.complex128)
    n = A.shape[0]
    scale = _scale(A, scale)
    if is_upper_triangular(A):
        floor = 1e3 * _EPS * max(scale, 1.0)
        d = np.diag(A)
        gaps = [abs(a - b) for i, a in enumerate(d) for b in d[i + 1 :] if abs(a - b) > floor]
        return 0.5 * min(gaps) if gaps else floor
    return scale * tol.rank_rel ** (1.0 / n)


def triangular_restriction(T, positions: Sequence[int], lam: complex):
    """Generalized eigenspace of an upper triangular matrix by back-substitution.

    For the diagonal `positions` carrying eigenvalue `lam`, returns ``(X, K)``
    with ``T X = X (lam I + K)``, ``X[positions] = I``, ``X[q, c] = 0`` below
    ``positions[c]`` and ``K`` strictly upper triangular. Diagonal entries in
    `positions` that differ slightly from `lam` are treated as equal to it.
    """
    T = np.asarray(T, dtype=np.complex128)
    n = T.shape[0]
    P = sorted(int(p) for p in positions)
    col = {p: c for c, p in enumerate(P)}
    r = len(P)
    X = np.zeros((n, r), dtype=np.complex128)
    K = np.zeros((r, r), dtype=np.complex128)
    for c, p in enumerate(P):
        x = X[:, c]
        x[p] = 1.0
        for i in range(p - 1, -1, -1):
            rowsum = T[i, i + 1 : p + 1] @ x[i + 1 : p + 1]
            if i in col:
                K[col[i], c] = rowsum
            else:
                rhs = K[:c, c] @ X[i, :c]
                x[i] = (rhs - rowsum) / (T[i, i] - lam)
    return X, K


def _balanced(X, K):
    d = np.linalg.norm(X, axis=0)
    return X / d, K * d[:, np.newaxis] / d[np.newaxis, :]


def _scale(A, scale):
    own = spectral_norm(A)
    return own if scale is None else max(own, float(scale))


def _triangular_structure(T, tol, radius, scale):
    n = T.shape[0]
    d = np.diag(T)
    entries, notes = [], []
    for idx in _clusters_with_members(d, radius):
        lam = complex(d[idx].mean())
        _, K = _balanced(*triangular_restriction(T, idx, lam))
        ref = max(spectral_norm(T - lam * np.eye(n)), scale)
        dims, amb = _staircase(K, tol, ref, len(idx))
        if amb:
            notes.append(f"ill-conditioned rank decision at eigenvalue {lam:.6g}")
        entries.append((lam, _partition_from_weyr(np.diff(dims))))
    return entries, notes


def _resolve_cluster(A, vals, tol, radius, scale):
    """Structure of one eigenvalue cluster, or None if no rank decision fits.

    Returns ``(entries, ambiguous)``. A cluster whose kernel dimensions fall
    short of its multiplicity is split more finely; the split is accepted
    only if every piece is consistent.
    """
    n = A.shape[0]
    lam = complex(np.mean(vals))
    dims, amb = _staircase(A - lam * np.eye(n), tol, scale, len(vals))
    if dims[-1] == len(vals):
        return [(lam, _partition_from_weyr(np.diff(dims)))], amb
    if dims[-1] < len(vals) and len(vals) > 1 and radius > 1e3 * _EPS * max(scale, 1.0):
        out, any_amb = [], amb
        for idx in _clusters_with_members(vals, radius / 10.0):
            sub = _resolve_cluster(A, np.asarray(vals)[idx], tol, radius / 10.0, scale)
            if sub is None:
                return None
            out += sub[0]
            any_amb |= sub[1]
        return out, any_amb
    return None


def _general_cluster(A, vals, tol, radius, scale, notes):
    res = _resolve_cluster(A, vals, tol, radius, scale)
    lam = complex(np.mean(vals))
    if res is None:
        # unresolved splitting: read the cluster as one eigenvalue under looser cutoffs
        loose = tol.rank_rel
        while res is None and loose < 1e-2:
            loose *= 10.0
            t = Tolerance(loose, tol.residual_rel, tol.cluster_radius)
            dims, _ = _staircase(A - lam * np.eye(A.shape[0]), t, scale, len(vals))
            if dims[-1] == len(vals):
                res = [(lam, _partition_from_weyr(np.diff(dims)))], True
                notes.append(f"cluster at {lam:.6g} resolved only with rank cutoff {loose:.0e}")
    if res is not None:
        entries, amb = res
        if amb:
            notes.append(f"ill-conditioned rank decision near eigenvalue {lam:.6g}")
        return entries
    notes.append(f"kernel dimensions at eigenvalue {lam:.6g} do not match multiplicity {len(vals)}")
    return [(lam, (1,) * len(vals))]


def jordan_structure(A, tol: Tolerance = DEFAULT_TOL, scale=None) -> JordanStructure:
    """Jordan block sizes of `A`, one partition per clustered eigenvalue.

    Upper triangular input takes its eigenvalues from the diagonal and
    reads the structure off the restriction of ``T - lam I`` to each
    generalized eigenspace. Other input is handled by rank staircases of
    ``A - lam I`` around the centers of eigenvalue clusters.

    Rank cutoffs and clustering radii are relative to ``||A||``. When `A` is
    a block of a larger matrix, pass that matrix's norm as `scale` so that
    roundoff inherited from it is not mistaken for structure.
    """
    A = as_matrix(A, "A", square=True)
    n = A.shape[0]
    scale = _scale(A, scale)
    radius = default_cluster_radius(A, tol, scale)
    if is_upper_triangular(A):
        entries, notes = _triangular_structure(A, tol, radius, scale)
    else:
        vals = np.linalg.eigvals(A)
        entries, notes = [], []
        for idx in _clusters_with_members(vals, radius):
            entries += _general_cluster(A, vals[idx], tol, radius, scale, notes)
    return JordanStructure(tuple(entries), n, tuple(notes))


def structure_from_blocks(blocks) -> JordanStructure:
    """Build a structure from ``[(eigenvalue, size), ...]`` Jordan blocks."""
    by_lam = {}
    for lam, size in blocks:
        by_lam.setdefault(complex(lam), []).append(int(size))
    entries = tuple((lam, tuple(sorted(s, reverse=True))) for lam, s in by_lam.items())
    return JordanStructure(entries, sum(int(s) for _, s in blocks))


def gk_numbers(omega: JordanStructure) -> GKVector:
    """GK numbers ``m_i = sum over eigenvalues of the i-th largest block``."""
    n = omega.ambient_dim
    m = [0] * n
    for _, sizes in omega.entries:
        for i, s in enumerate(sizes):
            m[i] += s
    m = tuple(sorted(m, reverse=True))
    return GKVector(m, dual_partition(m, n))


def _check_pairing(pairing, k):
    p = [int(x) for x in pairing]
    if len(p) != k or sorted(p) != list(range(k)):
        raise InvalidInputError(f"pairing {pairing} is not a bijection of {k} eigenvalues")
    return p


def same_jordan_structure(omega1: JordanStructure, omega2: JordanStructure, pairing=None) -> bool:
    """True iff paired eigenvalues carry identical block-size lists.

    ``pairing[i]`` is the index in `omega2` paired with entry ``i`` of
    `omega1`. Without a pairing, eigenvalues are matched by a minimum total
    distance assignment.
    """
    k1, k2 = len(omega1.entries), len(omega2.entries)
    if omega1.ambient_dim != omega2.ambient_dim or k1 != k2:
        if pairing is not None and len(pairing) != k1:
            raise InvalidInputError("pairing length differs from the eigenvalue count")
        return False
    if pairing is None:
        cost = np.abs(np.subtract.outer(omega1.eigenvalues, omega2.eigenvalues))
        _, pairing = linear_sum_assignment(cost)
    p = _check_pairing(pairing, k1)
    return all(omega1.sizes(i) == omega2.sizes(p[i]) for i in range(k1))


def same_gk(g1: GKVector, g2: GKVector) -> bool:
    if g1.n != g2.n:
        raise InvalidInputError(f"GK vectors of different ambient dimension ({g1.n} vs {g2.n})")
    return tuple(g1.m) == tuple(g2.m)


def truncate_structure(omega: JordanStructure, t: int, l: int) -> JordanStructure:
    """Structure after deflating an eigenvector at the end of chain `l` of eigenvalue `t`.

    Indices are 0-based: `t` indexes ``omega.entries`` and `l` the sorted
    block list of that eigenvalue. Block ``l`` loses one vector; when blocks
    ``l..j*`` tie, the shortened block moves to position ``j*`` so the list
    stays non-increasing. A block of size one disappears.
    """
    if not 0 <= t < len(omega.entries):
        raise InvalidInputError(f"eigenvalue index {t} out of range")
    lam, sizes = omega.entries[t]
    if not 0 <= l < len(sizes):
        raise InvalidInputError(f"chain index {l} out of range for sizes {sizes}")
    sizes = list(sizes)
    jstar = l
    while jstar + 1 < len(sizes) and sizes[jstar + 1] == sizes[l]:
        jstar += 1
    new = sizes[:l] + sizes[l + 1 : jstar + 1] + [sizes[l] - 1] + sizes[jstar + 1 :]
    new = tuple(s for s in new if s > 0)
    entries = list(omega.entries)
    if new:
        entries[t] = (lam, new)
    else:
        del entries[t]
    return JordanStructure(tuple(entries), omega.ambient_dim - 1)
