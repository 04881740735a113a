"""Eigenvalue pairing, Jordan chains, close chains and the deflation recursion.

The central routine is :func:`lipschitz_match`. Given an upper triangular
``T0`` and a matrix ``B`` with the same Jordan structure, it builds a unitary
``V`` close to the identity such that ``V* B V`` is upper triangular and close
to ``T0``. It peels one eigenvector at a time: the Jordan chain of ``T0``
ending in ``e1`` is matched by a chain of ``B``, the head of that chain is
rotated onto ``e1``, and the recursion continues on the trailing blocks.
"""

import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from .errors import (
    ChainConstructionError,
    IllConditionedStructureWarning,
    InvalidInputError,
    StructureMismatchError,
)
from .numcore import (
    DEFAULT_TOL,
    SchurPair,
    SubspaceBasis,
    Tolerance,
    as_matrix,
    is_upper_triangular,
    rank_decision,
    spectral_norm,
    unitary_completion,
)
from .structure import (
    JordanStructure,
    _balanced,
    _clusters_with_members,
    default_cluster_radius,
    jordan_structure,
    triangular_restriction,
    truncate_structure,
)

__all__ = [
    "Pairing",
    "pair_eigenvalues",
    "Chain",
    "ChainSet",
    "chain_residual",
    "verify_chains",
    "jordan_chains",
    "close_chain",
    "deflation_step",
    "MatchResult",
    "lipschitz_match",
    "schur_distance",
    "SchurPair",
]

MODES = ("lipschitz", "holder")


@dataclass(frozen=True)
class Pairing:
    """``lams[order0[i]]`` is paired with ``mus[order1[i]]``."""

    order0: Tuple[int, ...]
    order1: Tuple[int, ...]
    mode: str
    max_mismatch: float

    def partner(self, i: int) -> int:
        """Index into `mus` paired with index `i` into `lams`."""
        return self.order1[self.order0.index(i)]


def _bottleneck_assignment(cost):
    """Assignment minimizing the largest cost, ties broken by total cost."""
    k = cost.shape[0]
    levels = np.unique(cost)
    lo, hi = 0, len(levels) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        graph = csr_matrix((cost <= levels[mid]).astype(np.int8))
        if np.all(maximum_bipartite_matching(graph, perm_type="column") >= 0):
            hi = mid
        else:
            lo = mid + 1
    masked = np.where(cost <= levels[lo], cost, np.inf)
    big = 1.0 + k * (levels[-1] + 1.0)
    rows, cols = linear_sum_assignment(np.where(np.isfinite(masked), masked, big))
    return rows, cols


def pair_eigenvalues(lams: Sequence[complex], mus: Sequence[complex], mode: str = "lipschitz") -> Pairing:
    """Pair two eigenvalue lists so that the largest mismatch is minimal.

    In ``lipschitz`` mode the lists hold distinct eigenvalues of matrices with
    the same Jordan structure. In ``holder`` mode they are full spectra with
    multiplicity, and several entries of `mus` may land on one eigenvalue of
    `lams`.
    """
    if mode not in MODES:
        raise InvalidInputError(f"unknown pairing mode {mode!r}")
    lams = np.asarray(lams, dtype=np.complex128).ravel()
    mus = np.asarray(mus, dtype=np.complex128).ravel()
    if lams.size != mus.size:
        raise StructureMismatchError(
            f"cannot pair {lams.size} eigenvalues with {mus.size} ({mode} mode)"
        )
    if lams.size == 0:
        return Pairing((), (), mode, 0.0)
    cost = np.abs(np.subtract.outer(lams, mus))
    rows, cols = _bottleneck_assignment(cost)
    worst = float(cost[rows, cols].max())
    return Pairing(tuple(int(r) for r in rows), tuple(int(c) for c in cols), mode, worst)


@dataclass(frozen=True)
class Chain:
    """Vectors ``f_1..f_m`` with ``(A - lam_{j+1}) f_{j+1} = f_j`` and ``(A - lam_1) f_1 = 0``."""

    eigenvalues: Tuple[complex, ...]
    vectors: Tuple[np.ndarray, ...]

    def __post_init__(self):
        if len(self.eigenvalues) != len(self.vectors) or not self.vectors:
            raise InvalidInputError("a chain needs one eigenvalue per vector and at least one vector")

    def __len__(self):
        return len(self.vectors)

    @property
    def head(self):
        return self.vectors[0]

    @property
    def top(self):
        return self.vectors[-1]


@dataclass(frozen=True)
class ChainSet:
    chains: Tuple[Chain, ...]
    ambient_dim: int

    def matrix(self):
        """All chain vectors as columns, chain by chain, ``f_1`` first."""
        cols = [v for c in self.chains for v in c.vectors]
        if not cols:
            return np.zeros((self.ambient_dim, 0), dtype=np.complex128)
        return np.column_stack(cols)


def chain_residual(chains, A) -> float:
    """Largest chain-relation residual, relative to ``||A||`` times the vector size."""
    A = as_matrix(A, "A", square=True)
    n = A.shape[0]
    items = chains.chains if isinstance(chains, ChainSet) else (chains,)
    scale = max(spectral_norm(A), 1.0)
    worst = 0.0
    for c in items:
        ref = max(np.linalg.norm(v) for v in c.vectors)
        prev = np.zeros(n, dtype=np.complex128)
        for lam, f in zip(c.eigenvalues, c.vectors):
            r = A @ f - lam * f - prev
            worst = max(worst, np.linalg.norm(r) / (scale * ref))
            prev = f
    return float(worst)


def verify_chains(chains, A, tol: Tolerance = DEFAULT_TOL) -> bool:
    return chain_residual(chains, A) <= tol.residual_rel * 100


def _phase_fix(x):
    k = int(np.argmax(np.abs(x)))
    return x * (abs(x[k]) / x[k]) if x[k] != 0 else x


def _forced_kernels(B, shifts, dims, tol, scale):
    """Nested bases of ``ker prod_{j<=i} (B - shifts[j])`` with prescribed dimensions.

    Level ``i`` solves ``(B - shifts[i]) x in K_{i-1}`` by keeping the
    ``dims[i]`` smallest right singular vectors of the projected shift. The
    dimensions come from a known Jordan structure, so no cutoff is needed; a
    warning flags a kept singular value above the usual rank cutoff.
    """
    n = B.shape[0]
    basis = np.zeros((n, 0), dtype=np.complex128)
    out, worst = [], 0.0
    for mu, d in zip(shifts, dims):
        N = B - mu * np.eye(n)
        M = N - basis @ (basis.conj().T @ N)
        _, s, vh = np.linalg.svd(M)
        if d > 0:
            worst = max(worst, float(s[n - d]) / scale)
        basis = vh[n - d :].conj().T
        out.append(basis)
    if worst > tol.rank_rel:
        warnings.warn(
            f"kernel kept a singular value {worst:.2e} (relative) above the rank cutoff",
            IllConditionedStructureWarning,
            stacklevel=3,
        )
    return out


def _kernel_dims(omega: JordanStructure, shifts):
    """``dim ker prod_{j<=i}(B - shifts[j])`` for each prefix, from B's structure."""
    counts = [0] * len(omega.entries)
    dims = []
    for mu in shifts:
        counts[omega.index_of(mu)] += 1
        dims.append(sum(min(s, c) for (_, sizes), c in zip(omega.entries, counts) for s in sizes))
    return dims


def jordan_chains(A, omega: JordanStructure, tol: Tolerance = DEFAULT_TOL) -> ChainSet:
    """A Jordan basis of `A` organized in chains, longest first per eigenvalue.

    Tops of the chains of length ``s`` are taken in ``ker (A - lam)^s`` as far
    as possible from ``ker (A - lam)^(s-1)`` plus the level-``s`` vectors of
    the longer chains already chosen.
    """
    A = as_matrix(A, "A", square=True)
    n = A.shape[0]
    if omega.ambient_dim != n:
        raise InvalidInputError("structure and matrix sizes differ")
    scale = max(spectral_norm(A), 1.0)
    chains = []
    for lam, sizes in omega.entries:
        p = sizes[0]
        dims = [sum(min(s, i) for s in sizes) for i in range(1, p + 1)]
        kers = _forced_kernels(A, [lam] * p, dims, tol, scale)
        N = A - lam * np.eye(n)
        mine = []
        for s in range(p, 0, -1):
            c = sum(1 for x in sizes if x == s)
            if c == 0:
                continue
            Z = kers[s - 1]
            prev = kers[s - 2] if s > 1 else np.zeros((n, 0), dtype=np.complex128)
            level = [ch[s - 1] for ch in mine]
            D = np.column_stack([prev] + [v[:, None] for v in level]) if level else prev
            if D.shape[1]:
                Qd, _ = np.linalg.qr(D)
                R = Z - Qd @ (Qd.conj().T @ Z)
            else:
                R = Z
            _, _, vh = np.linalg.svd(R)
            for y in vh[:c].conj():
                x = _phase_fix(Z @ y)
                vecs = [x]
                for _ in range(s - 1):
                    vecs.append(N @ vecs[-1])
                mine.append(vecs[::-1])
        chains += [Chain((complex(lam),) * len(v), tuple(v)) for v in mine]
    return ChainSet(tuple(chains), n)


def close_chain(
    target: Chain,
    B,
    mus: Sequence[complex],
    tol: Tolerance = DEFAULT_TOL,
    structure: Optional[JordanStructure] = None,
) -> Chain:
    """Chain of `B` for the eigenvalue sequence `mus`, close to `target`.

    The top vector is the orthogonal projection of the target's top onto
    ``ker prod_j (B - mus[j])``; the rest follow by
    ``g_k = (B - mus[k]) g_{k+1}`` (0-based `mus`). Kernel dimensions come
    from `structure`, detected from `B` when omitted.
    """
    B = as_matrix(B, "B", square=True)
    m = len(target)
    mus = [complex(x) for x in mus]
    if len(mus) != m:
        raise InvalidInputError(f"need {m} eigenvalues for a chain of length {m}, got {len(mus)}")
    omega = structure if structure is not None else jordan_structure(B, tol)
    dims = _kernel_dims(omega, mus)
    if dims[-1] < m:
        raise ChainConstructionError(f"kernel of dimension {dims[-1]} cannot hold a chain of length {m}")
    scale = max(spectral_norm(B), 1.0)
    Z = _forced_kernels(B, mus, dims, tol, scale)[-1]
    top = Z @ (Z.conj().T @ target.top)
    if np.linalg.norm(top) <= tol.rank_rel * np.linalg.norm(target.top):
        raise ChainConstructionError("target top vector is orthogonal to the kernel of B")
    vecs = [top]
    for k in range(m - 1, 0, -1):
        vecs.append(B @ vecs[-1] - mus[k] * vecs[-1])
    vecs = vecs[::-1]
    if np.linalg.norm(vecs[0]) <= tol.rank_rel * max(np.linalg.norm(target.head), 1e-300):
        raise ChainConstructionError("close chain collapsed before reaching an eigenvector")
    return Chain(tuple(mus), tuple(vecs))


def _height_chain(T0, tol):
    """Chain of the upper triangular `T0` ending in ``e1``, as long as possible."""
    lam = complex(T0[0, 0])
    d = np.diag(T0)
    radius = default_cluster_radius(T0, tol)
    idx = next(c for c in _clusters_with_members(d, radius) if 0 in c)
    X, K = _balanced(*triangular_restriction(T0, idx, lam))
    r = K.shape[0]
    e = np.zeros(r, dtype=np.complex128)
    e[0] = 1.0
    # staircase of ranges of K^j, each step one product cut against ||K||
    nk = spectral_norm(K)
    ranges = [np.eye(r, dtype=np.complex128)]
    while len(ranges) < r and nk > 0:
        R = SubspaceBasis.from_span(K @ ranges[-1], tol, r, scale=nk).columns
        if R.shape[1] == 0 or rank_decision(np.column_stack([R, e]), tol, 1.0)[0] > R.shape[1]:
            break
        ranges.append(R)
    h = len(ranges)
    y = e
    for R in ranges[-2::-1]:
        c = np.linalg.lstsq(K @ R, y, rcond=None)[0]
        y = R @ c
    vecs = [X @ y]
    for _ in range(h - 1):
        vecs.append(T0 @ vecs[-1] - lam * vecs[-1])
    return lam, Chain((lam,) * h, tuple(vecs[::-1]))


def _block_index(omega, t, h, step):
    sizes = omega.sizes(t)
    if h not in sizes:
        raise StructureMismatchError(
            f"no Jordan block of size {h} at eigenvalue {omega.entries[t][0]:.6g}", step
        )
    return sizes.index(h)


def _deflate(T0, B, tol, omega_T, omega_B, step=None, strict=True):
    lam, chain = _height_chain(T0, tol)
    t = omega_T.index_of(lam)
    if strict or len(omega_T.entries) == len(omega_B.entries):
        pairing = pair_eigenvalues(omega_T.eigenvalues, omega_B.eigenvalues, "lipschitz")
        if strict and any(
            omega_T.sizes(i) != omega_B.sizes(pairing.partner(i)) for i in range(len(omega_T.entries))
        ):
            raise StructureMismatchError("T0 and B have different Jordan structures", step)
        tb = pairing.partner(t)
    else:
        tb = omega_B.index_of(lam)
    mu = omega_B.entries[tb][0]
    h = h0 = len(chain)
    longest = omega_B.sizes(tb)[0]
    if longest < h:
        # only reachable in lenient mode: B carries a shorter chain here
        warnings.warn(
            f"B has no chain of length {h} at {mu:.6g}; deflating along length {longest}",
            IllConditionedStructureWarning,
            stacklevel=3,
        )
        h = longest
        chain = Chain(chain.eigenvalues[:h], chain.vectors[:h])
    if abs(chain.head[0] - 1.0) > 1e-12:
        chain = Chain(chain.eigenvalues, tuple(v / chain.head[0] for v in chain.vectors))
    g = close_chain(chain, B, (mu,) * h, tol, omega_B)
    V1 = unitary_completion(g.head)
    C = V1.conj().T @ B @ V1
    T1, B1 = T0[1:, 1:], C[1:, 1:]
    new_T = truncate_structure(omega_T, t, _block_index(omega_T, t, h0, step))
    new_B = truncate_structure(omega_B, tb, _block_index(omega_B, tb, h, step))
    return V1, T1, B1, mu, new_T, new_B


def deflation_step(T0, B, tol: Tolerance = DEFAULT_TOL, structure_B: Optional[JordanStructure] = None):
    """One deflation of the triangular `T0` against `B`.

    Returns ``(V1, T1, B1, mu1)``: ``V1`` is unitary with first column
    proportional to an eigenvector of `B` for ``mu1``, ``T1 = T0[1:, 1:]``
    and ``B1`` is the trailing block of ``V1* B V1``.

    The eigenvalue of ``e1`` is paired with an eigenvalue ``mu1`` of `B` and
    the chain of `T0` ending in ``e1`` is matched by a chain of `B` at
    ``mu1``. If `B` only has shorter chains there, the longest one is used
    and an :class:`IllConditionedStructureWarning` is issued.
    """
    T0 = as_matrix(T0, "T0", square=True)
    B = as_matrix(B, "B", square=True)
    if T0.shape != B.shape:
        raise InvalidInputError("T0 and B must have the same size")
    if not is_upper_triangular(T0):
        raise InvalidInputError("T0 must be upper triangular")
    omega_B = structure_B if structure_B is not None else jordan_structure(B, tol)
    V1, T1, B1, mu, _, _ = _deflate(T0, B, tol, jordan_structure(T0, tol), omega_B, strict=False)
    return V1, T1, B1, mu


@dataclass
class MatchResult:
    """A Schur factorization ``(U, T)`` of the perturbed matrix plus diagnostics.

    Unpacks as ``U, T = result``.
    """

    U: np.ndarray
    T: np.ndarray
    distance: float
    input_distance: float
    reference: float
    warnings: Tuple[str, ...] = field(default_factory=tuple)
    residuals: dict = field(default_factory=dict)

    def __iter__(self):
        return iter((self.U, self.T))

    @property
    def ratio(self) -> float:
        """``distance / reference``; 0 when both vanish."""
        if self.reference == 0.0:
            return 0.0 if self.distance == 0.0 else float("inf")
        return self.distance / self.reference


def _residuals(U, T, B):
    n = U.shape[0]
    return {
        "unitarity": spectral_norm(U.conj().T @ U - np.eye(n)),
        "triangularity": spectral_norm(np.tril(T, -1)),
        "reconstruction": spectral_norm(U.conj().T @ B @ U - T),
    }


def lipschitz_match(
    T0,
    B,
    tol: Tolerance = DEFAULT_TOL,
    structure_B: Optional[JordanStructure] = None,
) -> MatchResult:
    """Schur factorization ``(V, T)`` of `B` close to ``(I, T0)``.

    `B` must have the same Jordan structure as the upper triangular `T0`.
    The reported ratio is ``(||I - V|| + ||T - T0||) / ||T0 - B||``.
    """
    T0 = as_matrix(T0, "T0", square=True)
    B = as_matrix(B, "B", square=True)
    if T0.shape != B.shape:
        raise InvalidInputError("T0 and B must have the same size")
    if not is_upper_triangular(T0):
        raise InvalidInputError("T0 must be upper triangular")
    n = T0.shape[0]
    caught = []
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always", IllConditionedStructureWarning)
        omega_T = jordan_structure(T0, tol)
        omega_B = structure_B if structure_B is not None else jordan_structure(B, tol)
        notes = list(omega_T.warnings) + list(omega_B.warnings)
        Vhat = np.eye(n, dtype=np.complex128)
        Tj, Bj = T0, B
        for j in range(n - 1):
            V1, Tj, Bj, _, omega_T, omega_B = _deflate(Tj, Bj, tol, omega_T, omega_B, step=j + 1)
            Vhat[:, j:] = Vhat[:, j:] @ V1
        caught = [str(x.message) for x in w]
    T = Vhat.conj().T @ B @ Vhat
    dist = spectral_norm(np.eye(n) - Vhat) + spectral_norm(T - T0)
    return MatchResult(
        Vhat,
        T,
        dist,
        spectral_norm(B - T0),
        spectral_norm(B - T0),
        tuple(notes + caught),
        _residuals(Vhat, T, B),
    )


def schur_distance(P0: SchurPair, P1: SchurPair) -> float:
    """``||U1 - U0|| + ||T1 - T0||``."""
    if P0.U.shape != P1.U.shape:
        raise InvalidInputError("Schur pairs of different sizes")
    return spectral_norm(P1.U - P0.U) + spectral_norm(P1.T - P0.T)
