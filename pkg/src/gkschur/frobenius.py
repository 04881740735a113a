"""Triangular invariant-factor decomposition and Hölder-type Schur matching.

An upper triangular ``T0`` is written as ``T0 S0 = S0 J0hat`` with ``S0``
upper triangular and ``J0hat`` carrying the diagonal of ``T0`` plus one unit
entry per chain link. The columns of ``S0`` are grouped by invariant factor:
factor ``j`` collects the ``j``-th longest Jordan chain of every eigenvalue
into one cyclic chain of length ``m_j``. :func:`holder_match` rebuilds these
cyclic chains for a perturbed matrix with the same GK numbers and turns them
into a nearby Schur factorization through QR.
"""

import warnings
from dataclasses import dataclass
from typing import Dict, List

import numpy as np
import scipy.linalg

from .errors import (
    IllConditionedStructureWarning,
    InvalidInputError,
    NumericalFailureError,
    StructureMismatchError,
)
from .matching import Chain, MatchResult, _residuals, close_chain, pair_eigenvalues
from .matrixio import matrix_from_json, matrix_to_json
from .numcore import (
    DEFAULT_TOL,
    Tolerance,
    as_matrix,
    is_upper_triangular,
    qr_decompose,
    rank_decision,
    spectral_norm,
)
from .structure import (
    GKVector,
    JordanStructure,
    _balanced,
    _clusters_with_members,
    default_cluster_radius,
    gk_numbers,
    jordan_structure,
    same_gk,
    triangular_restriction,
)

__all__ = [
    "TriangularJordanFactorization",
    "invariant_factor_degrees",
    "is_nonderogatory",
    "triangular_jordan",
    "holder_match",
]


def invariant_factor_degrees(g: GKVector) -> List[int]:
    """Degrees of the invariant factors: the nonzero GK numbers."""
    return [int(x) for x in g.m if x > 0]


def is_nonderogatory(omega: JordanStructure) -> bool:
    return all(len(sizes) == 1 for _, sizes in omega.entries)


@dataclass
class TriangularJordanFactorization:
    """``T0 S0 = S0 J0hat`` with both factors upper triangular.

    ``block_map[j]`` lists the 0-based columns ``s_1 > s_2 > ...`` of
    invariant factor ``j``; ``J0hat[s_{t+1}, s_t] = 1``.
    """

    S0: np.ndarray
    J0hat: np.ndarray
    block_map: List[List[int]]

    def residual(self, T0) -> float:
        return spectral_norm(T0 @ self.S0 - self.S0 @ self.J0hat)

    def degrees(self) -> List[int]:
        return sorted((len(b) for b in self.block_map), reverse=True)

    def to_json(self) -> dict:
        return {
            "S0": matrix_to_json(self.S0),
            "J0hat": matrix_to_json(self.J0hat),
            "block_map": [list(b) for b in self.block_map],
        }

    @classmethod
    def from_json(cls, obj) -> "TriangularJordanFactorization":
        return cls(
            matrix_from_json(obj["S0"]),
            matrix_from_json(obj["J0hat"]),
            [[int(s) for s in b] for b in obj["block_map"]],
        )


def _link_pattern(K, tol, scale):
    """0/1 link pattern of the strictly upper triangular nilpotent `K`.

    Ranks of the lower-left corners ``K[i:, :j]`` do not change under upper
    triangular similarity; for a pattern they count its ones inside the
    corner. Returns ``{b: a}`` for every unit at ``(a, b)`` and whether a
    rank decision was close.
    """
    r = K.shape[0]
    rk = np.zeros((r + 1, r + 1), dtype=int)
    ambiguous = False
    for i in range(r):
        for j in range(1, r + 1):
            rk[i, j], amb = rank_decision(K[i:, :j], tol, scale)
            ambiguous |= amb
    links = {}
    for a in range(r):
        for b in range(a + 1, r):
            ones = rk[a, b + 1] - rk[a + 1, b + 1] - rk[a, b] + rk[a + 1, b]
            if ones == 1:
                links[b] = a
            elif ones != 0:
                raise StructureMismatchError("corner ranks do not describe a link pattern")
    if len(set(links.values())) != len(links):
        raise StructureMismatchError("corner ranks do not describe a link pattern")
    return links, ambiguous


def _pattern_chains(K, links, tol, scale):
    """Chains of `K` whose vectors have prescribed last nonzero coordinates.

    For every path ``t -> links[t] -> ...`` of the pattern, solves for the
    minimum-norm ``x`` with ``x[t] = 1``, nothing below ``t``, ``K^i x``
    vanishing below the ``i``-th node of the path, and ``K^L x = 0``.
    Returns a list of chains, each a list of ``(position, vector)`` from the
    top down.
    """
    r = K.shape[0]
    targets = set(links.values())
    out = []
    for t in sorted((b for b in range(r) if b not in targets), reverse=True):
        path = [t]
        while path[-1] in links:
            path.append(links[path[-1]])
        rows, rhs = [], []
        P = np.eye(r, dtype=np.complex128)
        for i, node in enumerate(path + [-1]):
            if i > 0:
                P = K @ P
            for q in range(node + 1, r):
                rows.append(P[q, :t])
                rhs.append(-P[q, t])
        x = np.zeros(r, dtype=np.complex128)
        x[t] = 1.0
        if t > 0 and rows:
            A = np.array(rows)
            y = np.linalg.lstsq(A, np.array(rhs), rcond=None)[0]
            if np.linalg.norm(A @ y - rhs) > tol.residual_rel * 1e3 * max(scale, 1.0) * max(1.0, np.linalg.norm(y)):
                raise StructureMismatchError("matrix is not triangularly similar to a link pattern")
            x[:t] = y
        vecs, v = [], x
        for node in path:
            vecs.append((node, v))
            v = K @ v
        out.append(vecs)
    return out


def _eigen_chains(T0, tol):
    """Per eigenvalue cluster, chains of ``T0`` with distinct leading rows.

    Returns ``{cluster_index: [chain, ...]}``, chains sorted by length
    (longest first), each a list of ``(row, vector)`` from the top down, and
    whether any rank decision was close.
    """
    n = T0.shape[0]
    d = np.diag(T0)
    radius = default_cluster_radius(T0, tol)
    scale = spectral_norm(T0)
    chains, ambiguous = {}, False
    for c, idx in enumerate(_clusters_with_members(d, radius)):
        idx = sorted(idx)
        lam = complex(d[idx].mean())
        X, K = _balanced(*triangular_restriction(T0, idx, lam))
        ref = max(spectral_norm(T0 - lam * np.eye(n)), scale)
        links, amb = _link_pattern(K, tol, ref)
        ambiguous |= amb
        found = _pattern_chains(K, links, tol, ref)
        mapped = [[(idx[p], X @ v) for p, v in ch] for ch in found]
        mapped.sort(key=lambda ch: (-len(ch), -ch[0][0]))
        chains[c] = mapped
    return chains, ambiguous


def triangular_jordan(T0, omega: JordanStructure = None, tol: Tolerance = DEFAULT_TOL) -> TriangularJordanFactorization:
    """Upper triangular ``S0`` and ``J0hat`` with ``T0 S0 = S0 J0hat``.

    Each invariant factor ``j`` starts from the sum of the tops of the
    ``j``-th longest chains over all eigenvalues, normalized to unit norm,
    and descends by ``(T0 - T0[s, s])`` where ``s`` is the last nonzero row
    of the current vector.
    """
    T0 = as_matrix(T0, "T0", square=True)
    if not is_upper_triangular(T0):
        raise InvalidInputError("T0 must be upper triangular")
    n = T0.shape[0]
    chains, ambiguous = _eigen_chains(T0, tol)
    if ambiguous:
        warnings.warn("close rank decision in the link pattern", IllConditionedStructureWarning, stacklevel=2)
    if omega is not None:
        found = sorted((sorted((len(ch) for ch in v), reverse=True) for v in chains.values() if v), key=len)
        want = sorted((list(s) for _, s in omega.entries), key=len)
        if sorted(map(tuple, found)) != sorted(map(tuple, want)):
            raise StructureMismatchError("structure of T0 differs from the given structure")
    S0 = np.zeros((n, n), dtype=np.complex128)
    J = np.zeros((n, n), dtype=np.complex128)
    J[np.diag_indices(n)] = np.diag(T0)
    block_map = []
    k1 = max(len(v) for v in chains.values())
    for j in range(k1):
        parts = [v[j] for v in chains.values() if len(v) > j]
        # level[c] counts how far component c has descended along its chain
        level = [0] * len(parts)
        v = sum(p[0][1] for p in parts)
        v = v / np.linalg.norm(v)
        cols = []
        for _ in range(sum(len(p) for p in parts)):
            live = [c for c in range(len(parts)) if level[c] < len(parts[c])]
            c = max(live, key=lambda c: parts[c][level[c]][0])
            s = parts[c][level[c]][0]
            v = v.copy()
            v[s + 1 :] = 0.0
            S0[:, s] = v
            cols.append(s)
            v = T0 @ v - T0[s, s] * v
            level[c] += 1
        for a, b in zip(cols[1:], cols[:-1]):
            J[a, b] = 1.0
        block_map.append(cols)
    fac = TriangularJordanFactorization(S0, J, block_map)
    res = fac.residual(T0)
    if res > tol.residual_rel * max(spectral_norm(T0), 1.0):
        raise NumericalFailureError(f"residual {res:.3g} of T0 S0 = S0 J0hat exceeds tolerance")
    return fac


def _assign_mus(omega_T, omega_B):
    """Eigenvalues of `B` for each cluster of `T0`, checked against the block sizes.

    Returns ``{t: [(mu, sizes), ...]}``.
    """
    lam_full = [lam for lam, s in omega_T.entries for _ in range(sum(s))]
    owner_T = [t for t, (_, s) in enumerate(omega_T.entries) for _ in range(sum(s))]
    mu_full = [mu for mu, s in omega_B.entries for _ in range(sum(s))]
    owner_B = [b for b, (_, s) in enumerate(omega_B.entries) for _ in range(sum(s))]
    pairing = pair_eigenvalues(lam_full, mu_full, "holder")
    target = {}
    for i, k in zip(pairing.order0, pairing.order1):
        target.setdefault(owner_B[k], set()).add(owner_T[i])
    out = {t: [] for t in range(len(omega_T.entries))}
    for b, ts in target.items():
        if len(ts) != 1:
            raise StructureMismatchError(
                f"eigenvalue {omega_B.entries[b][0]:.6g} of B is split between clusters of T0"
            )
        out[ts.pop()].append(omega_B.entries[b])
    for t, (lam, sizes) in enumerate(omega_T.entries):
        width = max([len(sizes)] + [len(s) for _, s in out[t]])
        for j in range(width):
            mine = sizes[j] if j < len(sizes) else 0
            theirs = sum(s[j] for _, s in out[t] if j < len(s))
            if mine != theirs:
                raise StructureMismatchError(
                    f"block sizes at eigenvalue {lam:.6g} are not matched by the eigenvalues of B"
                )
    return out


def holder_match(T0, B, tol: Tolerance = DEFAULT_TOL) -> MatchResult:
    """Schur factorization ``(Q, T)`` of `B` close to ``(I, T0)``.

    `B` must share the GK numbers of the upper triangular `T0`, with each
    eigenvalue of `T0` split into eigenvalues of `B` whose ``j``-th block
    sizes add up to those of `T0`. The reference scale is
    ``||B - T0||^(1/n)``.
    """
    T0 = as_matrix(T0, "T0", square=True)
    B = as_matrix(B, "B", square=True)
    if T0.shape != B.shape:
        raise InvalidInputError("T0 and B must have the same size")
    if not is_upper_triangular(T0):
        raise InvalidInputError("T0 must be upper triangular")
    n = T0.shape[0]
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", IllConditionedStructureWarning)
        omega_T = jordan_structure(T0, tol)
        omega_B = jordan_structure(B, tol)
        if not same_gk(gk_numbers(omega_T), gk_numbers(omega_B)):
            raise StructureMismatchError(
                f"GK numbers differ: {gk_numbers(omega_T).m} vs {gk_numbers(omega_B).m}"
            )
        mus_for = _assign_mus(omega_T, omega_B)
        fac = triangular_jordan(T0, omega_T, tol)

        d = np.diag(T0)
        radius = default_cluster_radius(T0, tol)
        cluster_of = {}
        for idx in _clusters_with_members(d, radius):
            t = omega_T.index_of(d[idx].mean())
            for p in idx:
                cluster_of[p] = t

        S = np.zeros((n, n), dtype=np.complex128)
        J = np.zeros((n, n), dtype=np.complex128)
        mu_diag = np.zeros(n, dtype=np.complex128)
        for j, cols in enumerate(fac.block_map):
            # the j-th blocks of the B eigenvalues fill the positions of their T0 cluster
            pools: Dict[int, List[complex]] = {}
            for t, entries in mus_for.items():
                pools[t] = [mu for mu, s in entries if j < len(s) for _ in range(s[j])]
            for s in cols:
                mu_diag[s] = pools[cluster_of[s]].pop(0)
            chain = Chain(
                tuple(complex(T0[s, s]) for s in cols[::-1]),
                tuple(fac.S0[:, s] for s in cols[::-1]),
            )
            g = close_chain(chain, B, [mu_diag[s] for s in cols[::-1]], tol, omega_B)
            for s, vec in zip(cols[::-1], g.vectors):
                S[:, s] = vec
            for a, b in zip(cols[1:], cols[:-1]):
                J[a, b] = 1.0
        J[np.diag_indices(n)] = mu_diag

        Q, R = qr_decompose(S, tol)
        # for B = T0 the QR of S0 has Q = diag of the phases of S0; undo them
        ph = np.diag(fac.S0) / np.abs(np.diag(fac.S0))
        Q = Q * ph.conj()[np.newaxis, :]
        R = ph[:, np.newaxis] * R
        T = scipy.linalg.solve_triangular(R.T, (R @ J).T, lower=True).T
        notes = list(omega_T.warnings) + list(omega_B.warnings)
    notes += [str(w.message) for w in caught]
    dist = spectral_norm(np.eye(n) - Q) + spectral_norm(T - T0)
    diff = spectral_norm(B - T0)
    return MatchResult(Q, T, dist, diff, diff ** (1.0 / n), tuple(notes), _residuals(Q, T, B))
