"""Perturbation generators, exponent fits and reproducible experiments.

Three perturbation classes are generated: similarity perturbations that keep
the Jordan structure, eigenvalue splittings that keep only the GK numbers,
and unstructured additive noise. :func:`run_experiment` sweeps a list of
scales, matches each perturbed matrix against the base and fits the slope of
``log(schur distance)`` against ``log(input distance)``.
"""

import csv
import io
import itertools
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from .errors import (
    ExperimentFailedError,
    GKSchurError,
    IllConditionedStructureWarning,
    InvalidInputError,
    UnsupportedSizeError,
)
from .frobenius import holder_match, triangular_jordan
from .matching import jordan_chains, lipschitz_match, pair_eigenvalues
from .numcore import (
    DEFAULT_TOL,
    Tolerance,
    as_matrix,
    reorder_schur,
    schur_decompose,
    spectral_norm,
)
from .structure import (
    gk_numbers,
    jordan_structure,
    same_gk,
    same_jordan_structure,
)

__all__ = [
    "KINDS",
    "PerturbationSpec",
    "perturb",
    "perturb_same_jordan",
    "perturb_same_gk",
    "perturb_generic",
    "fit_exponent",
    "ExperimentReport",
    "run_experiment",
    "min_schur_distance_search",
    "jordan_block",
    "sqrt_splitting_pair",
    "deflation_pitfall_pair",
    "gk_split_pair",
    "gk_figure_matrix",
    "REPRODUCTIONS",
    "reproduce",
]

KINDS = ("same_jordan", "same_gk", "generic")
MAX_FAILURE_RATE = 0.2


@dataclass
class PerturbationSpec:
    """Recipe for one perturbed matrix.

    `direction` replaces the random unit-norm direction ``E``. For
    ``same_gk``, `diagonal` fixes the new eigenvalue at every diagonal
    position of the base's triangular form, and `conjugate` controls the
    final similarity by ``I + scale E``.
    """

    kind: str
    scale: float
    seed: int
    base: np.ndarray
    direction: Optional[np.ndarray] = None
    diagonal: Optional[Sequence[complex]] = None
    conjugate: bool = True

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidInputError(f"unknown perturbation kind {self.kind!r}; expected one of {KINDS}")
        if not np.isfinite(self.scale) or self.scale < 0:
            raise InvalidInputError("scale must be a finite nonnegative number")
        if not 0 <= int(self.seed) < 2**64:
            raise InvalidInputError("seed must be an unsigned 64-bit integer")
        self.base = as_matrix(self.base, "base", square=True)
        if self.direction is not None:
            E = as_matrix(self.direction, "direction", square=True)
            if E.shape != self.base.shape:
                raise InvalidInputError("direction and base sizes differ")
            self.direction = E / spectral_norm(E)

    def rng(self):
        return np.random.default_rng(int(self.seed))

    def unit_direction(self):
        if self.direction is not None:
            return self.direction
        n = self.base.shape[0]
        g = self.rng()
        E = g.standard_normal((n, n)) + 1j * g.standard_normal((n, n))
        return E / spectral_norm(E)


def jordan_block(lam, k):
    return lam * np.eye(k, dtype=np.complex128) + np.diag(np.ones(k - 1), 1)


def _jordan_basis(A, tol):
    """Jordan basis ``P0`` and Jordan matrix ``J`` with ``A = P0 J P0^-1``."""
    omega = jordan_structure(A, tol)
    chains = jordan_chains(A, omega, tol)
    P0 = chains.matrix()
    J = scipy.linalg.block_diag(*[jordan_block(c.eigenvalues[0], len(c)) for c in chains.chains])
    return omega, P0, J


def _check(ok, message):
    if not ok:
        warnings.warn(message, IllConditionedStructureWarning, stacklevel=3)


def perturb_same_jordan(spec: PerturbationSpec, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """``A = P0 W J W^-1 P0^-1`` with ``W = I + scale E``.

    Computed as ``base + P0 (W J W^-1 - J) P0^-1`` so that scale 0 returns
    the base unchanged.
    """
    if spec.kind != "same_jordan":
        raise InvalidInputError("perturb_same_jordan needs kind 'same_jordan'")
    base = spec.base
    if spec.scale == 0:
        return base.copy()
    n = base.shape[0]
    omega, P0, J = _jordan_basis(base, tol)
    W = np.eye(n) + spec.scale * spec.unit_direction()
    D = W @ J @ np.linalg.inv(W) - J
    A = base + P0 @ np.linalg.solve(P0.T, D.T).T
    _check(
        same_jordan_structure(jordan_structure(A, tol), omega),
        "perturbed matrix is not detected with the base's Jordan structure",
    )
    return A


def _split_values(lam, count, scale, rng):
    # lam itself first, then equally spaced points on the circle of radius `scale`
    phi = rng.uniform()
    return [lam] + [lam + scale * np.exp(2j * np.pi * (k / max(count - 1, 1) + phi)) for k in range(count - 1)]


def perturb_same_gk(spec: PerturbationSpec, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Split repeated eigenvalues while keeping the GK numbers.

    The base is brought to triangular form ``T0`` and factored as
    ``T0 S0 = S0 J0hat``. Inside invariant factor ``j`` the positions of an
    eigenvalue ``lam`` receive the first ``m_j(lam)`` entries of one common
    sequence of values within `scale` of ``lam``. Since ``m_j(lam)`` does not
    increase with ``j``, every new value gets non-increasing chain lengths
    across factors and each GK number is kept. The diagonal change is
    transplanted by ``S0``, and the result is optionally conjugated by
    ``I + scale E``.
    """
    if spec.kind != "same_gk":
        raise InvalidInputError("perturb_same_gk needs kind 'same_gk'")
    base = spec.base
    if spec.scale == 0 and spec.diagonal is None:
        return base.copy()
    n = base.shape[0]
    rng = spec.rng()
    pair = schur_decompose(base, tol=tol)
    T0 = pair.T
    omega0 = jordan_structure(T0, tol)
    fac = triangular_jordan(T0, omega0, tol)
    d0 = np.diag(T0)
    if spec.diagonal is not None:
        new = np.asarray(spec.diagonal, dtype=np.complex128)
        if new.shape != (n,):
            raise InvalidInputError(f"diagonal must have {n} entries")
    elif all(sum(s) == 1 for _, s in omega0.entries):
        warnings.warn(
            "no repeated eigenvalue to split; translating eigenvalues instead",
            IllConditionedStructureWarning,
            stacklevel=2,
        )
        new = d0 + spec.scale * np.exp(2j * np.pi * rng.uniform(size=n))
    else:
        seqs = {
            t: _split_values(lam, sizes[0], spec.scale, rng) for t, (lam, sizes) in enumerate(omega0.entries)
        }
        owner = [omega0.index_of(x) for x in d0]
        new = np.empty(n, dtype=np.complex128)
        for cols in fac.block_map:
            used = {}
            for s in cols:
                t = owner[s]
                new[s] = seqs[t][used.get(t, 0)]
                used[t] = used.get(t, 0) + 1
    J1 = fac.J0hat.copy()
    J1[np.diag_indices(n)] = new
    dJ = J1 - fac.J0hat
    S0 = fac.S0
    B1 = T0 + np.triu(scipy.linalg.solve_triangular(S0.T, (S0 @ dJ).T, lower=True).T)
    B1[np.diag_indices(n)] = new
    g0 = gk_numbers(omega0)
    _check(same_gk(gk_numbers(jordan_structure(B1, tol)), g0), "split matrix lost the base's GK numbers")
    if spec.conjugate and spec.scale > 0:
        W = np.eye(n) + spec.scale * spec.unit_direction()
        B1 = W @ np.linalg.solve(W.T, B1.T).T
    return pair.U @ B1 @ pair.U.conj().T


def perturb_generic(spec: PerturbationSpec) -> np.ndarray:
    """``base + scale E``."""
    if spec.kind != "generic":
        raise InvalidInputError("perturb_generic needs kind 'generic'")
    if spec.scale == 0:
        return spec.base.copy()
    return spec.base + spec.scale * spec.unit_direction()


def perturb(spec: PerturbationSpec, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    if spec.kind == "same_jordan":
        return perturb_same_jordan(spec, tol)
    if spec.kind == "same_gk":
        return perturb_same_gk(spec, tol)
    return perturb_generic(spec)


def fit_exponent(points) -> Tuple[float, float]:
    """Least-squares slope and intercept of ``log d`` against ``log h``."""
    pts = np.asarray(list(points), dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 3:
        raise InvalidInputError("need at least three (h, d) points")
    if np.any(pts <= 0) or not np.all(np.isfinite(pts)):
        raise InvalidInputError("fit points must be positive and finite")
    slope, intercept = np.polyfit(np.log(pts[:, 0]), np.log(pts[:, 1]), 1)
    return float(slope), float(intercept)


@dataclass
class ExperimentReport:
    """Per-scale worst cases and the fitted exponent.

    ``points`` holds ``(scale, input_distance, schur_distance)`` with the
    maxima over successful trials. The fit uses input distance as abscissa;
    it is NaN when fewer than three usable points exist.
    """

    points: List[Tuple[float, float, float]]
    fitted_exponent: float
    fitted_log_constant: float
    mode: str
    warnings: List[str] = field(default_factory=list)
    failures: int = 0
    trials: int = 0

    def to_json(self) -> dict:
        def num(x):
            return None if not np.isfinite(x) else float(x)

        return {
            "mode": self.mode,
            "points": [[float(a), float(b), float(c)] for a, b, c in self.points],
            "fitted_exponent": num(self.fitted_exponent),
            "fitted_log_constant": num(self.fitted_log_constant),
            "failures": self.failures,
            "trials": self.trials,
            "warnings": list(self.warnings),
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["scale", "input_distance", "schur_distance"])
        for row in self.points:
            w.writerow([repr(float(x)) for x in row])
        return buf.getvalue()


def _subseed(seed, i, t):
    return int(np.random.SeedSequence([int(seed), i, t]).generate_state(1, np.uint64)[0])


def run_experiment(
    base,
    kind: str,
    scales: Sequence[float],
    trials: int = 1,
    seed: int = 0,
    tol: Tolerance = DEFAULT_TOL,
    workers: int = 1,
    **spec_options,
) -> ExperimentReport:
    """Match perturbations of `base` at each scale and fit the distance exponent.

    ``same_jordan`` perturbations use the Lipschitz matcher; the other kinds
    use the Hölder matcher. Failed trials become warnings; more than 20%
    failures raise :class:`ExperimentFailedError`.
    """
    if kind not in KINDS:
        raise InvalidInputError(f"unknown kind {kind!r}")
    if trials < 1:
        raise InvalidInputError("trials must be at least 1")
    scales = [float(h) for h in scales]
    if not scales or any(h <= 0 for h in scales):
        raise InvalidInputError("scales must be a nonempty list of positive numbers")
    base = as_matrix(base, "base", square=True)
    pair = schur_decompose(base, tol=tol)
    U0, T0 = pair.U, pair.T
    mode = "lipschitz" if kind == "same_jordan" else "holder"
    matcher = lipschitz_match if mode == "lipschitz" else holder_match

    def one(task):
        i, t = task
        spec = PerturbationSpec(kind, scales[i], _subseed(seed, i, t), base, **spec_options)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", IllConditionedStructureWarning)
            A = perturb(spec, tol)
        try:
            res = matcher(T0, U0.conj().T @ A @ U0, tol)
        except GKSchurError as exc:
            return i, t, spectral_norm(A - base), None, f"scale {scales[i]:.3g} trial {t}: {exc}"
        return i, t, spectral_norm(A - base), res.distance, None

    tasks = [(i, t) for i in range(len(scales)) for t in range(trials)]
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(one, tasks))
    else:
        results = [one(task) for task in tasks]

    notes, failures = [], 0
    best = {}
    for i, t, din, dout, err in results:
        if err is not None:
            failures += 1
            notes.append(err)
            continue
        cur = best.get(i, (0.0, 0.0))
        best[i] = (max(cur[0], din), max(cur[1], dout))
    if failures > MAX_FAILURE_RATE * len(tasks):
        raise ExperimentFailedError(f"{failures} of {len(tasks)} trials failed: {notes[:3]}")
    points = [(scales[i], *best[i]) for i in sorted(best)]
    usable = [(a, b) for _, a, b in points if a > 0 and b > 0]
    slope = intercept = float("nan")
    if len(usable) >= 3:
        slope, intercept = fit_exponent(usable)
    else:
        notes.append(f"fit skipped: {len(usable)} usable point(s)")
    return ExperimentReport(points, slope, intercept, mode, notes, failures, len(tasks))


def _phase_objective(U, T, T0, U0, theta):
    D = np.exp(1j * theta)
    return spectral_norm(U * D[np.newaxis, :] - U0) + spectral_norm(
        D.conj()[:, np.newaxis] * T * D[np.newaxis, :] - T0
    )


def min_schur_distance_search(T0, A, budget: int = 200, U0=None, seed: int = 0) -> float:
    """Upper bound on ``inf ||U - U0|| + ||T - T0||`` over Schur factorizations of `A`.

    Tries every ordering of the eigenvalues along the diagonal, starts each
    from the diagonal phases that make ``diag(U* U0)`` real and positive,
    then spends `budget` random phase moves per ordering on local descent.
    `U0` defaults to the identity. The true infimum can only be smaller.
    """
    T0 = as_matrix(T0, "T0", square=True)
    A = as_matrix(A, "A", square=True)
    n = T0.shape[0]
    if n > 5:
        raise UnsupportedSizeError(f"search is limited to n <= 5, got {n}")
    if A.shape != T0.shape:
        raise InvalidInputError("T0 and A must have the same size")
    U0 = np.eye(n, dtype=np.complex128) if U0 is None else as_matrix(U0, "U0", square=True)
    rng = np.random.default_rng(seed)
    pair = schur_decompose(A)
    eig = np.diag(pair.T)
    best = np.inf
    seen = set()
    for perm in itertools.permutations(range(n)):
        order = eig[list(perm)]
        if tuple(order) in seen:
            continue
        seen.add(tuple(order))
        U, T = reorder_schur(pair.U, pair.T, order)
        theta = np.angle(np.einsum("ij,ij->j", U.conj(), U0))
        val = _phase_objective(U, T, T0, U0, theta)
        step = 0.5
        for _ in range(budget):
            trial = theta + step * rng.standard_normal(n)
            v = _phase_objective(U, T, T0, U0, trial)
            if v < val:
                theta, val = trial, v
            else:
                step *= 0.97
        best = min(best, val)
    return float(best)


# worked examples: the CLI names below are fixed by the command-line interface


def sqrt_splitting_pair(eps):
    A0 = np.array([[0, 0], [1, 0]], dtype=np.complex128)
    A = np.array([[0, eps], [1, 0]], dtype=np.complex128)
    return A0, A


def deflation_pitfall_pair(eps):
    T0 = np.zeros((3, 3), dtype=np.complex128)
    T0[0, 1] = 1.0
    B = T0.copy()
    B[2, 1] = eps
    return T0, B


def gk_split_pair(eps):
    T0 = scipy.linalg.block_diag(jordan_block(0, 4), jordan_block(0, 3))
    B = T0.copy()
    B[1, 1], B[2, 2], B[6, 6] = -eps, eps, eps
    return T0, B


def gk_figure_matrix(lam=1.0, mu=3.0, eta=5.0):
    blocks = [(lam, 2), (lam, 2), (lam, 2), (lam, 1), (mu, 2), (eta, 1), (eta, 1), (eta, 1)]
    return scipy.linalg.block_diag(*[jordan_block(x, k) for x, k in blocks])


def _repro_gk_figure():
    omega = jordan_structure(gk_figure_matrix())
    g = gk_numbers(omega)
    return {"structure": omega.to_json(), "m": list(g.m), "k": list(g.k)}


def _repro_sqrt_splitting():
    eps = [10.0**-p for p in range(2, 11)]
    dist = []
    for e in eps:
        A0, A = sqrt_splitting_pair(e)
        dist.append(pair_eigenvalues(np.linalg.eigvals(A0), np.linalg.eigvals(A), "holder").max_mismatch)
    slope, intercept = fit_exponent(zip(eps, dist))
    return {"eps": eps, "max_pairing_distance": dist, "fitted_exponent": slope, "fitted_log_constant": intercept}


def _repro_deflation_pitfall(eps=1e-3):
    T0, B = deflation_pitfall_pair(eps)
    res = lipschitz_match(T0, B)
    from .matrixio import matrix_to_json

    return {
        "eps": eps,
        "V": matrix_to_json(res.U),
        "T": matrix_to_json(res.T),
        "T12": float(res.T[0, 1].real),
        "expected_T12": float(np.sqrt(1 + eps**2)),
        "distance": res.distance,
    }


def _repro_gk_split():
    eps = [10.0**-p for p in range(2, 10)]
    T0, _ = gk_split_pair(eps[0])
    rows = []
    for e in eps:
        _, B = gk_split_pair(e)
        res = holder_match(T0, B)
        rows.append({"eps": e, "distance": res.distance, "residuals": res.residuals})
    slope, _ = fit_exponent((r["eps"], r["distance"]) for r in rows)
    _, B = gk_split_pair(eps[0])
    return {
        "gk_T0": list(gk_numbers(jordan_structure(T0)).m),
        "gk_B": list(gk_numbers(jordan_structure(B)).m),
        "gk_T1": list(gk_numbers(jordan_structure(T0[1:, 1:])).m),
        "gk_B1": list(gk_numbers(jordan_structure(B[1:, 1:])).m),
        "runs": rows,
        "fitted_exponent": slope,
    }


REPRODUCTIONS = {
    "example-2.4": _repro_sqrt_splitting,
    "pitfall-3": _repro_deflation_pitfall,
    "example-4.1": _repro_gk_split,
    "gk-figure": _repro_gk_figure,
}


def reproduce(name: str) -> dict:
    if name not in REPRODUCTIONS:
        raise InvalidInputError(f"unknown reproduction {name!r}; choose from {sorted(REPRODUCTIONS)}")
    return REPRODUCTIONS[name]()
