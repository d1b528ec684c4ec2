"""Perturbation theory around critical points.

A stiffness perturbation K -> K + eps * DK (damping untouched) splits a size-M
Jordan block at omega_j into M simple eigenvalues

    omega_k = omega_j + lambda * zeta_k,
    lambda = (eps * xi)**(1/M),   zeta_k = exp(2 pi i k / M),

an equiangular star whose radius grows like eps**(1/M) and whose single
controlling number is the coordinate-space matrix element

    xi = f_{j,0}^x . DK . f_{j,0}^x        (x superscript: position part).

Flipping the sign of eps rotates the star by pi/M.  The split eigenvectors
are f_k = sum_n (lambda zeta_k)^n f_{j,n} with bilinear norms
M (lambda zeta_k)^(M-1).

When xi vanishes (non-generic direction) one eigenvalue stays put at leading
order while the other M-1 split like a generic block of size M-1 with
Delta_omega^(M-1) = 2 eps xi', where xi' = f_{j,1}^x . DK . f_{j,0}^x.

The determinant route offers an independent check: expanding
det(H(eps) - omega) in eps, the linear coefficient normalized by the
spectator factor prod_(l != j) (omega_j - omega_l)^(M_l) equals -xi.

Higher orders shift the xi term into the unperturbed operator; the residual
matrix elements, transformed to the split basis, give corrections of order
lambda^2 per eigenvalue.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .jordan import JordanBlock, Spectrum, compute_spectrum
from .linalg import ArgumentError, Tolerances, char_poly, poly_roots
from .model import OscillatorSystem, bilinear, build_system, evolution_operator

GENERICITY_FACTOR = 1e-8


class NonGenericPerturbationError(RuntimeError):
    """xi vanishes at this scale; use the non-generic splitting path."""


class HigherOrderNonGenericError(RuntimeError):
    """Both xi and xi' vanish; fall back to exact diagonalization."""


class MatchingAmbiguityError(RuntimeError):
    """Eigenvalue shifts too large to assign to the unperturbed cluster."""


@dataclass(frozen=True)
class Perturbation:
    """A stiffness-only perturbation direction and magnitude."""

    delta_k: np.ndarray
    epsilon: float

    def __post_init__(self):
        dk = np.asarray(self.delta_k, dtype=float)
        if dk.ndim != 2 or dk.shape[0] != dk.shape[1]:
            raise ArgumentError("delta_k must be square")
        if np.max(np.abs(dk - dk.T)) > 1e-12 * max(1.0, np.max(np.abs(dk))):
            raise ArgumentError("delta_k must be symmetric")
        object.__setattr__(self, "delta_k", dk)


def delta_h(delta_k) -> np.ndarray:
    """Phase-space form of a stiffness perturbation: i[[0,0],[-DK,0]]."""
    dk = np.asarray(delta_k, dtype=float)
    n = dk.shape[0]
    out = np.zeros((2 * n, 2 * n), dtype=complex)
    out[n:, :n] = -dk
    return 1j * out


def xi_generic(block: JordanBlock, delta_k) -> complex:
    """xi from the coordinate parts of the eigenvector."""
    dk = np.asarray(delta_k, dtype=float)
    n = dk.shape[0]
    u0 = block.chain[0][:n]
    return complex(u0 @ dk @ u0)


def xi_bilinear(sys: OscillatorSystem, block: JordanBlock, delta_k) -> complex:
    """xi via the phase-space bilinear form (f_0, DH f_0); cross-check route."""
    dh = delta_h(delta_k)
    return bilinear(sys, block.chain[0], dh @ block.chain[0])


def xi_prime(block: JordanBlock, delta_k) -> complex:
    """xi' = f_{j,1}^x . DK . f_{j,0}^x, controlling non-generic splitting."""
    if block.size < 2:
        raise ArgumentError("xi' needs a block of size at least 2")
    dk = np.asarray(delta_k, dtype=float)
    n = dk.shape[0]
    return complex(block.chain[1][:n] @ dk @ block.chain[0][:n])


def _genericity_scale(block: JordanBlock, delta_k) -> float:
    dk = np.asarray(delta_k, dtype=float)
    return float(
        np.linalg.norm(dk, 2) * np.linalg.norm(block.chain[0]) ** 2
    )


def is_generic(block: JordanBlock, delta_k) -> bool:
    return abs(xi_generic(block, delta_k)) > GENERICITY_FACTOR * _genericity_scale(
        block, delta_k
    )


@dataclass
class SplitPrediction:
    """First-order splitting of one block under a generic perturbation."""

    xi: complex
    lam: complex
    omega: complex
    size: int
    shifts: np.ndarray
    eigenvalues: np.ndarray
    split_vectors: np.ndarray
    norms: np.ndarray


def predict_splitting(block: JordanBlock, delta_k, eps: float) -> SplitPrediction:
    """Equiangular first-order prediction for a generic perturbation.

    Raises NonGenericPerturbationError when |xi| falls under the scale-aware
    threshold; callers should then use predict_splitting_nongeneric.
    """
    xi = xi_generic(block, delta_k)
    if abs(xi) <= GENERICITY_FACTOR * _genericity_scale(block, delta_k):
        raise NonGenericPerturbationError(
            f"xi = {xi:.3e} is below the genericity threshold; use the "
            "non-generic path"
        )
    m = block.size
    lam = complex(eps * xi) ** (1.0 / m)
    zeta = np.exp(2j * np.pi * np.arange(m) / m)
    shifts = lam * zeta
    vectors = np.array(
        [
            sum((lam * z) ** n * block.chain[n] for n in range(m))
            for z in zeta
        ]
    )
    norms = m * (lam * zeta) ** (m - 1)
    return SplitPrediction(
        xi=xi,
        lam=lam,
        omega=block.omega,
        size=m,
        shifts=shifts,
        eigenvalues=block.omega + shifts,
        split_vectors=vectors,
        norms=norms,
    )


@dataclass
class NonGenericPrediction:
    """Leading-order splitting when xi = 0: one static mode, M-1 moving."""

    xi: complex
    xi_prime: complex
    omega: complex
    size: int
    unshifted_count: int
    shifts: np.ndarray
    eigenvalues: np.ndarray
    m2_caveat: bool


def predict_splitting_nongeneric(
    block: JordanBlock, delta_k, eps: float
) -> NonGenericPrediction:
    """Reduced splitting Delta_omega^(M-1) = 2 eps xi' plus one static mode.

    For M = 2 the quadratic term of the characteristic expansion enters at
    the same order, so the prediction is order-of-magnitude only; the report
    carries an m2_caveat flag for that case.
    """
    xi = xi_generic(block, delta_k)
    scale = _genericity_scale(block, delta_k)
    if abs(xi) > GENERICITY_FACTOR * scale:
        raise ArgumentError(
            f"perturbation is generic (xi = {xi:.3e}); use predict_splitting"
        )
    if block.size < 2:
        raise ArgumentError("non-generic splitting needs M >= 2")
    xp = xi_prime(block, delta_k)
    if abs(xp) <= GENERICITY_FACTOR * scale:
        raise HigherOrderNonGenericError(
            "both xi and xi' vanish at this scale; no leading-order "
            "prediction, fall back to exact diagonalization"
        )
    m = block.size
    lam = complex(2.0 * eps * xp) ** (1.0 / (m - 1))
    zeta = np.exp(2j * np.pi * np.arange(m - 1) / (m - 1))
    shifts = lam * zeta
    return NonGenericPrediction(
        xi=xi,
        xi_prime=xp,
        omega=block.omega,
        size=m,
        unshifted_count=1,
        shifts=shifts,
        eigenvalues=np.concatenate([[block.omega], block.omega + shifts]),
        m2_caveat=(m == 2),
    )


# ---------------------------------------------------------------------------
# determinant route
# ---------------------------------------------------------------------------

def _adjugate(a: np.ndarray) -> np.ndarray:
    """Adjugate via cofactors; valid for singular matrices too."""
    a = np.asarray(a, dtype=complex)
    n = a.shape[0]
    if n == 1:
        return np.ones((1, 1), dtype=complex)
    cof = np.zeros_like(a)
    for i in range(n):
        for j in range(n):
            minor = np.delete(np.delete(a, i, axis=0), j, axis=1)
            cof[i, j] = (-1.0) ** (i + j) * np.linalg.det(minor)
    return cof.T


@dataclass
class J1Result:
    """The normalized linear determinant coefficient, two ways."""

    omega: complex
    closed_form: complex
    finite_difference: complex
    xi: complex

    @property
    def difference(self) -> float:
        return abs(self.closed_form - self.finite_difference)

    @property
    def xi_relation_residual(self) -> float:
        """|J1 + xi|; the expansion requires J1(omega_j) = -xi."""
        return abs(self.closed_form + self.xi)


def j1_coefficient(
    sys: OscillatorSystem,
    delta_k,
    spectrum: Spectrum | None = None,
    tol: Tolerances | None = None,
) -> J1Result:
    """Linear coefficient J1(omega_j) of det(H(eps) - omega_j), normalized.

    Both routes divide out the spectator factor R = prod over other blocks of
    (omega_j - omega_l)^(M_l), so that J1(omega_j) = -xi holds regardless of
    the rest of the spectrum:

    * closed form: (-1)^N tr(adj(K - i w Gamma - w^2 I) . DK) / R, which for
      a 2x2 system at w = -i reduces to the familiar combination
      (k22+1-2*gamma22) mu11 + (k11+1-2*gamma11) mu22 + 2(2*gamma12-k12) mu12
      with gamma = Gamma/2;
    * finite differences of det(H(eps) - omega_j) with Richardson
      extrapolation.
    """
    tol = tol or Tolerances()
    spectrum = spectrum or compute_spectrum(sys, tol)
    block = spectrum.largest_block()
    if block.size < 2:
        raise ArgumentError(
            "system is not critical: no block of size >= 2 at this tolerance"
        )
    w = block.omega
    dk = np.asarray(delta_k, dtype=float)

    r_spect = 1.0 + 0.0j
    for b in spectrum.blocks:
        if b is block:
            continue
        r_spect *= (w - b.omega) ** b.size

    a = sys.K - 1j * w * sys.Gamma - w**2 * np.eye(sys.N)
    sign = (-1.0) ** sys.N
    closed = sign * np.trace(_adjugate(a) @ dk) / r_spect

    def det_at(eps):
        h = evolution_operator(build_system(sys.K + eps * dk, sys.Gamma))
        return np.linalg.det(h - w * np.eye(sys.dim))

    step = 1e-6 * max(1.0, float(np.linalg.norm(sys.K, 2)))
    d1 = (det_at(step) - det_at(-step)) / (2.0 * step)
    d2 = (det_at(step / 2.0) - det_at(-step / 2.0)) / step
    fd = (4.0 * d2 - d1) / 3.0 / r_spect

    return J1Result(
        omega=w,
        closed_form=complex(closed),
        finite_difference=complex(fd),
        xi=xi_generic(block, dk),
    )


# ---------------------------------------------------------------------------
# numerical truth and fits
# ---------------------------------------------------------------------------

def exact_perturbed_spectrum(
    sys: OscillatorSystem, delta_k, eps: float, tol: Tolerances | None = None
) -> np.ndarray:
    """Eigenvalues of H(K + eps*DK, Gamma), sorted by (real, imag)."""
    tol = tol or Tolerances()
    pert = build_system(
        sys.K + eps * np.asarray(delta_k, dtype=float), sys.Gamma
    )
    return poly_roots(char_poly(evolution_operator(pert)), tol)


def cluster_shifts(
    evals: np.ndarray, omega: complex, size: int, gap: float | None = None
) -> np.ndarray:
    """Shifts of the ``size`` eigenvalues nearest omega.

    With ``gap`` given (distance from omega to the nearest foreign
    eigenvalue), raises MatchingAmbiguityError when a shift exceeds half of
    it, since cluster membership is then no longer well defined.
    """
    evals = np.asarray(evals, dtype=complex)
    order = np.argsort(np.abs(evals - omega))
    shifts = evals[order[:size]] - omega
    if gap is not None and float(np.max(np.abs(shifts))) > 0.5 * gap:
        raise MatchingAmbiguityError(
            f"largest shift {float(np.max(np.abs(shifts))):.3e} exceeds half "
            f"the spectral gap {gap:.3e}"
        )
    return shifts


def assign_predictions(numerical: np.ndarray, predicted: np.ndarray) -> np.ndarray:
    """Permutation p minimizing sum |numerical[i] - predicted[p[i]]|.

    Hungarian assignment on the distance matrix; deterministic pairing for
    error metrics.
    """
    numerical = np.asarray(numerical, dtype=complex)
    predicted = np.asarray(predicted, dtype=complex)
    cost = np.abs(numerical[:, None] - predicted[None, :])
    rows, cols = linear_sum_assignment(cost)
    perm = np.empty(numerical.size, dtype=int)
    perm[rows] = cols
    return perm


def loglog_slope(x, y):
    """(slope, rms residual) of a straight-line fit to log10 data."""
    lx = np.log10(np.asarray(x, dtype=float))
    ly = np.log10(np.asarray(y, dtype=float))
    coeff = np.polyfit(lx, ly, 1)
    fit = np.polyval(coeff, lx)
    return float(coeff[0]), float(np.sqrt(np.mean((ly - fit) ** 2)))


def fit_splitting_exponent(
    sys: OscillatorSystem,
    delta_k,
    eps_grid,
    spectrum: Spectrum | None = None,
    tol: Tolerances | None = None,
):
    """Fit log mean |shift| against log |eps| over an epsilon sweep.

    The grid must keep one sign and span at least three decades.  Returns
    (slope, rms residual).
    """
    tol = tol or Tolerances()
    eps_grid = np.asarray(eps_grid, dtype=float)
    if eps_grid.size < 3:
        raise ArgumentError("need at least three epsilon values")
    if not (np.all(eps_grid > 0) or np.all(eps_grid < 0)):
        raise ArgumentError("epsilon grid must keep a single sign")
    mags = np.abs(eps_grid)
    if np.max(mags) / np.min(mags) < 1e3:
        raise ArgumentError("epsilon grid must span at least three decades")
    spectrum = spectrum or compute_spectrum(sys, tol)
    block = spectrum.largest_block()
    gap = min(
        (abs(block.omega - b.omega) for b in spectrum.blocks if b is not block),
        default=np.inf,
    )
    mean_shift = []
    for eps in eps_grid:
        evals = exact_perturbed_spectrum(sys, delta_k, eps, tol)
        shifts = cluster_shifts(evals, block.omega, block.size, gap)
        mean_shift.append(float(np.mean(np.abs(shifts))))
    return loglog_slope(np.abs(eps_grid), mean_shift)


# ---------------------------------------------------------------------------
# higher order
# ---------------------------------------------------------------------------

def deltaH_prime_matrix(block: JordanBlock, delta_k, lam: complex) -> np.ndarray:
    """Matrix of the residual perturbation in the split basis.

    The element coupling the dual top to the eigenvector (which carries xi)
    is moved into the unperturbed part, so the returned matrix has no
    lambda^(1-M) piece and its diagonal gives the O(lambda^2) eigenvalue
    corrections when multiplied by epsilon.
    """
    if lam == 0:
        raise ArgumentError("lambda must be nonzero")
    m = block.size
    dh = delta_h(delta_k)
    d = np.array(
        [
            [np.vdot(block.duals[n], dh @ block.chain[k]) for k in range(m)]
            for n in range(m)
        ]
    )
    d[m - 1, 0] = 0.0  # the xi element, absorbed into H0'
    zeta = np.exp(2j * np.pi * np.arange(m) / m)
    out = np.zeros((m, m), dtype=complex)
    for k in range(m):
        for kp in range(m):
            acc = 0.0 + 0.0j
            for n in range(m):
                for npp in range(m):
                    acc += (
                        zeta[kp] ** npp
                        * zeta[k] ** (-n)
                        * lam ** (npp - n)
                        * d[n, npp]
                    )
            out[k, kp] = acc / m
    return out


def second_order_eigenvalues(block: JordanBlock, delta_k, eps: float) -> np.ndarray:
    """First-order split eigenvalues plus the diagonal lambda^2 correction."""
    pred = predict_splitting(block, delta_k, eps)
    dhp = deltaH_prime_matrix(block, delta_k, pred.lam)
    return pred.eigenvalues + eps * np.diag(dhp)
