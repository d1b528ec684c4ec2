"""Damped-oscillator systems, their evolution operator, and the bilinear map.

A system of N coupled oscillators obeys

    x'' + Gamma x' + K x = 0,

with K and Gamma real symmetric N x N matrices.  Gamma here is the full
damping matrix as it appears in the equation of motion.  States live in
2N-dimensional phase space, stored as a single complex vector
``(x_1..x_N, p_1..p_N)`` with p = x'.

First-order form: writing i d/dt (x, p) = H (x, p), the evolution operator is

    H = i * [[0, I], [-K, -Gamma]].

H is not hermitian, but it is symmetric under the bilinear map

    (psi, phi) = i * sum_ab [ psi_x Gamma phi_x + psi_x phi_p + psi_p phi_x ]
               = psi^T g phi,        g = i * [[Gamma, I], [I, 0]],

which is symmetric, non-conjugating, and satisfies (psi, H phi) = (H psi, phi).
Duals are obtained by metric conjugation, conj(g phi).
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .linalg import ArgumentError, Tolerances, char_poly

SYMMETRY_TOL = 1e-12


@dataclass(frozen=True)
class OscillatorSystem:
    """N damped oscillators with stiffness K and damping Gamma.

    Use :func:`build_system` rather than constructing directly; it validates
    shapes, symmetry, and positive-semidefiniteness of Gamma.
    """

    K: np.ndarray
    Gamma: np.ndarray
    label: str | None = None
    symmetry_defect: float = field(default=0.0, compare=False)

    @property
    def N(self) -> int:
        return self.K.shape[0]

    @property
    def dim(self) -> int:
        """Phase-space dimension 2N."""
        return 2 * self.K.shape[0]


def build_system(K, Gamma, label: str | None = None,
                 check_k_positive: bool = False) -> OscillatorSystem:
    """Validate and build an oscillator system.

    K and Gamma must be real, square, equal-size, and symmetric to 1e-12.
    A Gamma with negative eigenvalues is physically questionable but not
    forbidden by the formalism, so it only triggers a warning.
    """
    K = np.asarray(K, dtype=float)
    Gamma = np.asarray(Gamma, dtype=float)
    for name, m in (("K", K), ("Gamma", Gamma)):
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ArgumentError(f"{name} must be square, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ArgumentError(f"{name} has non-finite entries")
    if K.shape != Gamma.shape:
        raise ArgumentError(
            f"size mismatch: K is {K.shape}, Gamma is {Gamma.shape}"
        )
    defect = 0.0
    for name, m in (("K", K), ("Gamma", Gamma)):
        scale = max(1.0, float(np.max(np.abs(m))))
        d = float(np.max(np.abs(m - m.T)))
        if d > SYMMETRY_TOL * scale:
            raise ArgumentError(f"{name} is asymmetric (defect {d:.3e})")
        defect = max(defect, d)
    gamma_eigs = np.linalg.eigvalsh(0.5 * (Gamma + Gamma.T))
    if gamma_eigs.size and gamma_eigs[0] < -1e-12 * max(1.0, abs(gamma_eigs[-1])):
        warnings.warn(
            f"Gamma is not positive semidefinite (min eigenvalue "
            f"{gamma_eigs[0]:.3e}); the formalism tolerates this",
            stacklevel=2,
        )
    if check_k_positive:
        k_eigs = np.linalg.eigvalsh(0.5 * (K + K.T))
        if k_eigs.size and k_eigs[0] <= 0.0:
            raise ArgumentError(
                f"K is not positive definite (min eigenvalue {k_eigs[0]:.3e})"
            )
    return OscillatorSystem(K=0.5 * (K + K.T), Gamma=0.5 * (Gamma + Gamma.T),
                            label=label, symmetry_defect=defect)


def evolution_operator(sys: OscillatorSystem) -> np.ndarray:
    """The 2N x 2N operator H = i[[0, I], [-K, -Gamma]]."""
    n = sys.N
    h = np.zeros((2 * n, 2 * n), dtype=complex)
    h[:n, n:] = np.eye(n)
    h[n:, :n] = -sys.K
    h[n:, n:] = -sys.Gamma
    return 1j * h


def metric(sys: OscillatorSystem) -> np.ndarray:
    """Matrix g of the bilinear map, g = i[[Gamma, I], [I, 0]]."""
    n = sys.N
    g = np.zeros((2 * n, 2 * n), dtype=complex)
    g[:n, :n] = sys.Gamma
    g[:n, n:] = np.eye(n)
    g[n:, :n] = np.eye(n)
    return 1j * g


def x_part(phi, n: int) -> np.ndarray:
    """Position components of a phase-space vector."""
    return np.asarray(phi, dtype=complex).ravel()[:n]


def p_part(phi, n: int) -> np.ndarray:
    """Momentum components of a phase-space vector."""
    return np.asarray(phi, dtype=complex).ravel()[n:]


def bilinear(sys: OscillatorSystem, psi, phi) -> complex:
    """The symmetric bilinear map (psi, phi); no complex conjugation.

    Componentwise this is i * [psi_x.(Gamma phi_x) + psi_x.phi_p + psi_p.phi_x],
    identical to psi^T g phi.
    """
    psi = np.asarray(psi, dtype=complex).ravel()
    phi = np.asarray(phi, dtype=complex).ravel()
    n = sys.N
    if psi.size != 2 * n or phi.size != 2 * n:
        raise ArgumentError(
            f"phase vectors must have length {2 * n}, got {psi.size} and {phi.size}"
        )
    px, pp = psi[:n], psi[n:]
    fx, fp = phi[:n], phi[n:]
    return complex(1j * (px @ (sys.Gamma @ fx) + px @ fp + pp @ fx))


def metric_conjugate(sys: OscillatorSystem, phi) -> np.ndarray:
    """conj(g phi): the covector realizing <result | chi> = (phi, chi)."""
    phi = np.asarray(phi, dtype=complex).ravel()
    if phi.size != sys.dim:
        raise ArgumentError(
            f"phase vector must have length {sys.dim}, got {phi.size}"
        )
    return np.conj(metric(sys) @ phi)


def quadratic_char_poly(sys: OscillatorSystem) -> np.ndarray:
    """Coefficients of det(K - i*omega*Gamma - omega^2 I), ascending.

    Computed by interpolation at 2N+1 sample points, deliberately independent
    of the Faddeev-LeVerrier route through H; the two characteristic
    polynomials must share the same root multiset.
    """
    n = sys.N
    deg = 2 * n
    pts = 1.7 * np.exp(2j * np.pi * (np.arange(deg + 1) + 0.23) / (deg + 1))
    vals = np.array(
        [
            np.linalg.det(sys.K - 1j * w * sys.Gamma - w**2 * np.eye(n))
            for w in pts
        ]
    )
    vander = np.vander(pts, deg + 1, increasing=True)
    return np.linalg.solve(vander, vals)


def system_to_json(sys: OscillatorSystem) -> dict:
    """JSON-ready dict: {"N": ..., "K": [[...]], "Gamma": [[...]], "label": ...}."""
    obj = {
        "N": sys.N,
        "K": [[float(v) for v in row] for row in sys.K],
        "Gamma": [[float(v) for v in row] for row in sys.Gamma],
    }
    if sys.label is not None:
        obj["label"] = sys.label
    return obj


def system_from_json(obj: dict) -> OscillatorSystem:
    """Build a system from the JSON schema used by :func:`system_to_json`."""
    try:
        k = np.asarray(obj["K"], dtype=float)
        gamma = np.asarray(obj["Gamma"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ArgumentError(f"invalid system JSON: {exc}") from exc
    sys = build_system(k, gamma, label=obj.get("label"))
    if "N" in obj and int(obj["N"]) != sys.N:
        raise ArgumentError(
            f"declared N={obj['N']} does not match matrix size {sys.N}"
        )
    return sys


def load_system(path) -> OscillatorSystem:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ArgumentError(f"cannot parse system file {path}: {exc}") from exc
    return system_from_json(obj)


def save_system(sys: OscillatorSystem, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(system_to_json(sys), fh, indent=2)
        fh.write("\n")


def eigenvalue_consistency_residual(sys: OscillatorSystem,
                                    tol: Tolerances | None = None) -> float:
    """Max root-multiset distance between the H route and the quadratic route.

    det(H - omega) and (-1)^N det(K - i*omega*Gamma - omega^2) must have the
    same roots; returns the Hausdorff-style matching distance of the two
    root multisets.
    """
    from .linalg import poly_roots  # local import to keep module load light

    tol = tol or Tolerances()
    r1 = poly_roots(char_poly(evolution_operator(sys)), tol)
    r2 = poly_roots(quadratic_char_poly(sys), tol)
    d12 = np.abs(r1[:, None] - r2[None, :])
    return float(max(d12.min(axis=0).max(), d12.min(axis=1).max()))
