"""Time evolution, Green's functions, sum rules, and the cancellation study.

Jordan basis vectors evolve with polynomial prefactors,

    f_{j,n}(t) = sum_{l=0}^n C_l(omega_j, t) f_{j,n-l},
    C_l(omega, t) = (-i t)^l / l! * exp(-i omega t),

and a general state follows by expanding in duals.  The retarded Green's
function is theta(t) * sum f_{j,n}(t) <f^{j,n}|; its Fourier transform is the
pole expansion with i/(omega - omega_j)^(l+1) replacing theta(t) C_l, and it
solves (H - omega) G(omega) = -i * I.

Separating the completeness relation into coordinates and momenta yields four
sum rules on the position parts alone (the second summing to the identity,
the rest to zero); these are checked verbatim in check_sum_rules.

The cancellation experiment probes time evolution near criticality: the
per-mode weights of the naive modal sum diverge as the splitting scale lambda
shrinks (like lambda**(1-M)), yet the summed evolution stays within O(lambda)
of the critical Jordan-basis evolution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .jordan import JordanBlock, Spectrum, compute_spectrum
from .linalg import ArgumentError, Tolerances
from .model import OscillatorSystem, bilinear, build_system, evolution_operator

_EPS = np.finfo(float).eps


class NonDiagonalizableError(RuntimeError):
    """The perturbed system is still too close to critical to diagonalize."""


def evolution_coefficient(l: int, omega: complex, t: float) -> complex:
    """C_l(omega, t) = (-i t)^l / l! * exp(-i omega t).

    Evaluated in log space for large l*|t| so high-order blocks at long
    times cannot overflow the factorial or the power separately.
    """
    if l < 0:
        raise ArgumentError("coefficient order must be nonnegative")
    if t == 0.0:
        return 1.0 + 0.0j if l == 0 else 0.0 + 0.0j
    if l <= 20 and abs(t) < 1e3:
        return (-1j * t) ** l / math.factorial(l) * np.exp(-1j * omega * t)
    log_term = l * np.log(complex(-1j * t)) - math.lgamma(l + 1.0)
    return complex(np.exp(log_term - 1j * omega * t))


def evolve_basis_vector(block: JordanBlock, n: int, t: float) -> np.ndarray:
    """f_{j,n}(t) as the finite sum over lower chain members."""
    if not 0 <= n < block.size:
        raise ArgumentError(f"chain index {n} out of range for size {block.size}")
    out = np.zeros_like(block.chain[0])
    for l in range(n + 1):
        out = out + evolution_coefficient(l, block.omega, t) * block.chain[n - l]
    return out


def block_coefficients(block: JordanBlock, phi) -> np.ndarray:
    """Expansion coefficients <f^{j,n}|phi> of a state on one block."""
    phi = np.asarray(phi, dtype=complex).ravel()
    return np.array([np.vdot(block.duals[n], phi) for n in range(block.size)])


def evolve_state(spectrum: Spectrum, phi, t: float) -> np.ndarray:
    """Propagate phi to time t through the Jordan-basis expansion."""
    phi = np.asarray(phi, dtype=complex).ravel()
    if phi.size != spectrum.system.dim:
        raise ArgumentError(
            f"state must have length {spectrum.system.dim}, got {phi.size}"
        )
    out = np.zeros_like(phi)
    for b in spectrum.blocks:
        coeffs = block_coefficients(b, phi)
        for n in range(b.size):
            if coeffs[n] != 0.0:
                out = out + coeffs[n] * evolve_basis_vector(b, n, t)
    return out


def greens_time(spectrum: Spectrum, t: float) -> np.ndarray:
    """Retarded Green's function at time t (zero matrix for t < 0)."""
    dim = spectrum.system.dim
    if t < 0.0:
        return np.zeros((dim, dim), dtype=complex)
    g = np.zeros((dim, dim), dtype=complex)
    for b in spectrum.blocks:
        for n in range(b.size):
            g += np.outer(evolve_basis_vector(b, n, t), np.conj(b.duals[n]))
    return g


def greens_freq(spectrum: Spectrum, omega: complex) -> np.ndarray:
    """Frequency-domain Green's function (resolvent form) at omega.

    Raises when omega sits within cluster_tol of a pole.
    """
    scale = 1.0 + max(abs(b.omega) for b in spectrum.blocks)
    for b in spectrum.blocks:
        if abs(omega - b.omega) <= spectrum.tol.cluster_tol * scale:
            raise ArgumentError(
                f"omega={omega} is within cluster_tol of the pole at {b.omega}"
            )
    dim = spectrum.system.dim
    g = np.zeros((dim, dim), dtype=complex)
    for b in spectrum.blocks:
        for n in range(b.size):
            bra = np.conj(b.duals[n])
            for l in range(n + 1):
                g += np.outer(
                    b.chain[n - l] * (1j / (omega - b.omega) ** (l + 1)), bra
                )
    return g


@dataclass(frozen=True)
class GreensSample:
    """A tagged Green's-function sample: domain, argument, 2N x 2N matrix."""

    domain: str  # "time" | "frequency"
    argument: complex
    matrix: np.ndarray


def greens_sample(spectrum: Spectrum, domain: str, argument) -> GreensSample:
    """Tagged sample of the Green's function in either domain."""
    if domain == "time":
        matrix = greens_time(spectrum, float(np.real(argument)))
    elif domain == "frequency":
        matrix = greens_freq(spectrum, complex(argument))
    else:
        raise ArgumentError("domain must be 'time' or 'frequency'")
    return GreensSample(domain=domain, argument=complex(argument), matrix=matrix)


@dataclass
class SumRuleReport:
    """Residual matrices of the four coordinate-space sum rules."""

    residuals: list
    max_abs: list
    threshold: float

    @property
    def passed(self) -> bool:
        return all(m <= self.threshold for m in self.max_abs)


def check_sum_rules(spectrum: Spectrum, threshold: float | None = None) -> SumRuleReport:
    """Evaluate the four sum rules on the position parts of the basis.

    Rule conventions: n' = M_j - 1 - n and f_{j,-1} = f_{j,-2} = 0; the
    second rule must sum to the identity, the others to zero.
    """
    sys = spectrum.system
    n_osc = sys.N
    thr = threshold if threshold is not None else spectrum.tol.residual_tol
    r1 = np.zeros((n_osc, n_osc), dtype=complex)
    r2 = np.zeros((n_osc, n_osc), dtype=complex)
    r3 = np.zeros((n_osc, n_osc), dtype=complex)
    r4 = np.zeros((n_osc, n_osc), dtype=complex)
    for b in spectrum.blocks:
        m = b.size
        w = b.omega

        def u(k):
            if k < 0:
                return np.zeros(n_osc, dtype=complex)
            return b.chain[k][:n_osc]

        for n in range(m):
            np_ = m - 1 - n
            r1 += np.outer(u(n), u(np_))
            r2 += np.outer(w * u(n) + u(n - 1), u(np_))
            r3 += np.outer(
                w**2 * u(n) + 2.0 * w * u(n - 1) + u(n - 2), u(np_)
            ) + 1j * np.outer(w * u(n) + u(n - 1), sys.Gamma @ u(np_))
            r4 += np.outer(u(n), sys.Gamma @ u(np_))
    r2 -= np.eye(n_osc)
    residuals = [r1, r2, r3, r4]
    return SumRuleReport(
        residuals=residuals,
        max_abs=[float(np.max(np.abs(r))) for r in residuals],
        threshold=thr,
    )


def greens_samples_csv(spectrum: Spectrum, omegas, path) -> None:
    """Write frequency-domain samples: omega_re, omega_im, entries flattened.

    Matrix entries follow row-major order, re/im interleaved.
    """
    dim = spectrum.system.dim
    header = ["omega_re", "omega_im"]
    for i in range(dim):
        for j in range(dim):
            header += [f"g{i}{j}_re", f"g{i}{j}_im"]
    lines = [",".join(header)]
    for w in omegas:
        w = complex(w)
        g = greens_freq(spectrum, w)
        row = [w.real, w.imag]
        for i in range(dim):
            for j in range(dim):
                row += [g[i, j].real, g[i, j].imag]
        lines.append(",".join(f"{v:.17g}" for v in row))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def rk4_evolve(sys: OscillatorSystem, phi0, times, step: float = 1e-4) -> np.ndarray:
    """Classic fixed-step RK4 for x'' + Gamma x' + K x = 0.

    Deliberately independent of the evolution operator: the right-hand side
    is assembled from K and Gamma directly, so this integrates the physical
    equation of motion and serves as an oracle for the Jordan-basis
    propagation.  ``times`` must be nonnegative and ascending; returns the
    phase-space states at those times (phi0 corresponds to t=0).
    """
    k_mat, g_mat = sys.K, sys.Gamma
    n = sys.N
    y = np.asarray(phi0, dtype=complex).ravel().copy()
    if y.size != 2 * n:
        raise ArgumentError(f"state must have length {2 * n}")

    def deriv(state):
        x, p = state[:n], state[n:]
        return np.concatenate([p, -(k_mat @ x) - (g_mat @ p)])

    out = []
    t_cur = 0.0
    for t in times:
        if t < t_cur:
            raise ArgumentError("times must be ascending and nonnegative")
        span = t - t_cur
        if span > 0.0:
            nsteps = max(1, int(round(span / step)))
            h = span / nsteps
            for _ in range(nsteps):
                k1 = deriv(y)
                k2 = deriv(y + 0.5 * h * k1)
                k3 = deriv(y + 0.5 * h * k2)
                k4 = deriv(y + h * k3)
                y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out.append(y.copy())
        t_cur = t
    return np.array(out)


def energy(sys: OscillatorSystem, phi) -> float:
    """Mechanical energy (p.p + x.K.x)/2 of a real phase-space state."""
    phi = np.asarray(phi)
    n = sys.N
    x, p = phi[:n].real, phi[n:].real
    return float(0.5 * (p @ p + x @ (sys.K @ x)))


@dataclass
class CancellationReport:
    """Outcome of one epsilon point of the small-denominator experiment."""

    eps: float
    xi: complex
    lam: complex
    omega: complex
    size: int
    cluster_eigenvalues: np.ndarray
    mode_weights: np.ndarray
    times: np.ndarray
    naive: np.ndarray
    jordan: np.ndarray
    diffs: np.ndarray

    @property
    def max_diff(self) -> float:
        return float(np.max(self.diffs))

    @property
    def max_weight(self) -> float:
        return float(np.max(self.mode_weights))


def cluster_cancellation_experiment(
    sys: OscillatorSystem,
    delta_k,
    eps: float,
    phi,
    t_grid,
    tol: Tolerances | None = None,
    spectrum: Spectrum | None = None,
) -> CancellationReport:
    """Compare the naive near-critical modal sum with Jordan-basis evolution.

    The cluster modes of the perturbed system are taken at leading order in
    the splitting: f_k = sum_n (lambda zeta_k)^n f_{j,n} with eigenvalues
    omega_j + lambda zeta_k and bilinear norms M (lambda zeta_k)^(M-1)
    (computing them any other way is hopeless anyway: the per-mode pieces are
    condition-limited near the critical point, which is rather the theme of
    this experiment).  The naive sum

        sum_k exp(-i w_k t) f_k (f_k, phi) / (f_k, f_k)

    then carries per-mode weights that blow up like |lambda|**(1-M), while
    its difference from the critical Jordan evolution of the block stays
    small: the negative powers of lambda cancel mode by mode, the resonant
    part reproduces the Jordan evolution exactly, and the remainder is
    higher order in lambda.

    The perturbed system must actually be diagonalizable near the block;
    an exact eigensolve guards that precondition and its cluster eigenvalues
    are recorded for reference.
    """
    from .perturb import predict_splitting  # deferred: avoids import cycle

    tol = tol or Tolerances()
    spectrum = spectrum or compute_spectrum(sys, tol)
    nontrivial = [b for b in spectrum.blocks if b.size >= 2]
    if len(nontrivial) != 1:
        raise ArgumentError(
            f"experiment needs exactly one nontrivial block, found "
            f"{len(nontrivial)}"
        )
    block = nontrivial[0]
    m = block.size
    phi = np.asarray(phi, dtype=complex).ravel()
    t_grid = np.asarray(t_grid, dtype=float)

    pert = build_system(
        sys.K + eps * np.asarray(delta_k, dtype=float), sys.Gamma
    )
    hp = evolution_operator(pert)
    evals = np.linalg.eigvals(hp)
    order = np.argsort(np.abs(evals - block.omega))
    w_exact = evals[order[:m]]
    scale = 1.0 + float(np.max(np.abs(evals)))
    sep_floor = 10.0 * _EPS ** (1.0 / m) * scale
    pair = np.abs(w_exact[:, None] - w_exact[None, :]) + np.eye(m)
    if float(np.min(pair)) < sep_floor:
        raise NonDiagonalizableError(
            f"cluster eigenvalues are separated by {float(np.min(pair)):.3e}, "
            f"below the resolvable floor {sep_floor:.3e}"
        )

    pred = predict_splitting(block, delta_k, eps)
    weights = np.array(
        [
            bilinear(sys, pred.split_vectors[k], phi) / pred.norms[k]
            for k in range(m)
        ]
    )

    coeffs = block_coefficients(block, phi)
    naive = np.zeros((t_grid.size, sys.dim), dtype=complex)
    jordan = np.zeros((t_grid.size, sys.dim), dtype=complex)
    for it, t in enumerate(t_grid):
        acc = np.zeros(sys.dim, dtype=complex)
        for k in range(m):
            acc += (
                np.exp(-1j * pred.eigenvalues[k] * t)
                * weights[k]
                * pred.split_vectors[k]
            )
        naive[it] = acc
        jb = np.zeros(sys.dim, dtype=complex)
        for n in range(m):
            jb += coeffs[n] * evolve_basis_vector(block, n, t)
        jordan[it] = jb
    diffs = np.linalg.norm(naive - jordan, axis=1)
    return CancellationReport(
        eps=eps,
        xi=pred.xi,
        lam=pred.lam,
        omega=block.omega,
        size=m,
        cluster_eigenvalues=w_exact,
        mode_weights=np.abs(weights),
        times=t_grid,
        naive=naive,
        jordan=jordan,
        diffs=diffs,
    )
