"""Jordan structure of the evolution operator under the bilinear map.

For a damped-oscillator operator H the eigenvectors can merge at critical
parameter values, leaving Jordan blocks: chains f_{j,0..M-1} obeying

    (H - omega_j) f_{j,n} = f_{j,n-1},     f_{j,-1} = 0.

This module detects the block structure {(omega_j, M_j)} from rank sequences
of (H - omega)^k, builds the chains, and normalizes them so that the bilinear
pairings take the canonical anti-diagonal form

    (f_{j,n}, f_{j',n'}) = delta_{jj'} delta_{n+n', M_j-1}.

Within one block that takes two steps: a rescale making the top pairing
A_{M-1} = (f_0, f_{M-1}) equal to one, then chain shears f_m -> f_m + c_n
f_{m-n} that successively zero A_{M+n-1} = (f_n, f_{M-1}) with c_n =
-A_{M+n-1}/2.  After this the only freedom left is one overall sign per
block, which is fixed deterministically (largest-magnitude entry of f_{j,0}
gets its argument in (-pi/2, pi/2]).

Blocks sharing one eigenvalue (level crossing) additionally need cross-block
mixing; see :func:`biorthogonalize_crossing`.  Eigenvalues off the negative
imaginary axis come in pairs (omega, -conj(omega)); the partner chain is
rebuilt from the conjugation rule f_{-j,n} = +/- i^M (-1)^n conj(f_{j,n}).
Duals are metric conjugates of the reversed chain and give the resolution of
identity used by the dynamics module.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import (
    ArgumentError,
    DEFAULT_TOL,
    InconsistentSystemError,
    Tolerances,
    char_poly,
    numeric_rank_and_nullspace,
    orthonormal_columns,
    polish_root,
    poly_roots,
    solve_affine,
)
from .model import OscillatorSystem, bilinear, evolution_operator, metric, metric_conjugate

_EPS = np.finfo(float).eps


class ChainError(RuntimeError):
    """Raised when a Jordan chain cannot be built or extended as detected."""


class DegenerateChainError(RuntimeError):
    """Raised when a chain has (f_0, f_top) = 0, which no valid block allows."""


class CrossingError(RuntimeError):
    """Raised when the level-crossing quadratic form vanishes identically."""


class PairingError(RuntimeError):
    """Raised when an off-axis eigenvalue has no mirror partner."""


class VerificationError(RuntimeError):
    """A spectrum failed its invariant checks; carries the residual report."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report or {}


@dataclass
class NormalizationLedger:
    """Audit trail of one block normalization.

    A holds the post-normalization pairing diagnostics A_q = (f_n, f_{q-n})
    for q = 0..2M-2 (expected: one at q = M-1, zero elsewhere); c holds the
    applied transform coefficients, c[0] the rescale and c[n] the shear
    coefficient for step n.
    """

    A: list
    c: list


@dataclass
class JordanBlock:
    """One Jordan block: eigenvalue, chain, duals, and bookkeeping.

    chain[n] is f_{j,n} (row vectors, shape (M, 2N)); duals[n] is f^{j,n}.
    label follows the pairing convention: +j / -j for mirror pairs, 0 for
    blocks on the negative imaginary axis.  conj_sign records which sign of
    the conjugation rule the block realizes (None if the basis breaks the
    symmetry, possible after complex crossing mixes).
    """

    omega: complex
    size: int
    chain: np.ndarray
    duals: np.ndarray | None = None
    label: int = 0
    ledger: NormalizationLedger | None = None
    conj_sign: int | None = None
    crossing_group: int | None = None
    near_critical: bool = False


@dataclass
class CrossingGroup:
    """Blocks sharing one eigenvalue, sorted by descending size."""

    omega: complex
    sizes: list
    block_indices: list

    @property
    def L(self) -> int:
        return len(self.sizes)


@dataclass
class Spectrum:
    """Complete Jordan decomposition of one system."""

    system: OscillatorSystem
    blocks: list
    tol: Tolerances
    char_coeffs: np.ndarray = field(repr=False, default=None)
    roots: np.ndarray = field(repr=False, default=None)
    crossing_groups: list = field(default_factory=list)
    near_critical_clusters: list = field(default_factory=list)

    @property
    def nu(self) -> int:
        """Number of blocks."""
        return len(self.blocks)

    def operator(self) -> np.ndarray:
        return evolution_operator(self.system)

    def block(self, label: int) -> JordanBlock:
        for b in self.blocks:
            if b.label == label:
                return b
        raise KeyError(f"no block labeled {label}")

    def largest_block(self) -> JordanBlock:
        return max(self.blocks, key=lambda b: (b.size, -abs(b.omega)))


# ---------------------------------------------------------------------------
# root clustering and rank-sequence structure detection
# ---------------------------------------------------------------------------

def _single_linkage(roots: np.ndarray, radius: float):
    """Group roots whose pairwise chains of distances stay within radius."""
    n = roots.size
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(roots[i] - roots[j]) <= radius:
                parent[find(i)] = find(j)
    groups = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return [np.array(idx) for idx in groups.values()]


def _nullity_sequence(a: np.ndarray, max_power: int, tol: Tolerances):
    """Nullities of a^k for k = 0..max_power with power-scaled thresholds."""
    dim = a.shape[0]
    smax = float(np.linalg.norm(a, 2))
    base = max(smax, 1e-6)
    nullities = [0]
    ak = np.eye(dim, dtype=complex)
    for k in range(1, max_power + 1):
        ak = ak @ a
        s = np.linalg.svd(ak, compute_uv=False)
        thresh = tol.rank_tol * base**k
        nullities.append(int(dim - np.sum(s > thresh)))
        if nullities[-1] == nullities[-2]:
            break
    return nullities


def block_sizes_at(h: np.ndarray, omega: complex, multiplicity: int,
                   tol: Tolerances | None = None):
    """Block sizes at omega from the rank sequence, or None if inconsistent.

    The number of blocks of size >= k equals nullity(A^k) - nullity(A^(k-1))
    for A = H - omega.  Returns the sizes in descending order when the
    sequence accounts for exactly ``multiplicity`` dimensions; otherwise
    None, which callers treat as "no Jordan structure at this tolerance"
    (a root cluster is necessary but not sufficient evidence).
    """
    tol = tol or DEFAULT_TOL
    dim = h.shape[0]
    a = h - omega * np.eye(dim)
    nullities = _nullity_sequence(a, multiplicity, tol)
    total = nullities[-1]
    if total != multiplicity or nullities[1] == 0:
        return None
    counts = [nullities[k] - nullities[k - 1] for k in range(1, len(nullities))]
    if any(c2 > c1 for c1, c2 in zip(counts, counts[1:])):
        return None
    sizes = []
    for k, c in enumerate(counts, start=1):
        nxt = counts[k] if k < len(counts) else 0
        sizes.extend([k] * (c - nxt))
    sizes.sort(reverse=True)
    if sum(sizes) != multiplicity:
        return None
    return sizes


def _eigenstructure(h: np.ndarray, coeffs: np.ndarray, roots: np.ndarray,
                    tol: Tolerances):
    """Cluster roots into eigenvalues and confirm block sizes via ranks.

    Returns (groups, flagged) where groups is a list of (omega, sizes) and
    flagged collects near-critical clusters the rank test rejected; their
    member roots are demoted to simple eigenvalues.
    """
    scale = 1.0 + float(np.max(np.abs(roots)))
    # Multiple roots of multiplicity m scatter like eps**(1/m) under any
    # root finder, so the linkage radius must be far wider than cluster_tol;
    # the rank test is authoritative about which clusters are true blocks.
    radius = max(10.0 * tol.cluster_tol, 3e-3 * scale)
    groups = []
    flagged = []
    for idx in _single_linkage(roots, radius):
        members = roots[idx]
        m = members.size
        if m == 1:
            groups.append((complex(members[0]), [1]))
            continue
        center = complex(np.mean(members))
        polished = polish_root(coeffs, center, multiplicity=m)
        if abs(polished - center) > 2.0 * radius:
            polished = center
        sizes = block_sizes_at(h, polished, m, tol)
        diameter = float(np.max(np.abs(members[:, None] - members[None, :])))
        if sizes is None or sizes == [1] * m:
            # No defective structure at this tolerance: demote to simple
            # eigenvalues and flag the cluster for small-denominator studies.
            flagged.append(
                {
                    "omega": center,
                    "roots": [complex(r) for r in members],
                    "diameter": diameter,
                    "multiplicity": m,
                }
            )
            groups.extend((complex(r), [1]) for r in members)
            continue
        groups.append((polished, sizes))
    return groups, flagged


# ---------------------------------------------------------------------------
# chain construction
# ---------------------------------------------------------------------------

def build_chain(h: np.ndarray, omega: complex, size: int,
                tol: Tolerances | None = None):
    """Raw Jordan chain at omega, unnormalized.

    Starts from the eigenvector and ascends with minimum-norm solves of
    (H - omega) f_n = f_{n-1}; afterwards verifies the chain cannot be
    extended past the requested size.
    """
    tol = tol or DEFAULT_TOL
    h = np.asarray(h, dtype=complex)
    dim = h.shape[0]
    if not 1 <= size <= dim:
        raise ArgumentError(f"block size {size} out of range for dim {dim}")
    a = h - omega * np.eye(dim)
    _, null = numeric_rank_and_nullspace(a, tol)
    if null.shape[1] == 0:
        raise ChainError(f"omega={omega} is not an eigenvalue at this tolerance")
    if null.shape[1] > 1:
        raise ChainError(
            "geometric multiplicity exceeds one; use the crossing construction"
        )
    chain = [null[:, 0]]
    for n in range(1, size):
        try:
            x, _ = solve_affine(a, chain[-1], tol)
        except InconsistentSystemError as exc:
            raise ChainError(
                f"no Jordan chain extension at step {n} (block smaller than "
                f"{size}): {exc}"
            ) from exc
        chain.append(x)
    extendable = True
    try:
        solve_affine(a, chain[-1], tol)
    except InconsistentSystemError:
        extendable = False
    if extendable:
        raise ChainError(
            f"chain at omega={omega} extends beyond the detected size {size}"
        )
    return [np.asarray(v, dtype=complex) for v in chain]


def chain_from_top(a: np.ndarray, top: np.ndarray, size: int):
    """Chain [A^(M-1) t, ..., A t, t] built downward from a top vector."""
    chain = [np.asarray(top, dtype=complex)]
    for _ in range(size - 1):
        chain.append(a @ chain[-1])
    return chain[::-1]


def _pairing_diagnostics(sys: OscillatorSystem, chain):
    """A_q = (f_n, f_{q-n}) for q = 0..2M-2, averaged over valid splits."""
    m = len(chain)
    out = []
    for q in range(2 * m - 1):
        vals = [
            bilinear(sys, chain[n], chain[q - n])
            for n in range(max(0, q - m + 1), min(q, m - 1) + 1)
        ]
        out.append(complex(np.mean(vals)))
    return out


def normalize_block(chain, sys: OscillatorSystem,
                    tol: Tolerances | None = None):
    """Normalize a raw chain to the canonical anti-diagonal pairing.

    Returns (chain, ledger).  Raises DegenerateChainError when the top
    pairing A_{M-1} vanishes, which cannot happen for a chain of a valid
    block and signals broken input.
    """
    tol = tol or DEFAULT_TOL
    chain = [np.array(v, dtype=complex) for v in chain]
    m = len(chain)
    a_top = bilinear(sys, chain[0], chain[m - 1])
    gnorm = float(np.linalg.norm(metric(sys), 2))
    scale = gnorm * np.linalg.norm(chain[0]) * np.linalg.norm(chain[m - 1])
    if abs(a_top) <= max(1e-12 * scale, 1e-300):
        raise DegenerateChainError(
            f"top pairing A_(M-1) = {a_top:.3e} vanishes; no valid block "
            "admits an eigenvector orthogonal to its whole chain"
        )
    c0 = a_top ** (-0.5)  # principal branch
    chain = [c0 * v for v in chain]
    c_coeffs = [complex(c0)]
    for n in range(1, m):
        a_n = bilinear(sys, chain[n], chain[m - 1])
        cn = -a_n / 2.0
        if abs(cn) > 0.0:
            shifted = [
                chain[k] + cn * chain[k - n] if k >= n else chain[k]
                for k in range(m)
            ]
            chain = shifted
        c_coeffs.append(complex(cn))
    flip = _sign_fix(chain[0])
    if flip < 0:
        chain = [-v for v in chain]
        c_coeffs[0] = -c_coeffs[0]
    ledger = NormalizationLedger(A=_pairing_diagnostics(sys, chain), c=c_coeffs)
    return chain, ledger


def _sign_fix(f0: np.ndarray) -> int:
    """+1 to keep, -1 to flip: largest entry's argument goes in (-pi/2, pi/2]."""
    idx = int(np.argmax(np.abs(f0)))
    a = f0[idx]
    tiny = 1e-12 * abs(a)
    if a.real > tiny:
        return 1
    if a.real < -tiny:
        return -1
    return 1 if a.imag > 0 else -1


def single_block_shortcut(sys: OscillatorSystem, tol: Tolerances | None = None):
    """Build the one nontrivial block without solving the chain relation.

    When exactly one Jordan block of size M >= 2 exists, the metric conjugate
    of its eigenvector, orthogonalized (in the bilinear sense) against all
    simple eigenvectors, is a valid top vector; the chain follows by
    iterating (H - omega).  Returns the normalized JordanBlock.  Refuses when
    the number of nontrivial blocks differs from one.
    """
    tol = tol or DEFAULT_TOL
    h = evolution_operator(sys)
    coeffs = char_poly(h)
    roots = poly_roots(coeffs, tol)
    groups, _ = _eigenstructure(h, coeffs, roots, tol)
    nontrivial = [(w, s) for w, sizes in groups for s in sizes if s >= 2]
    if len(nontrivial) != 1:
        raise ArgumentError(
            f"shortcut needs exactly one nontrivial block, found "
            f"{len(nontrivial)}"
        )
    omega_j, m = nontrivial[0]
    dim = sys.dim
    a = h - omega_j * np.eye(dim)
    _, null = numeric_rank_and_nullspace(a, tol)
    f_j = null[:, 0]
    psi = metric_conjugate(sys, f_j)
    for omega_o, sizes in groups:
        if omega_o == omega_j:
            continue
        for _ in sizes:
            _, onull = numeric_rank_and_nullspace(
                h - omega_o * np.eye(dim), tol
            )
            for col in range(onull.shape[1]):
                e = onull[:, col]
                psi = psi - e * (bilinear(sys, e, psi) / bilinear(sys, e, e))
    chain = chain_from_top(a, psi, m)
    chain, ledger = normalize_block(chain, sys, tol)
    return JordanBlock(omega=omega_j, size=m, chain=np.array(chain),
                       ledger=ledger)


# ---------------------------------------------------------------------------
# level crossing
# ---------------------------------------------------------------------------

def _raw_crossing_chains(h: np.ndarray, omega: complex, sizes, tol: Tolerances):
    """Independent raw chains for all blocks sharing one eigenvalue.

    Top vectors of height M are taken in ker(A^M), independent of
    ker(A^(M-1)) and of the images of taller chains at that height; lower
    members follow by iterating A.
    """
    dim = h.shape[0]
    a = h - omega * np.eye(dim)
    mmax = max(sizes)
    smax = max(float(np.linalg.norm(a, 2)), 1e-6)
    powers = [np.eye(dim, dtype=complex)]
    for _ in range(mmax):
        powers.append(powers[-1] @ a)
    kernels = [np.zeros((dim, 0), dtype=complex)]
    for k in range(1, mmax + 1):
        _, s, vh = np.linalg.svd(powers[k])
        rank = int(np.sum(s > tol.rank_tol * smax**k))
        kernels.append(vh[rank:].conj().T)
    chains = []
    tall_tops = []  # (height, top)
    for m in sorted(set(sizes), reverse=True):
        count = sizes.count(m)
        forbidden = [kernels[m - 1]]
        forbidden += [powers[hm - m] @ t[:, None] for hm, t in tall_tops]
        f_basis = orthonormal_columns(np.hstack(forbidden), tol)
        s_basis = kernels[m]
        proj = s_basis - f_basis @ (f_basis.conj().T @ s_basis)
        u, s, _ = np.linalg.svd(proj, full_matrices=False)
        avail = int(np.sum(s > tol.rank_tol * max(1.0, s[0] if s.size else 0.0)))
        if avail < count:
            raise ChainError(
                f"could not seed {count} independent chains of height {m} "
                f"at omega={omega}"
            )
        for col in range(count):
            top = u[:, col]
            chains.append(chain_from_top(a, top, m))
            tall_tops.append((m, top))
    chains.sort(key=lambda c: -len(c))
    return chains


def biorthogonalize_crossing(chains, sys: OscillatorSystem, h: np.ndarray,
                             omega: complex, tol: Tolerances | None = None):
    """Enforce the anti-diagonal pairing across blocks sharing one eigenvalue.

    Implements the recursive construction: secure a normalizable top vector
    for (one of) the largest blocks, normalize that block, mix the remaining
    tops so their pairings with the first block vanish, rebuild them
    downward, and recurse on the rest.  Returns a list of (chain, ledger)
    pairs sorted by descending size.
    """
    tol = tol or DEFAULT_TOL
    chains = sorted([list(c) for c in chains], key=lambda c: -len(c))
    if not chains:
        return []
    if len(chains) == 1:
        chain, ledger = normalize_block(chains[0], sys, tol)
        return [(chain, ledger)]

    dim = h.shape[0]
    a = h - omega * np.eye(dim)
    m1 = len(chains[0])
    maxed = [i for i, c in enumerate(chains) if len(c) == m1]

    if len(maxed) > 1:
        tops = [chains[i][-1] for i in maxed]
        apow = np.linalg.matrix_power(a, m1 - 1)
        gnorm = float(np.linalg.norm(metric(sys), 2))
        anorm = float(np.linalg.norm(apow, 2))
        candidates = list(tops)
        for i in range(len(tops)):
            for j in range(i + 1, len(tops)):
                candidates.append(tops[i] + tops[j])
        vals = [bilinear(sys, v, apow @ v) for v in candidates]
        scales = [
            gnorm * anorm * float(np.linalg.norm(v)) ** 2 for v in candidates
        ]
        quality = [abs(v) / max(s, 1e-300) for v, s in zip(vals, scales)]
        best = int(np.argmax(quality))
        if quality[best] <= 1e3 * tol.rank_tol:
            raise CrossingError(
                "the quadratic form on the top-vector span vanishes "
                "identically; the input basis is not a valid Jordan family"
            )
        chosen = candidates[best]
        span = orthonormal_columns(np.column_stack(tops), tol)
        v_unit = chosen / np.linalg.norm(chosen)
        rest_span = span - v_unit[:, None] @ (v_unit.conj()[None, :] @ span)
        others = orthonormal_columns(rest_span, tol)
        rebuilt = [chain_from_top(a, chosen, m1)]
        rebuilt += [
            chain_from_top(a, others[:, k], m1) for k in range(others.shape[1])
        ]
        chains = rebuilt + [chains[i] for i in range(len(chains)) if i not in maxed]
        chains.sort(key=lambda c: -len(c))

    first, ledger1 = normalize_block(chains[0], sys, tol)
    rest = []
    for c in chains[1:]:
        mj = len(c)
        top = c[-1]
        for n in range(m1 - mj, m1):
            coeff = bilinear(sys, top, first[n])
            top = top - coeff * first[m1 - 1 - n]
        rest.append(chain_from_top(a, top, mj))
    return [(first, ledger1)] + biorthogonalize_crossing(rest, sys, h, omega, tol)


# ---------------------------------------------------------------------------
# conjugation, duals, assembly
# ---------------------------------------------------------------------------

def conjugate_chain(chain: np.ndarray) -> np.ndarray:
    """Partner chain f_{-j,n} = + i^M (-1)^n conj(f_{j,n})."""
    m = len(chain)
    phase = 1j**m
    return np.array(
        [phase * (-1.0) ** n * np.conj(chain[n]) for n in range(m)]
    )


def _detect_self_conjugation(chain: np.ndarray) -> int | None:
    """Realized sign of the conjugation rule as a self-symmetry, or None."""
    cand = conjugate_chain(chain)
    norms = np.array([np.linalg.norm(v) for v in chain])
    d_plus = max(
        np.linalg.norm(chain[n] - cand[n]) / norms[n] for n in range(len(chain))
    )
    d_minus = max(
        np.linalg.norm(chain[n] + cand[n]) / norms[n] for n in range(len(chain))
    )
    if d_plus <= 1e-8:
        return 1
    if d_minus <= 1e-8:
        return -1
    return None


def enforce_conjugation(spectrum: Spectrum) -> Spectrum:
    """Pair mirror blocks and rebuild each partner from the conjugation rule.

    Blocks with Re(omega) > 0 keep their computed chains and get labels
    j = 1, 2, ...; their partners at -conj(omega) are replaced by the
    conjugated chains (sign +) and labeled -j.  Blocks on the negative
    imaginary axis are labeled 0 and carry the detected self-symmetry sign.
    """
    tol = spectrum.tol
    scale = 1.0 + max(abs(b.omega) for b in spectrum.blocks)
    axis_tol = tol.cluster_tol * scale
    blocks = spectrum.blocks
    used = set()
    next_label = 1
    for i, b in enumerate(blocks):
        if abs(b.omega.real) <= axis_tol:
            b.label = 0
            b.conj_sign = _detect_self_conjugation(b.chain)
            continue
        if i in used or b.omega.real < 0:
            continue
        partner = None
        for j, other in enumerate(blocks):
            if j == i or j in used or other.omega.real >= 0:
                continue
            if (
                abs(other.omega + np.conj(b.omega)) <= 10.0 * axis_tol
                and other.size == b.size
            ):
                partner = j
                break
        if partner is None:
            raise PairingError(
                f"eigenvalue {b.omega} has no mirror partner at "
                f"{-np.conj(b.omega)}"
            )
        b.label = next_label
        p = blocks[partner]
        p.omega = -np.conj(b.omega)
        p.chain = conjugate_chain(b.chain)
        p.label = -next_label
        p.conj_sign = 1
        b.conj_sign = 1
        used.add(i)
        used.add(partner)
        next_label += 1
    return spectrum


def dual_basis(spectrum: Spectrum) -> Spectrum:
    """Attach duals f^{j,n} = conj(g f_{j,M-1-n}) to every block."""
    sys = spectrum.system
    for b in spectrum.blocks:
        m = b.size
        b.duals = np.array(
            [metric_conjugate(sys, b.chain[m - 1 - n]) for n in range(m)]
        )
    return spectrum


def _basis_matrices(spectrum: Spectrum):
    """(F, D): columns of all chain vectors and duals in block order."""
    f_cols = []
    d_cols = []
    for b in spectrum.blocks:
        for n in range(b.size):
            f_cols.append(b.chain[n])
            d_cols.append(b.duals[n])
    return np.column_stack(f_cols), np.column_stack(d_cols)


def verify_spectrum(spectrum: Spectrum, strict: bool = True) -> dict:
    """Residuals of the chain relation, pairings, duals, and completeness.

    With strict=True raises VerificationError when any residual exceeds
    residual_tol, unless the only offenders are blocks demoted from
    near-critical clusters (whose accuracy is limited by the cluster
    diameter, which the report records).
    """
    sys = spectrum.system
    tol = spectrum.tol
    h = spectrum.operator()
    hnorm = float(np.linalg.norm(h, 2))
    dim = sys.dim

    chain_res = 0.0
    flagged_chain_res = 0.0
    for b in spectrum.blocks:
        a = h - b.omega * np.eye(dim)
        for n in range(b.size):
            prev = b.chain[n - 1] if n > 0 else np.zeros(dim, dtype=complex)
            r = np.linalg.norm(a @ b.chain[n] - prev)
            r /= (hnorm + abs(b.omega)) * max(1.0, np.linalg.norm(b.chain[n]))
            if b.near_critical:
                flagged_chain_res = max(flagged_chain_res, r)
            else:
                chain_res = max(chain_res, r)

    f_mat, d_mat = _basis_matrices(spectrum)
    g = metric(sys)
    gram = f_mat.T @ g @ f_mat
    expected = np.zeros_like(gram)
    pos = 0
    for b in spectrum.blocks:
        m = b.size
        expected[pos : pos + m, pos : pos + m] = np.fliplr(np.eye(m))
        pos += m
    gram_res = float(np.max(np.abs(gram - expected)))
    dual_res = float(np.max(np.abs(d_mat.conj().T @ f_mat - np.eye(dim))))

    comp = np.zeros((dim, dim), dtype=complex)
    for b in spectrum.blocks:
        m = b.size
        for n in range(m):
            comp += np.outer(b.chain[n], g @ b.chain[m - 1 - n])
    comp_res = float(np.max(np.abs(comp - np.eye(dim))))

    sizes_ok = sum(b.size for b in spectrum.blocks) == dim
    report = {
        "chain_residual": float(chain_res),
        "chain_residual_flagged": float(flagged_chain_res),
        "bilinear_gram_residual": gram_res,
        "dual_biorthogonality_residual": dual_res,
        "completeness_residual": comp_res,
        "block_sizes_sum_ok": bool(sizes_ok),
        "near_critical_clusters": len(spectrum.near_critical_clusters),
    }
    worst = max(chain_res, gram_res, dual_res, comp_res)
    report["max_residual"] = float(worst)
    report["pass"] = bool(sizes_ok and worst <= tol.residual_tol)
    if strict and not report["pass"] and not spectrum.near_critical_clusters:
        raise VerificationError(
            f"spectrum verification failed (max residual {worst:.3e} > "
            f"{tol.residual_tol:.1e})",
            report,
        )
    return report


def verify_representations(spectrum: Spectrum) -> dict:
    """Per-block metric and operator representations and their deviations.

    In the normalized basis the pairing matrix must be the anti-identity,
    the mixed-index operator the usual Jordan form, and the lowered-index
    operator the symmetric anti-triangular form (omega on the anti-diagonal,
    ones just below it).  Report only; never raises.
    """
    sys = spectrum.system
    h = spectrum.operator()
    g = metric(sys)
    out = {"blocks": [], "max_deviation": 0.0}
    for b in spectrum.blocks:
        m = b.size
        fl = np.fliplr(np.eye(m))
        gbar = np.array(
            [[b.chain[n] @ g @ b.chain[k] for k in range(m)] for n in range(m)]
        )
        h_low = np.array(
            [[b.chain[n] @ g @ (h @ b.chain[k]) for k in range(m)] for n in range(m)]
        )
        h_mix = np.array(
            [
                [np.vdot(b.duals[n], h @ b.chain[k]) for k in range(m)]
                for n in range(m)
            ]
        )
        jordan = b.omega * np.eye(m) + np.diag(np.ones(m - 1), 1)
        low_expect = np.zeros((m, m), dtype=complex)
        for n in range(m):
            for k in range(m):
                if n + k == m - 1:
                    low_expect[n, k] = b.omega
                elif n + k == m:
                    low_expect[n, k] = 1.0
        dev = max(
            float(np.max(np.abs(gbar - fl))),
            float(np.max(np.abs(h_mix - jordan))),
            float(np.max(np.abs(h_low - low_expect))),
        )
        out["blocks"].append(
            {
                "label": b.label,
                "omega": complex(b.omega),
                "size": m,
                "gbar_deviation": float(np.max(np.abs(gbar - fl))),
                "h_mixed_deviation": float(np.max(np.abs(h_mix - jordan))),
                "h_lowered_deviation": float(np.max(np.abs(h_low - low_expect))),
            }
        )
        out["max_deviation"] = max(out["max_deviation"], dev)
    return out


def _sort_blocks(blocks):
    blocks.sort(key=lambda b: (-b.size, -b.omega.imag, -b.omega.real))
    return blocks


def compute_spectrum(sys: OscillatorSystem,
                     tol: Tolerances | None = None) -> Spectrum:
    """Full Jordan decomposition: detect, build, normalize, pair, verify.

    Raises VerificationError when the constructed basis misses its
    invariants at residual_tol (never silently returns a bad basis).
    """
    tol = tol or DEFAULT_TOL
    h = evolution_operator(sys)
    coeffs = char_poly(h)
    roots = poly_roots(coeffs, tol)
    groups, flagged = _eigenstructure(h, coeffs, roots, tol)
    flagged_omegas = {
        complex(r) for cl in flagged for r in cl["roots"]
    }

    blocks = []
    crossing_groups = []
    for omega, sizes in groups:
        near = complex(omega) in flagged_omegas
        if len(sizes) == 1:
            chain = build_chain(h, omega, sizes[0], tol)
            chain, ledger = normalize_block(chain, sys, tol)
            blocks.append(
                JordanBlock(
                    omega=omega,
                    size=sizes[0],
                    chain=np.array(chain),
                    ledger=ledger,
                    near_critical=near,
                )
            )
        else:
            raw = _raw_crossing_chains(h, omega, sizes, tol)
            processed = biorthogonalize_crossing(raw, sys, h, omega, tol)
            gid = len(crossing_groups)
            first = len(blocks)
            for chain, ledger in processed:
                blocks.append(
                    JordanBlock(
                        omega=omega,
                        size=len(chain),
                        chain=np.array(chain),
                        ledger=ledger,
                        crossing_group=gid,
                        near_critical=near,
                    )
                )
            crossing_groups.append(
                CrossingGroup(
                    omega=omega,
                    sizes=sorted(sizes, reverse=True),
                    block_indices=list(range(first, first + len(sizes))),
                )
            )
    _sort_blocks(blocks)
    for g in crossing_groups:
        g.block_indices = [
            i for i, b in enumerate(blocks)
            if b.crossing_group is not None
            and crossing_groups[b.crossing_group] is g
        ]
    spectrum = Spectrum(
        system=sys,
        blocks=blocks,
        tol=tol,
        char_coeffs=coeffs,
        roots=roots,
        crossing_groups=crossing_groups,
        near_critical_clusters=flagged,
    )
    enforce_conjugation(spectrum)
    dual_basis(spectrum)
    verify_spectrum(spectrum, strict=True)
    return spectrum


# ---------------------------------------------------------------------------
# export
# ---------------------------------------------------------------------------

def _interleave(vec: np.ndarray):
    out = []
    for z in vec:
        out.extend([float(z.real), float(z.imag)])
    return out


def spectrum_to_json(spectrum: Spectrum) -> dict:
    """JSON-ready dict with blocks, chains, duals, and ledgers."""
    blocks = []
    for b in spectrum.blocks:
        entry = {
            "label": b.label,
            "omega": [float(b.omega.real), float(b.omega.imag)],
            "M": b.size,
            "conj_sign": b.conj_sign,
            "near_critical": b.near_critical,
            "chain": [_interleave(v) for v in b.chain],
            "duals": [_interleave(v) for v in b.duals]
            if b.duals is not None
            else None,
        }
        if b.ledger is not None:
            entry["ledger"] = {
                "A": [[z.real, z.imag] for z in b.ledger.A],
                "c": [[z.real, z.imag] for z in b.ledger.c],
            }
        blocks.append(entry)
    return {
        "N": spectrum.system.N,
        "nu": spectrum.nu,
        "tolerances": {
            "rank_tol": spectrum.tol.rank_tol,
            "cluster_tol": spectrum.tol.cluster_tol,
            "residual_tol": spectrum.tol.residual_tol,
        },
        "near_critical_clusters": [
            {
                "omega": [c["omega"].real, c["omega"].imag],
                "diameter": c["diameter"],
                "multiplicity": c["multiplicity"],
            }
            for c in spectrum.near_critical_clusters
        ],
        "blocks": blocks,
    }
