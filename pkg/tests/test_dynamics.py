import math

import numpy as np
import pytest

from critmode.dynamics import (
    NonDiagonalizableError,
    check_sum_rules,
    cluster_cancellation_experiment,
    energy,
    evolution_coefficient,
    evolve_basis_vector,
    evolve_state,
    greens_freq,
    greens_time,
    rk4_evolve,
)
from critmode.jordan import compute_spectrum
from critmode.linalg import ArgumentError
from critmode.model import build_system, evolution_operator

from conftest import well_separated_system


# --- evolution coefficients ---------------------------------------------------

def test_coefficient_values():
    assert evolution_coefficient(0, -1j, 0.7) == pytest.approx(
        np.exp(-0.7), abs=1e-14
    )
    t, w = 1.3, 0.4 - 0.2j
    want = (-1j * t) ** 3 / 6.0 * np.exp(-1j * w * t)
    assert evolution_coefficient(3, w, t) == pytest.approx(want, abs=1e-14)
    assert evolution_coefficient(2, w, 0.0) == 0.0
    assert evolution_coefficient(0, w, 0.0) == 1.0


def test_coefficient_log_space_branch():
    # large order times long horizon: log-space form must agree where both work
    w = -1j
    direct = (-1j * 10.0) ** 18 / math.factorial(18) * np.exp(-1j * w * 10.0)
    got = evolution_coefficient(18, w, 10.0)
    assert got == pytest.approx(direct, rel=1e-12)
    big = evolution_coefficient(40, w, 2.0e3)
    assert np.isfinite(big)


def test_coefficient_negative_order_rejected():
    with pytest.raises(ArgumentError):
        evolution_coefficient(-1, 0.0, 1.0)


def test_basis_vector_derivative_identity(catalog_spectra):
    # i d/dt f_{j,n}(t) = omega f_{j,n}(t) + f_{j,n-1}(t), finite differences
    spec = catalog_spectra["quartic-jb4"]
    b = spec.blocks[0]
    h = 1e-4
    for n in range(b.size):
        for t in (0.3, 1.1):
            lhs = 1j * (
                evolve_basis_vector(b, n, t + h) - evolve_basis_vector(b, n, t - h)
            ) / (2.0 * h)
            rhs = b.omega * evolve_basis_vector(b, n, t)
            if n > 0:
                rhs = rhs + evolve_basis_vector(b, n - 1, t)
            assert np.linalg.norm(lhs - rhs) <= 1e-6


def test_basis_vector_critical_damping_form(catalog_spectra):
    # f_{,1}(t) = e^{-t} (f_{,1} - i t f_{,0}): position part -i t e^{-t},
    # the critically damped t e^{-t} growth
    spec = catalog_spectra["single-critical"]
    b = spec.blocks[0]
    for t in (0.5, 2.0):
        got = evolve_basis_vector(b, 1, t)
        want = np.exp(-t) * (b.chain[1] - 1j * t * b.chain[0])
        assert np.allclose(got, want, atol=1e-14)
        assert got[0] == pytest.approx(-1j * t * np.exp(-t) * b.chain[0][0], abs=1e-14)


def test_basis_vector_index_range(catalog_spectra):
    b = catalog_spectra["single-critical"].blocks[0]
    with pytest.raises(ArgumentError):
        evolve_basis_vector(b, 2, 1.0)


# --- state evolution ----------------------------------------------------------

def test_evolve_state_identity_at_t0(catalog_spectra):
    rng = np.random.default_rng(0)
    for name, spec in catalog_spectra.items():
        dim = spec.system.dim
        for _ in range(100):
            phi = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
            out = evolve_state(spec, phi, 0.0)
            assert np.linalg.norm(out - phi) <= 1e-9 * np.linalg.norm(phi), name


def test_evolve_state_vs_rk_quartic(catalog_spectra):
    spec = catalog_spectra["quartic-jb4"]
    rng = np.random.default_rng(1)
    phi = rng.standard_normal(4) + 0j
    times = [0.5, 1.0, 2.0, 5.0]
    oracle = rk4_evolve(spec.system, phi, times)
    for i, t in enumerate(times):
        got = evolve_state(spec, phi, t)
        rel = np.linalg.norm(got - oracle[i]) / np.linalg.norm(oracle[i])
        assert rel <= 1e-8


def test_evolve_state_vs_rk_double(catalog_spectra):
    spec = catalog_spectra["double-jb2"]
    rng = np.random.default_rng(2)
    phi = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    times = [0.5, 1.0, 2.0, 5.0]
    oracle = rk4_evolve(spec.system, phi, times)
    for i, t in enumerate(times):
        got = evolve_state(spec, phi, t)
        rel = np.linalg.norm(got - oracle[i]) / np.linalg.norm(oracle[i])
        assert rel <= 1e-8


def test_evolve_state_semigroup(catalog_spectra):
    rng = np.random.default_rng(3)
    for name, spec in catalog_spectra.items():
        phi = rng.standard_normal(spec.system.dim) + 0j
        one = evolve_state(spec, evolve_state(spec, phi, 1.25), 2.0)
        two = evolve_state(spec, phi, 3.25)
        assert np.linalg.norm(one - two) <= 1e-8 * max(1.0, np.linalg.norm(two)), name


def test_energy_dissipation(catalog_spectra):
    rng = np.random.default_rng(4)
    for name, spec in catalog_spectra.items():
        phi = rng.standard_normal(spec.system.dim) + 0j
        grid = np.linspace(0.0, 5.0, 41)
        energies = [
            energy(spec.system, evolve_state(spec, phi, t)) for t in grid
        ]
        diffs = np.diff(energies)
        assert np.all(diffs <= 1e-10 * max(energies)), name


def test_evolve_state_dimension_check(catalog_spectra):
    with pytest.raises(ArgumentError):
        evolve_state(catalog_spectra["quartic-jb4"], np.zeros(3), 1.0)


def test_rk4_rejects_descending_times(catalog_spectra):
    sys = catalog_spectra["single-critical"].system
    with pytest.raises(ArgumentError):
        rk4_evolve(sys, np.zeros(2), [1.0, 0.5])


# --- Green's functions ----------------------------------------------------------

def test_greens_time_retardation_and_identity(catalog_spectra):
    spec = catalog_spectra["quartic-jb4"]
    assert np.max(np.abs(greens_time(spec, -1.0))) == 0.0
    assert np.max(np.abs(greens_time(spec, 0.0) - np.eye(4))) <= 1e-9


def test_greens_time_matches_evolve_state(catalog_spectra):
    rng = np.random.default_rng(5)
    for name, spec in catalog_spectra.items():
        phi = rng.standard_normal(spec.system.dim) + 0j
        for t in (0.5, 2.0):
            a = greens_time(spec, t) @ phi
            b = evolve_state(spec, phi, t)
            assert np.linalg.norm(a - b) <= 1e-10 * max(1.0, np.linalg.norm(b)), name


def test_greens_freq_solves_resolvent_equation(catalog_spectra):
    rng = np.random.default_rng(6)
    for name, spec in catalog_spectra.items():
        h = evolution_operator(spec.system)
        dim = spec.system.dim
        for _ in range(5):
            w = rng.standard_normal() + 1j * rng.standard_normal()
            g = greens_freq(spec, w)
            defect = np.linalg.norm((h - w * np.eye(dim)) @ g + 1j * np.eye(dim))
            assert defect <= 1e-9, name
            # direct resolvent oracle
            oracle = -1j * np.linalg.inv(h - w * np.eye(dim))
            assert np.max(np.abs(g - oracle)) <= 1e-8, name


def test_greens_freq_decay_at_infinity(catalog_spectra):
    spec = catalog_spectra["quartic-jb4"]
    n1 = np.linalg.norm(greens_freq(spec, 1e3j), 2)
    n2 = np.linalg.norm(greens_freq(spec, 1e4j), 2)
    assert n1 <= 2e-3
    assert n2 / n1 == pytest.approx(0.1, rel=0.05)


def test_greens_freq_pole_order(catalog_spectra):
    # |G(omega_j + delta)| grows like delta^(-M)
    for name, m in (("quartic-jb4", 4), ("cubic-jb3", 3), ("double-jb2", 2)):
        spec = catalog_spectra[name]
        block = spec.largest_block()
        deltas = np.logspace(-2, -4, 7)
        mags = [
            np.linalg.norm(greens_freq(spec, block.omega + d), 2) for d in deltas
        ]
        slope = np.polyfit(np.log10(deltas), np.log10(mags), 1)[0]
        assert slope == pytest.approx(-m, abs=0.05), name


def test_greens_freq_rejects_pole(catalog_spectra):
    spec = catalog_spectra["quartic-jb4"]
    with pytest.raises(ArgumentError):
        greens_freq(spec, spec.blocks[0].omega)


def test_greens_freq_is_fourier_transform_of_greens_time(catalog_spectra):
    # quadrature of G(t) e^{i w t} over t in [0, 40] on a shifted contour
    spec = catalog_spectra["cubic-jb3"]
    ts = np.linspace(0.0, 40.0, 8001)
    samples = np.array([greens_time(spec, t) for t in ts])
    for w in (0.9 + 0.5j, -1.7 + 0.5j):
        phases = np.exp(1j * w * ts)
        integrand = samples * phases[:, None, None]
        # composite Simpson
        h = ts[1] - ts[0]
        acc = integrand[0] + integrand[-1]
        acc = acc + 4.0 * integrand[1:-1:2].sum(axis=0)
        acc = acc + 2.0 * integrand[2:-1:2].sum(axis=0)
        ft = acc * h / 3.0
        direct = greens_freq(spec, w)
        assert np.max(np.abs(ft - direct)) <= 1e-4


def test_greens_sample_tagged(catalog_spectra):
    from critmode.dynamics import greens_sample

    spec = catalog_spectra["quartic-jb4"]
    t_sample = greens_sample(spec, "time", 0.5)
    assert t_sample.domain == "time"
    assert np.allclose(t_sample.matrix, greens_time(spec, 0.5))
    f_sample = greens_sample(spec, "frequency", 1.0 + 1.0j)
    assert np.allclose(f_sample.matrix, greens_freq(spec, 1.0 + 1.0j))
    with pytest.raises(ArgumentError):
        greens_sample(spec, "laplace", 1.0)


def test_greens_samples_csv(tmp_path, catalog_spectra):
    from critmode.dynamics import greens_samples_csv

    spec = catalog_spectra["quartic-jb4"]
    path = tmp_path / "greens.csv"
    omegas = [1.0 + 1.0j, -0.5 + 2.0j]
    greens_samples_csv(spec, omegas, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0].startswith("omega_re,omega_im,g00_re,g00_im")
    assert len(lines) == 1 + len(omegas)
    row = [float(v) for v in lines[1].split(",")]
    assert row[:2] == [1.0, 1.0]
    g = greens_freq(spec, 1.0 + 1.0j)
    assert row[2] == pytest.approx(g[0, 0].real, rel=1e-15)
    assert len(row) == 2 + 2 * 16


# --- sum rules ------------------------------------------------------------------

def test_sum_rules_catalog(catalog_spectra):
    for name, spec in catalog_spectra.items():
        report = check_sum_rules(spec)
        assert report.passed, (name, report.max_abs)
        assert max(report.max_abs) <= 1e-9


def test_sum_rules_random_diagonalizable():
    rng = np.random.default_rng(21)
    for _ in range(20):
        n = int(rng.integers(1, 5))
        sys = well_separated_system(rng, n)
        report = check_sum_rules(compute_spectrum(sys))
        assert report.passed


# --- cancellation experiment -----------------------------------------------------

def test_cancellation_weights_and_difference(catalog_spectra):
    spec = catalog_spectra["quartic-jb4"]
    e11 = np.array([[1.0, 0.0], [0.0, 0.0]])
    phi = np.array([1.0, 0.0, 0.0, 0.0], dtype=complex)
    t_grid = np.linspace(0.0, 1.5, 7)
    rep = cluster_cancellation_experiment(
        spec.system, e11, 1e-8, phi, t_grid, spectrum=spec
    )
    lam = abs(rep.lam)
    assert lam == pytest.approx((2e-8) ** 0.25, rel=1e-12)
    # per-mode weights blow up like lam^(1-M) while the summed difference
    # stays orders of magnitude below a single mode
    assert rep.max_weight > 0.01 * lam ** (-3)
    assert rep.max_diff <= 1e-4 * rep.max_weight
    assert rep.max_diff <= 5.0 * lam


def test_cancellation_rejects_unsplit_system(catalog_spectra):
    spec = catalog_spectra["quartic-jb4"]
    e11 = np.array([[1.0, 0.0], [0.0, 0.0]])
    with pytest.raises(NonDiagonalizableError):
        cluster_cancellation_experiment(
            spec.system, e11, 0.0, np.ones(4), [0.0, 1.0], spectrum=spec
        )


def test_cancellation_needs_single_nontrivial_block(catalog_spectra):
    spec = catalog_spectra["double-jb2"]  # two nontrivial blocks
    with pytest.raises(ArgumentError):
        cluster_cancellation_experiment(
            spec.system, np.eye(2), 1e-8, np.ones(4), [0.0], spectrum=spec
        )


def test_cancellation_jordan_branch_matches_rk(catalog_spectra):
    # the critical-point branch of the experiment is plain block evolution;
    # for the quartic the block is the whole space, so it must match the
    # direct integrator
    spec = catalog_spectra["quartic-jb4"]
    e11 = np.array([[1.0, 0.0], [0.0, 0.0]])
    rng = np.random.default_rng(7)
    phi = rng.standard_normal(4) + 0j
    t_grid = np.array([0.0, 0.5, 1.0])
    rep = cluster_cancellation_experiment(
        spec.system, e11, 1e-7, phi, t_grid, spectrum=spec
    )
    oracle = rk4_evolve(spec.system, phi, t_grid)
    for i in range(t_grid.size):
        assert np.linalg.norm(rep.jordan[i] - oracle[i]) <= 1e-8 * max(
            1.0, np.linalg.norm(oracle[i])
        )
