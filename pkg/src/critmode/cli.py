"""Command-line front end.

Subcommands
-----------
analyze          spectrum, verification, and sum-rule reports for a system
evolve           trajectory CSV, optionally cross-checked against the RK oracle
perturb          splitting sweep CSV (numerical vs predicted) for one direction
design           build catalog-family systems and write system JSON
reproduce-figure the five reference splitting diagrams as CSV + summary
cancellation     small-denominator experiment across an epsilon sweep

Systems are given as ``--system path.json`` or ``--system catalog:<name>``
with names single-critical, quartic-jb4, cubic-jb3, double-jb2, crossed-pair.
Tolerances come from defaults, then the CRITMODE_TOL_OVERRIDE environment
variable (a JSON object), then explicit flags.

Output is data, not plots: CSV files with 17-significant-digit floats (byte
deterministic for a fixed configuration) plus JSON summaries.  Exit codes:
0 success, 2 parse/configuration error, 3 verification failure, 4 numerical
convergence failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys as _sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import design as design_mod
from .design import catalog_entry, catalog_to_json
from .dynamics import (
    NonDiagonalizableError,
    check_sum_rules,
    cluster_cancellation_experiment,
    evolve_state,
    rk4_evolve,
)
from .jordan import (
    ChainError,
    CrossingError,
    DegenerateChainError,
    PairingError,
    VerificationError,
    compute_spectrum,
    spectrum_to_json,
    verify_representations,
    verify_spectrum,
)
from .linalg import ArgumentError, ConvergenceError, Tolerances
from .model import OscillatorSystem, load_system, save_system, system_to_json
from .perturb import (
    HigherOrderNonGenericError,
    MatchingAmbiguityError,
    NonGenericPerturbationError,
    assign_predictions,
    cluster_shifts,
    exact_perturbed_spectrum,
    loglog_slope,
    predict_splitting,
    predict_splitting_nongeneric,
    xi_generic,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_VERIFICATION = 3
EXIT_NUMERICAL = 4

ENV_TOL = "CRITMODE_TOL_OVERRIDE"


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


def _write_csv(path: Path, header, rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) if not isinstance(v, str) else v for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _write_json(path: Path, obj) -> None:
    path.write_text(
        json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n",
        encoding="utf-8",
    )


def _json_default(obj):
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.complexfloating):
        return [float(obj.real), float(obj.imag)]
    raise TypeError(f"cannot serialize {type(obj)}")


@dataclass
class RunConfig:
    """Resolved command configuration (tolerances, grids, output)."""

    command: str
    system_ref: str | None = None
    tol: Tolerances = field(default_factory=Tolerances)
    eps0: float = 1e-4
    eps_power: int = 4
    eps_count: int = 9
    out_dir: Path = Path(".")
    out_format: str = "csv"

    def eps_grid(self) -> np.ndarray:
        """Figure-style grid eps_n = n^p * eps0 for n = 0..count-1."""
        if self.eps_count < 1:
            raise ArgumentError("epsilon grid must be nonempty")
        n = np.arange(0, self.eps_count)
        return (n.astype(float) ** self.eps_power) * self.eps0


def _resolve_tol(args) -> Tolerances:
    values = {
        "rank_tol": Tolerances.rank_tol,
        "cluster_tol": Tolerances.cluster_tol,
        "residual_tol": Tolerances.residual_tol,
    }
    env = os.environ.get(ENV_TOL)
    if env:
        try:
            overrides = json.loads(env)
        except json.JSONDecodeError as exc:
            raise ArgumentError(f"cannot parse {ENV_TOL}: {exc}") from exc
        if not isinstance(overrides, dict):
            raise ArgumentError(f"{ENV_TOL} must hold a JSON object")
        for key, val in overrides.items():
            if key not in values:
                raise ArgumentError(f"unknown tolerance {key!r} in {ENV_TOL}")
            values[key] = float(val)
    if getattr(args, "tol_rank", None) is not None:
        values["rank_tol"] = args.tol_rank
    if getattr(args, "tol_cluster", None) is not None:
        values["cluster_tol"] = args.tol_cluster
    if getattr(args, "tol_residual", None) is not None:
        values["residual_tol"] = args.tol_residual
    return Tolerances(**values)


def _resolve_system(ref: str) -> OscillatorSystem:
    if ref.startswith("catalog:"):
        name = ref.split(":", 1)[1]
        try:
            return catalog_entry(name).system
        except KeyError as exc:
            raise ArgumentError(str(exc)) from exc
    return load_system(ref)


def _parse_phi(spec: str, dim: int, seed: int = 0) -> np.ndarray:
    if spec == "random":
        rng = np.random.default_rng(seed)
        return rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    try:
        vals = [complex(tok) for tok in spec.split(",")]
    except ValueError as exc:
        raise ArgumentError(f"cannot parse state {spec!r}: {exc}") from exc
    if len(vals) != dim:
        raise ArgumentError(f"state needs {dim} components, got {len(vals)}")
    return np.array(vals, dtype=complex)


def _parse_delta_k(spec: str, n: int) -> np.ndarray:
    """e11 | mu:a,b,c (2x2 symmetric) | path to a JSON matrix."""
    if spec == "e11":
        dk = np.zeros((n, n))
        dk[0, 0] = 1.0
        return dk
    if spec.startswith("mu:"):
        try:
            m11, m12, m22 = (float(t) for t in spec[3:].split(","))
        except ValueError as exc:
            raise ArgumentError(f"cannot parse {spec!r}: {exc}") from exc
        if n != 2:
            raise ArgumentError("mu:... shorthand needs a two-oscillator system")
        return np.array([[m11, m12], [m12, m22]])
    path = Path(spec)
    if not path.exists():
        raise ArgumentError(f"no such perturbation file: {spec}")
    dk = np.asarray(json.loads(path.read_text(encoding="utf-8")), dtype=float)
    if dk.shape != (n, n):
        raise ArgumentError(f"perturbation must be {n}x{n}, got {dk.shape}")
    if np.max(np.abs(dk - dk.T)) > 1e-12 * max(1.0, float(np.max(np.abs(dk)))):
        raise ArgumentError("perturbation matrix must be symmetric")
    return dk


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_analyze(args) -> int:
    tol = _resolve_tol(args)
    system = _resolve_system(args.system)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    spectrum = compute_spectrum(system, tol)
    _write_json(out / "spectrum.json", spectrum_to_json(spectrum))
    verification = verify_spectrum(spectrum, strict=False)
    reps = verify_representations(spectrum)
    sumrules = check_sum_rules(spectrum)
    verification["representation_max_deviation"] = reps["max_deviation"]
    verification["representations"] = reps["blocks"]
    verification["conjugation_signs"] = [
        {"label": b.label, "sign": b.conj_sign} for b in spectrum.blocks
    ]
    _write_json(out / "verification.json", verification)
    _write_json(
        out / "sumrules.json",
        {
            "max_abs": sumrules.max_abs,
            "threshold": sumrules.threshold,
            "pass": sumrules.passed,
        },
    )
    ok = (
        verification["pass"]
        and sumrules.passed
        and reps["max_deviation"] <= tol.residual_tol
    )
    print(
        f"analyze: nu={spectrum.nu} blocks "
        f"{[(b.label, b.size) for b in spectrum.blocks]} "
        f"max residual {verification['max_residual']:.3e} "
        f"-> {'pass' if ok else 'FAIL'}"
    )
    return EXIT_OK if ok else EXIT_VERIFICATION


def cmd_evolve(args) -> int:
    tol = _resolve_tol(args)
    system = _resolve_system(args.system)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    phi = _parse_phi(args.phi, system.dim, args.seed)
    if args.times:
        times = np.array(sorted(float(t) for t in args.times.split(",")))
    else:
        times = np.linspace(0.0, args.t_max, args.t_steps)
    spectrum = compute_spectrum(system, tol)
    states = np.array([evolve_state(spectrum, phi, t) for t in times])
    header = ["t"]
    for i in range(system.dim):
        header += [f"c{i}_re", f"c{i}_im"]
    rows = []
    deviation = 0.0
    oracle = None
    if args.oracle:
        oracle = rk4_evolve(system, phi, times[times >= 0.0])
        header += [f"rk_c{i}_{p}" for i in range(system.dim) for p in ("re", "im")]
    for it, t in enumerate(times):
        row = [t]
        for z in states[it]:
            row += [z.real, z.imag]
        if oracle is not None:
            for z in oracle[it]:
                row += [z.real, z.imag]
            deviation = max(
                deviation, float(np.linalg.norm(states[it] - oracle[it]))
            )
        rows.append(row)
    _write_csv(out / "trajectory.csv", header, rows)
    summary = {"t_count": int(times.size)}
    if args.oracle:
        summary["max_oracle_deviation"] = deviation
    _write_json(out / "evolve_summary.json", summary)
    print(
        "evolve: wrote trajectory.csv"
        + (f" (oracle deviation {deviation:.3e})" if args.oracle else "")
    )
    return EXIT_OK


def _sweep_rows(system, spectrum, block, delta_k, eps_values, tol):
    """Numerical vs predicted eigenvalue tracks; one row per (eps, mode)."""
    rows = []
    gap = min(
        (abs(block.omega - b.omega) for b in spectrum.blocks if b is not block),
        default=np.inf,
    )
    generic = None
    for eps in eps_values:
        if eps == 0.0:
            # the unperturbed point: the caption grids start at n = 0
            for k in range(block.size):
                rows.append(
                    [0.0, k, block.omega.real, block.omega.imag,
                     block.omega.real, block.omega.imag, 0.0]
                )
            continue
        try:
            pred = predict_splitting(block, delta_k, eps)
            predicted = pred.eigenvalues
            generic = True
        except NonGenericPerturbationError:
            ng = predict_splitting_nongeneric(block, delta_k, eps)
            predicted = ng.eigenvalues
            generic = False
        evals = exact_perturbed_spectrum(system, delta_k, eps, tol)
        shifts = cluster_shifts(evals, block.omega, block.size, gap)
        numerical = block.omega + shifts
        perm = assign_predictions(numerical, predicted)
        for k in range(block.size):
            p = predicted[perm[k]]
            rows.append(
                [
                    eps,
                    k,
                    numerical[k].real,
                    numerical[k].imag,
                    p.real,
                    p.imag,
                    abs(numerical[k] - p),
                ]
            )
    return rows, generic


SWEEP_HEADER = [
    "eps",
    "k",
    "num_re",
    "num_im",
    "pred_re",
    "pred_im",
    "abs_error",
]


def cmd_perturb(args) -> int:
    tol = _resolve_tol(args)
    system = _resolve_system(args.system)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    delta_k = _parse_delta_k(args.dk, system.N)
    config = RunConfig(
        command="perturb",
        tol=tol,
        eps0=args.eps0,
        eps_power=args.eps_power,
        eps_count=args.eps_count,
    )
    spectrum = compute_spectrum(system, tol)
    block = spectrum.largest_block()
    if block.size < 2:
        raise ArgumentError("perturb needs a critical system (a block with M >= 2)")
    rows, generic = _sweep_rows(
        system, spectrum, block, delta_k, config.eps_grid(), tol
    )
    _write_csv(out / "sweep.csv", SWEEP_HEADER, rows)
    xi = xi_generic(block, delta_k)
    summary = {
        "omega": complex(block.omega),
        "M": block.size,
        "xi": complex(xi),
        "generic": bool(generic),
    }
    if not generic:
        from .perturb import xi_prime

        summary["xi_prime"] = complex(xi_prime(block, delta_k))
    _write_json(out / "prediction.json", summary)
    print(f"perturb: wrote sweep.csv ({len(rows)} rows), generic={generic}")
    return EXIT_OK


def cmd_design(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.family == "quartic":
        system = design_mod.quartic_critical(args.x, args.y)
    elif args.family == "cubic":
        system = design_mod.cubic_critical(args.b, args.gamma11)
    elif args.family == "double2":
        system = design_mod.double2_critical(args.b)
    elif args.family == "scale":
        if not args.system:
            raise ArgumentError("design scale needs --system")
        system = design_mod.scale_system(_resolve_system(args.system), args.a)
    else:  # catalog export
        entry = catalog_entry(args.name)
        _write_json(out / f"catalog_{entry.name}.json", catalog_to_json(entry))
        print(f"design: wrote catalog_{entry.name}.json")
        return EXIT_OK
    save_system(system, out / "system.json")
    print(f"design: wrote system.json ({args.family})")
    return EXIT_OK


# Exponent and accuracy fits use dedicated small-epsilon grids where
# first-order theory dominates but the eigenvalue shifts still stand well
# clear of the root-finder noise floor; the display grid follows the n^p
# convention of the figures themselves.  Figure 4's window sits higher
# because its moving pair splits only like eps**(1/2).
FIGURES = {
    1: {"system": "quartic-jb4", "dk": "e11", "power": 4, "nongeneric": False,
        "fit_decades": (-8, -4)},
    2: {"system": "quartic-jb4", "dk": "mu:1,-1.5,2", "power": 3,
        "nongeneric": True, "fit_decades": (-8, -4)},
    3: {"system": "cubic-jb3", "dk": "e11", "power": 3, "nongeneric": False,
        "fit_decades": (-8, -4)},
    4: {"system": "cubic-jb3", "dk": "mu:-2,0.5,1", "power": 2,
        "nongeneric": True, "fit_decades": (-6, -3)},
    5: {"system": "double-jb2", "dk": "e11", "power": 2, "nongeneric": False,
        "fit_decades": (-8, -4)},
}


def _figure_fit_grid(eps0: float, decades=(-8, -4)) -> np.ndarray:
    return np.sign(eps0) * np.logspace(decades[0], decades[1], 9)


def figure_summary(system, spectrum, block, delta_k, eps0, tol, nongeneric,
                   fit_decades=(-8, -4)):
    """Exponent fits, equiangularity, and first-order accuracy diagnostics."""
    fit_grid = _figure_fit_grid(eps0, fit_decades)
    gap = min(
        (abs(block.omega - b.omega) for b in spectrum.blocks if b is not block),
        default=np.inf,
    )
    m = block.size
    moving_mags = []
    errors = []
    lams = []
    last_shifts = None
    for eps in fit_grid:
        evals = exact_perturbed_spectrum(system, delta_k, eps, tol)
        shifts = cluster_shifts(evals, block.omega, m, gap)
        order = np.argsort(np.abs(shifts))
        if nongeneric:
            moving = shifts[order[1:]]
            ng = predict_splitting_nongeneric(block, delta_k, eps)
            predicted = ng.shifts
            lam = abs(complex(2.0 * eps * ng.xi_prime) ** (1.0 / (m - 1)))
        else:
            moving = shifts
            pred = predict_splitting(block, delta_k, eps)
            predicted = pred.shifts
            lam = abs(pred.lam)
        moving_mags.append(float(np.mean(np.abs(moving))))
        perm = assign_predictions(moving, predicted)
        errors.append(
            float(np.mean(np.abs(moving - predicted[perm])))
        )
        lams.append(lam)
        last_shifts = moving if eps == fit_grid[0] else last_shifts
    exponent, exp_res = loglog_slope(np.abs(fit_grid), moving_mags)
    error_slope, _ = loglog_slope(lams, errors)

    # Equiangularity at the smallest epsilon of the fit grid.
    n_dir = len(last_shifts)
    sector = 2.0 * np.pi / max(n_dir, 1)
    worst_ang = 0.0
    for i in range(n_dir):
        for j in range(i + 1, n_dir):
            d = np.angle(last_shifts[i] / last_shifts[j])
            worst_ang = max(
                worst_ang, abs(d - sector * round(d / sector))
            )
    summary = {
        "exponent": exponent,
        "exponent_fit_residual": exp_res,
        "first_order_error_slope": error_slope,
        "equiangular_worst_offset": worst_ang,
        "equiangular_allowance": 5.0 * lams[0],
        "lambda_smallest": lams[0],
    }
    if nongeneric:
        # The static mode moves at O(eps); fit it on a higher grid where it
        # stands clear of the eigensolver noise floor.
        statics = []
        eps_disp = np.sign(eps0) * np.logspace(-5, -2, 8)
        for eps in eps_disp:
            evals = exact_perturbed_spectrum(system, delta_k, eps, tol)
            shifts = cluster_shifts(evals, block.omega, m, gap)
            statics.append(float(np.min(np.abs(shifts))))
        static_slope, _ = loglog_slope(np.abs(eps_disp), statics)
        summary["static_mode_slope"] = static_slope
    return summary


def cmd_reproduce_figure(args) -> int:
    tol = _resolve_tol(args)
    if args.figure not in FIGURES:
        raise ArgumentError("figure id must be 1..5")
    fig = FIGURES[args.figure]
    config = RunConfig(
        command="reproduce-figure",
        tol=tol,
        eps0=args.eps0,
        eps_power=fig["power"],
        eps_count=args.eps_count,
    )
    if config.eps_power not in (2, 3, 4):
        raise ArgumentError("figure grids use powers 2, 3, or 4")
    system = catalog_entry(fig["system"]).system
    delta_k = _parse_delta_k(fig["dk"], system.N)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    spectrum = compute_spectrum(system, tol)
    block = spectrum.largest_block()
    rows, _ = _sweep_rows(system, spectrum, block, delta_k, config.eps_grid(), tol)
    _write_csv(out / f"figure{args.figure}.csv", SWEEP_HEADER, rows)
    summary = figure_summary(
        system, spectrum, block, delta_k, config.eps0, tol, fig["nongeneric"],
        fig["fit_decades"],
    )
    if not fig["nongeneric"]:
        # the caption grids make |shift| proportional to n; report how
        # closely the numerical tracks follow that spacing
        per_n = {}
        for row in rows:
            eps = row[0]
            if eps == 0.0:
                continue
            n = round(abs(eps / config.eps0) ** (1.0 / config.eps_power))
            shift = abs(complex(row[2], row[3]) - block.omega)
            per_n.setdefault(n, []).append(shift)
        ratios = np.array(
            [np.mean(v) / n for n, v in sorted(per_n.items())]
        )
        summary["spacing_linearity_max_dev"] = float(
            np.max(np.abs(ratios / np.mean(ratios) - 1.0))
        )
    summary["figure"] = args.figure
    summary["eps0"] = config.eps0
    summary["eps_power"] = config.eps_power
    _write_json(out / f"figure{args.figure}_summary.json", summary)
    print(
        f"figure {args.figure}: exponent {summary['exponent']:.4f}, "
        f"first-order error slope {summary['first_order_error_slope']:.3f}"
    )
    return EXIT_OK


def cmd_cancellation(args) -> int:
    tol = _resolve_tol(args)
    system = _resolve_system(args.system)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    delta_k = _parse_delta_k(args.dk, system.N)
    phi = _parse_phi(args.phi, system.dim, args.seed)
    t_grid = np.linspace(0.0, args.t_max, args.t_steps)
    eps_values = np.logspace(
        np.log10(args.eps_min), np.log10(args.eps_max), args.eps_count
    )
    spectrum = compute_spectrum(system, tol)
    nontrivial = [b for b in spectrum.blocks if b.size >= 2]
    rows = []
    if not nontrivial:
        # Far from criticality every mode stands alone: per-mode weights are
        # O(1) and there is no small denominator to cancel.
        from .model import bilinear

        for b in spectrum.blocks:
            w = bilinear(system, b.chain[0], phi)  # (f,f) = 1 after normalization
            rows.append([0.0, b.label, abs(w), 0.0, 0.0])
        _write_csv(
            out / "cancellation.csv",
            ["eps", "mode", "weight", "lambda_abs", "max_diff"],
            rows,
        )
        _write_json(
            out / "cancellation_summary.json",
            {"diagonalizable": True, "max_weight": max(r[2] for r in rows)},
        )
        print("cancellation: diagonalizable system, per-mode weights O(1)")
        return EXIT_OK
    lams, weights, diffs = [], [], []
    for eps in eps_values:
        rep = cluster_cancellation_experiment(
            system, delta_k, eps, phi, t_grid, tol, spectrum
        )
        lams.append(abs(rep.lam))
        weights.append(rep.max_weight)
        diffs.append(rep.max_diff)
        for k in range(rep.size):
            rows.append([eps, k, rep.mode_weights[k], abs(rep.lam), rep.max_diff])
    _write_csv(
        out / "cancellation.csv",
        ["eps", "mode", "weight", "lambda_abs", "max_diff"],
        rows,
    )
    w_slope, w_res = loglog_slope(lams, weights)
    d_slope, d_res = loglog_slope(lams, diffs)
    _write_json(
        out / "cancellation_summary.json",
        {
            "diagonalizable": False,
            "weight_slope": w_slope,
            "weight_fit_residual": w_res,
            "diff_slope": d_slope,
            "diff_fit_residual": d_res,
            "block_size": nontrivial[0].size,
        },
    )
    print(
        f"cancellation: weight slope {w_slope:.3f}, diff slope {d_slope:.3f}"
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _add_common(p, system_required=True):
    if system_required:
        p.add_argument("--system", required=True,
                       help="system JSON path or catalog:<name>")
    else:
        p.add_argument("--system", help="system JSON path or catalog:<name>")
    p.add_argument("--tol-rank", type=float, default=None)
    p.add_argument("--tol-cluster", type=float, default=None)
    p.add_argument("--tol-residual", type=float, default=None)
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--format", choices=("csv", "json"), default="csv",
                   dest="out_format")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="critmode",
        description="Jordan-basis analysis of critically damped oscillator "
        "networks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="spectrum and verification reports")
    _add_common(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("evolve", help="trajectory CSV")
    _add_common(p)
    p.add_argument("--phi", default="random",
                   help="comma list of complex components, or 'random'")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--t-max", type=float, default=5.0)
    p.add_argument("--t-steps", type=int, default=51)
    p.add_argument("--times", default=None, help="explicit comma list of times")
    p.add_argument("--oracle", action="store_true",
                   help="add fixed-step RK columns and the max deviation")
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("perturb", help="splitting sweep for one direction")
    _add_common(p)
    p.add_argument("--dk", required=True, help="e11 | mu:a,b,c | matrix JSON path")
    p.add_argument("--eps0", type=float, default=1e-4)
    p.add_argument("--eps-power", type=int, default=4)
    p.add_argument("--eps-count", type=int, default=9)
    p.set_defaults(func=cmd_perturb)

    p = sub.add_parser("design", help="build critical systems")
    _add_common(p, system_required=False)
    p.add_argument("--family", required=True,
                   choices=("quartic", "cubic", "double2", "scale", "catalog"))
    p.add_argument("--x", type=float, default=0.0)
    p.add_argument("--y", type=float, default=0.0)
    p.add_argument("--b", type=float, default=4.0)
    p.add_argument("--gamma11", type=float, default=6.0)
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--name", default="quartic-jb4", help="catalog entry to export")
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("reproduce-figure", help="reference splitting diagrams")
    _add_common(p, system_required=False)
    p.add_argument("--figure", type=int, required=True)
    p.add_argument("--eps0", type=float, default=1e-4)
    p.add_argument("--eps-count", type=int, default=9)
    p.set_defaults(func=cmd_reproduce_figure)

    p = sub.add_parser("cancellation", help="small-denominator experiment")
    _add_common(p)
    p.add_argument("--dk", default="e11")
    p.add_argument("--phi", default="random")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--t-max", type=float, default=1.5)
    p.add_argument("--t-steps", type=int, default=7)
    p.add_argument("--eps-min", type=float, default=1e-10)
    p.add_argument("--eps-max", type=float, default=1e-6)
    p.add_argument("--eps-count", type=int, default=9)
    p.set_defaults(func=cmd_cancellation)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except (ArgumentError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return EXIT_CONFIG
    except VerificationError as exc:
        print(f"verification failure: {exc}", file=_sys.stderr)
        if exc.report:
            print(
                json.dumps(exc.report, indent=2, sort_keys=True,
                           default=_json_default),
                file=_sys.stderr,
            )
        return EXIT_VERIFICATION
    except (
        ConvergenceError,
        NonDiagonalizableError,
        ChainError,
        DegenerateChainError,
        CrossingError,
        PairingError,
        MatchingAmbiguityError,
        NonGenericPerturbationError,
        HigherOrderNonGenericError,
        np.linalg.LinAlgError,
    ) as exc:
        print(f"numerical failure: {exc}", file=_sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    raise SystemExit(main())
