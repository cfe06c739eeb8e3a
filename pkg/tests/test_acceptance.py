"""Acceptance criteria, one test each, each reporting a PASS/FAIL line.

Run ``pytest -v tests/test_acceptance.py``; the lines appear in the
"acceptance criteria" section of the terminal summary.
"""

import math
import time

import numpy as np
import pytest

from bsgaps.asymptotics import convergence_study, schur_fixed_point, schur_separation, second_order_term
from bsgaps.bloch import ShellMargin
from bsgaps.lattice import lattice_check, min_angle_product
from bsgaps.model import (cos_potential, derive_spectral_window, identity_metric, make_potential,
                          region_parameters, zero_potential)
from bsgaps.perturbation import run_harness
from bsgaps.regions import classify, partition_diagnostics, pencil_decompose, volume_estimates
from bsgaps.spectral import cluster_check, integrated_density_of_states, spectral_report
from fractions import Fraction
from conftest import ACCEPTANCE_LINES
import oracles

pytestmark = pytest.mark.acceptance


def report(tag, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] {tag}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


# ----------------------------------------------------------------

def test_desk_gaps_only_at_low_energy():
    start = time.perf_counter()
    rep = spectral_report(cos_potential(2), identity_metric(2), (0, 120), ShellMargin(6), 48,
                          sample_lambdas=[20, 50, 100], refine=True, threads=1)
    elapsed = time.perf_counter() - start
    resolved = rep.resolved_gaps
    below = all(g.hi <= 10 for g in resolved)
    zetas = dict(rep.zeta_samples)
    ok = below and all(z > 0 for z in zetas.values()) and elapsed <= 600
    gaps = ", ".join(f"({g.lo:.3f}, {g.hi:.3f})" for g in resolved)
    report("desk gaps", ok, f"resolved gaps [{gaps}] all below 10; zeta at 20/50/100 = "
           f"{', '.join(f'{zetas[x]:.3f}' for x in (20, 50, 100))} > 0; {elapsed:.0f} s <= 600 s")


# ----------------------------------------------------------------

def direct_block_shift(xi, potential, metric, M):
    """Eigenvalues minus ``|F xi|^2`` of the matrix on ``xi + {|theta| <= M R}``, assembled directly."""
    d = len(xi)
    pts = np.array(list(oracles.integer_points(d, M * potential.R)), dtype=float)
    G = metric.G
    H = np.zeros((len(pts), len(pts)), dtype=complex)
    for i, p in enumerate(pts):
        for j, q in enumerate(pts):
            H[i, j] = potential.coeffs.get(tuple(int(x) for x in p - q), 0.0)
        H[i, i] += 2 * p @ G @ xi + p @ G @ p
    return np.linalg.eigvalsh(H)


def test_fixed_point_matches_direct_block():
    rng = np.random.default_rng(2)
    worst_err, worst_ratio, skipped, done = 0.0, 0.0, 0, 0
    for d in (2, 3):
        pot, metric = cos_potential(d), identity_metric(d)
        count = 0
        while count < 50:
            u = rng.standard_normal(d)
            xi = rng.uniform(20, 200) * u / np.linalg.norm(u)
            if not schur_separation(xi, pot, metric).separated:
                skipped += 1
                continue
            tr = schur_fixed_point(xi, pot, metric)
            shifts = direct_block_shift(xi, pot, metric, 3)
            nearest = shifts[np.argmin(np.abs(shifts - tr.shift))]
            worst_err = max(worst_err, abs(nearest - tr.shift))
            worst_ratio = max([worst_ratio, *tr.contraction_ratios()])
            count += 1
        done += count
    ok = done == 100 and worst_err <= 1e-10 and worst_ratio <= 0.5
    report("schur oracle", ok, f"{done} points ({skipped} near-resonant skipped); max |g - direct| = "
           f"{worst_err:.2e} <= 1e-10; max contraction {worst_ratio:.3f} <= 0.5")


# ----------------------------------------------------------------

def test_second_order_convergence_rate():
    angle = math.pi / 5
    table = convergence_study([math.cos(angle), math.sin(angle)], [20, 40, 80, 160], cos_potential(2),
                              identity_metric(2))
    exact = second_order_term([10, Fraction(1, 3)], make_potential(2, {(1, 0): 1}), identity_metric(2))
    ok = not table.skipped and table.slope is not None and table.slope <= -2.5 and exact == Fraction(2, 399)
    report("asymptotic order", ok, f"slope {table.slope:.3f} <= -2.5 over rho 20..160; "
           f"closed form {exact} == 2/399")


# ----------------------------------------------------------------

def resonant_points(rng, d, lam, v, count):
    while count:
        th = rng.integers(-2, 3, size=d)
        if not th.any():
            continue
        th = th / np.linalg.norm(th)
        u = rng.standard_normal(d)
        u -= (u @ th) * th
        u /= np.linalg.norm(u)
        t = rng.uniform(-2, 2)
        count -= 1
        yield math.sqrt(lam + rng.uniform(-10, 10) * v - t * t) * u + t * th


def test_pencil_matches_direct_block():
    rng = np.random.default_rng(4)
    worst, done, sizes = 0.0, 0, []
    for d, rho, amp in ((2, 100.0, 0.25), (3, 1000.0, 0.02)):
        pot, metric = cos_potential(d, amp), identity_metric(d)
        window = derive_spectral_window(rho, pot, metric)
        params = region_parameters(d, rho, pot)
        count = 0
        for xi in resonant_points(rng, d, window.lam, window.v, 200):
            label = classify(xi, window, params, metric)
            if not label.resonant or label.decomposition.direction is None:
                continue
            pd = pencil_decompose(xi, window, params, pot, metric, label=label)
            shift = float(round(pd.r ** 2))
            offs = pd.offsets
            H = np.zeros((len(offs), len(offs)), dtype=complex)
            for i, p in enumerate(offs):
                for j, q in enumerate(offs):
                    H[i, j] = pot.coeffs.get(tuple(int(x) for x in p - q), 0.0)
                eta = xi + p
                H[i, i] += eta @ metric.G @ eta - shift
            direct = np.linalg.eigvalsh(H)
            worst = max(worst, float(np.max(np.abs(pd.spectrum(shift=shift) - direct))))
            sizes.append(len(offs))
            count += 1
            if count == 25:
                break
        done += count
    ok = done == 50 and worst <= 1e-9
    report("pencil identity", ok, f"{done} resonant points (blocks {min(sizes)}..{max(sizes)}); "
           f"max |d lambda| = {worst:.2e} <= 1e-9")


# ----------------------------------------------------------------

def test_lattice_bounds_and_oracles():
    rep = lattice_check(4, 5, 500, seed=1, angle_radius=8)
    exhaustive = min_angle_product(8)
    ok = rep.bound_violations == 0 and rep.oracle_mismatches == 0 and exhaustive >= 1 - 1e-12
    report("lattice geometry", ok, f"500 instances: {rep.bound_violations} bound violations, "
           f"{rep.oracle_mismatches} oracle mismatches; min sin(angle)|theta||mu| over B(8) = {exhaustive:.15f}")


# ----------------------------------------------------------------

def test_perturbation_bounds_hold():
    s = run_harness(500, seed=1, max_dim=40, max_blocks=5, chain_trials=100)
    ok = s.trials == 500 and s.violations == 0 and s.chain_trials == 100 and s.chain_violations == 0
    report("perturbation bounds", ok, f"{s.trials} admissible instances, {s.violations} violations "
           f"(worst ratio {s.worst_ratio:.3f}); {s.chain_trials} chain instances, {s.chain_violations} violations")


# ----------------------------------------------------------------

def test_resonance_partition():
    pot = make_potential(2, {(1, 1): 0.5, (2, 0): 0.5})
    metric = identity_metric(2)
    window = derive_spectral_window(1e6, pot, metric)
    params = region_parameters(2, 1e6, pot, M=3)
    a = partition_diagnostics(window, params, metric, 10 ** 4, seed=1)
    b = partition_diagnostics(window, params, metric, 10 ** 4, seed=1)
    ok = a.total and a.to_dict() == b.to_dict() and a.xi0_violations == 0 and params.R == 2
    report("region geometry", ok, f"{a.classified}/{a.samples} classified, deterministic; "
           f"{a.resonant} resonant, {a.xi0_violations} with |xi_V| >= 2 L_n "
           f"(max ratio {a.max_projection_ratio:.3f}); overlap rate {a.overlap_rate:.4f}")


# ----------------------------------------------------------------

def test_density_of_states():
    free, metric = zero_potential(2), identity_metric(2)
    N, err = integrated_density_of_states(free, metric, 50.0, 64, 12.0)
    rel = abs(N - 50 * math.pi) / (50 * math.pi)
    table = cluster_check(free, metric, [50, 100, 200], 1, 64, ShellMargin(6))
    ok = rel <= 0.02 and table.slope is not None and abs(table.slope - (-1)) <= 0.7
    report("density of states", ok, f"N(50) = {N:.3f} vs 50 pi = {50 * math.pi:.3f} "
           f"(rel {rel:.1e} <= 2e-2); cluster slope {table.slope:.3f} within 0.7 of -1")


# ----------------------------------------------------------------

def test_annulus_volume_scaling():
    free, metric = zero_potential(2), identity_metric(2)
    window = derive_spectral_window(30, free, metric)
    params = region_parameters(2, 30, R=1.0)
    wide = volume_estimates(window, params, metric, 2.0, 10 ** 6, seed=5)
    half = volume_estimates(window, params, metric, 1.0, 10 ** 6, seed=6)
    closed = 2 * math.pi * 2.0
    rel = abs(wide.vol_A - closed) / closed
    sigma = math.hypot(half.err_A, wide.err_A / 2)
    dev = abs(half.vol_A - wide.vol_A / 2)
    ok = rel <= 0.01 and dev <= 3 * sigma
    report("volume scaling", ok, f"vol(2) = {wide.vol_A:.4f} vs 4 pi = {closed:.4f} (rel {rel:.1e} <= 1e-2); "
           f"|vol(1) - vol(2)/2| = {dev:.4f} <= 3 sigma = {3 * sigma:.4f}")
