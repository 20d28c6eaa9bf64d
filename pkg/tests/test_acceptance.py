"""End-to-end acceptance checks.

Each test prints a single ``PASS``/``FAIL`` line with the measured numbers
before it asserts, so ``pytest -v`` output doubles as a results log.  The
cascaded checks take several minutes in total on one core.
"""

import math
import time

import numpy as np
import pytest

from ripsqueeze.analytic import SqueezeParams, optimal_squeezing, rate_from_alpha
from ripsqueeze.cascaded import CascadedConfig, DpaParams, calibrate_pump, run_gate
from ripsqueeze.channel import ChannelElements, average_fidelity, corrected_matrix
from ripsqueeze.experiments import SweepSpec, best, calibrate_drive, reproduce_table1, sweep
from ripsqueeze.trajectory import DriveParams, SystemParams, propagate_sectors
from oracles import coherent_master_equation, monte_carlo_average_fidelity

ROW1 = SystemParams()


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail}")
        return ok

    return emit


@pytest.fixture(scope="module")
def row1_drive():
    return DriveParams(eps0=calibrate_drive(ROW1))


def test_criterion_1_drive_calibration(report):
    parts, ok = [], True
    for dr, quoted in ((160.0, 278.5), (320.0, 796.0), (640.0, 2310.0)):
        start = time.perf_counter()
        eps0 = calibrate_drive(SystemParams(delta_r=dr))
        elapsed = time.perf_counter() - start
        dev = eps0 / quoted - 1
        ok &= abs(dev) <= 0.05 and elapsed < 1.0
        parts.append(f"{dr:g} MHz -> {eps0:.1f} ({dev:+.2%}, {elapsed:.2f} s)")
    assert report(1, ok, "; ".join(parts))


def test_criterion_2_photon_trajectory(report):
    traj = propagate_sectors(ROW1, DriveParams(eps0=796.0))
    peak, closure = traj.max_photons(0), traj.closure_ratio(0)
    ok = abs(peak - 6.2) <= 0.3 and closure < 1e-3
    assert report(2, ok, f"max |alpha|^2 = {peak:.4f}, closure = {closure:.2e}")


def test_criterion_3_table_analytic(report):
    rep = reproduce_table1(engines=("analytic",))
    worst = max(abs(c.deviation) for c in rep.cells)
    assert report(3, rep.ok, f"analytic engine, worst deviation {worst:.3f} pp (tolerance 0.3)\n{rep.format()}")


@pytest.mark.slow
def test_criterion_3_table_cascaded(report):
    rep = reproduce_table1(engines=("cascaded",))
    worst = max(abs(c.deviation) for c in rep.cells)
    assert report(3, rep.ok, f"cascaded engine, worst deviation {worst:.3f} pp (tolerance 0.5)\n{rep.format()}")


def test_criterion_4_large_detuning_gain_analytic(report):
    p = SystemParams(delta_r=640.0)
    drive = DriveParams(eps0=calibrate_drive(p))
    db, e_min, errors = optimal_squeezing(p, drive, 0.0, np.arange(0.0, 21.0))
    ratio = e_min / errors[0]
    assert report(4, ratio <= 0.1, f"analytic E(0) = {errors[0]:.3e}, E({db:g} dB) = {e_min:.3e}, ratio {ratio:.3f}")


@pytest.mark.slow
def test_criterion_4_large_detuning_gain_cascaded(report):
    # the minimum over a subgrid bounds the full-grid minimum from above
    p = SystemParams(delta_r=640.0)
    drive = DriveParams(eps0=calibrate_drive(p))
    recs = sweep(SweepSpec(system=p, drive=drive, grid=(0.0, 17.0, 19.0), engine="cascaded", dpa=DpaParams()))
    base = recs[0].error
    top = best(recs, "cascaded")
    ratio = top.error / base
    assert report(4, ratio <= 0.1, f"cascaded E(0) = {base:.3e}, E({top.value:g} dB) = {top.error:.3e}, ratio {ratio:.3f}")


def test_criterion_5_theta_optimum(report, row1_drive):
    step = math.pi / 36
    grid = tuple(step * k for k in range(-18, 19))
    recs = sweep(SweepSpec(system=ROW1, drive=row1_drive, squeeze=SqueezeParams(db=5.7), axis="theta", grid=grid))
    top = best(recs)
    ok = abs(top.value) <= step / 2
    assert report(5, ok, f"minimum at theta = {top.value:+.4f} rad (E = {top.error:.4e}), grid step {step:.4f}")


def test_criterion_6_optimum_grows_with_detuning(report):
    out = {}
    for dr in (160.0, 640.0):
        p = SystemParams(delta_r=dr)
        out[dr], _, _ = optimal_squeezing(p, DriveParams(eps0=calibrate_drive(p)), 0.0, np.arange(0.0, 21.0))
    ok = out[160.0] < out[640.0]
    assert report(6, ok, f"analytic argmin {out[160.0]:g} dB at 160 MHz, {out[640.0]:g} dB at 640 MHz")


@pytest.mark.slow
def test_criterion_7_coherent_limit(report, row1_drive):
    run = run_gate(CascadedConfig(system=ROW1, drive=row1_drive, dpa=DpaParams(32.0, 0.0), diag_every=50))
    gamma_me, _, t_me, photons_me = coherent_master_equation(
        ROW1.delta_r, ROW1.chi, ROW1.kappa, row1_drive.eps0, row1_drive.tau
    )
    dgamma = float(np.max(np.abs(run.channel.gamma - gamma_me)))

    series = run.diagnostics["series"]
    t_c, n_c = np.array(series["t"]), np.array(series["photons"])
    n_me_on_grid = np.interp(t_c, t_me, photons_me)
    k = int(np.argmax(n_me_on_grid))
    dphot = abs(n_c[k] / n_me_on_grid[k] - 1)

    rng = np.random.default_rng(7)
    phi = rng.uniform(-np.pi, np.pi, 4)
    g = rng.uniform(0, 0.1, (4, 4))
    g = g + g.T
    np.fill_diagonal(g, 0)
    ch = ChannelElements.from_phases(phi, g)
    mc, _ = monte_carlo_average_fidelity(corrected_matrix(ch), n=20_000, seed=7)
    dmc = abs(mc - average_fidelity(ch))

    ok = dgamma < 1e-3 and dphot < 0.01 and dmc < 1e-3
    detail = f"max |dgamma| = {dgamma:.2e}; peak photons {n_c[k]:.4f} vs {n_me_on_grid[k]:.4f} ({dphot:.2e}); Monte Carlo dF = {dmc:.2e}"
    assert report(7, ok, detail)


@pytest.mark.slow
def test_criterion_8_numerical_health(report, row1_drive):
    dpa = calibrate_pump(16.0, 32.0)
    cfg = CascadedConfig(system=ROW1, drive=row1_drive, dpa=dpa, diagonal_blocks="all")
    ref = run_gate(cfg)
    s = ref.summary()

    coarse = [run_gate(cfg.with_(dt=h, diagonal_blocks="none")).channel.matrix() for h in (0.08, 0.04)]
    fine = ref.channel.matrix()
    ratio = np.max(np.abs(coarse[0] - coarse[1])) / np.max(np.abs(coarse[1] - fine))

    g_ref = ref.channel.gamma[0, 3]
    g_cav = run_gate(cfg.with_(n_cav=8, diagonal_blocks="none")).channel.gamma[0, 3]
    g_src = run_gate(cfg.with_(n_src=20, diagonal_blocks="none")).channel.gamma[0, 3]
    shifts = abs(g_cav / g_ref - 1), abs(g_src / g_ref - 1)

    ok = (
        s["max_trace_drift"] < 1e-6
        and s["min_eigenvalue"] > -1e-6
        and 12 <= ratio <= 20
        and max(shifts) < 0.01
    )
    detail = (
        f"trace drift {s['max_trace_drift']:.1e}, min eigenvalue {s['min_eigenvalue']:.1e}, "
        f"Richardson ratio {ratio:.2f}, gamma_00_11 shift n_cav x2 {shifts[0]:.1e}, n_src x2 {shifts[1]:.1e}"
    )
    assert report(8, ok, detail)


def test_criterion_9_exponential_law(report):
    worst = 0.0
    base = rate_from_alpha(2.0, SqueezeParams(gamma_bw=1e-9), ROW1)
    for r in np.linspace(0.0, 2.5, 51):
        sp = SqueezeParams(db=20 * r / math.log(10), gamma_bw=1e-9)
        worst = max(worst, abs(rate_from_alpha(2.0, sp, ROW1) * math.exp(2 * r) / base - 1))
    assert report(9, worst < 1e-12, f"max relative deviation from e^(-2r) scaling {worst:.1e} over r in [0, 2.5]")
