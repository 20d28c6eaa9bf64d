import math

import numpy as np
import pytest

from ripsqueeze import fockspace as fs
from ripsqueeze.cascaded import (
    OFF_DIAGONAL,
    AboveThresholdError,
    CascadedConfig,
    CascadedModel,
    DpaParams,
    SectorBlock,
    _evolve,
    calibrate_pump,
    cascaded_rhs,
    pump_for_db,
    run_gate,
    source_output_variance,
    source_steady_state,
    squeezed_quadrature_angle,
)
from ripsqueeze.channel import gate_error
from ripsqueeze.trajectory import DriveParams, SystemParams

ROW1 = SystemParams()
SHORT = DriveParams(eps0=400.0, tau=4.0)  # 20 ns window keeps these runs at about a second


def short_config(**kw):
    base = dict(system=ROW1, drive=SHORT, dpa=calibrate_pump(8.0, 32.0), diagonal_blocks="all", diag_every=50)
    base.update(kw)
    return CascadedConfig(**base)


def test_pump_map():
    assert pump_for_db(0.0, 32.0) == 0.0
    assert math.isclose(pump_for_db(16.0, 32.0) / 16.0, 0.7264, abs_tol=5e-4)
    assert 0 < 16.0 - pump_for_db(60.0, 32.0) < 0.05
    with pytest.raises(AboveThresholdError):
        calibrate_pump(800.0, 32.0)
    with pytest.raises(AboveThresholdError):
        DpaParams(gamma_b=32.0, pump=16.0)
    with pytest.raises(ValueError):
        pump_for_db(-3.0, 32.0)
    assert math.isclose(calibrate_pump(16.0).squeezing_db, 16.0)


def test_output_variance_oracle():
    vac = DpaParams(32.0, 0.0)
    for ang in (0.0, 0.4, math.pi / 2):
        assert math.isclose(source_output_variance(vac, ang, n_src=10), 1.0, abs_tol=1e-12)
    dpa = DpaParams(32.0, 0.5 * 16.0)
    sq = source_output_variance(dpa, squeezed_quadrature_angle(0.0))
    anti = source_output_variance(dpa, squeezed_quadrature_angle(0.0) + math.pi / 2)
    assert math.isclose(sq, (0.5 / 1.5) ** 2, rel_tol=1e-6)
    assert math.isclose(sq * anti, 1.0, rel_tol=1e-6)


def test_no_back_action_on_source():
    # the source marginal inside the cascade equals the bare amplifier state
    cfg = short_config(source_basis="fock", n_src=30, n_cav=3, dpa=calibrate_pump(6.0, 32.0))
    model = CascadedModel(cfg)
    rho = model.initial_field()
    bare = source_steady_state(cfg.dpa, n_src=30)
    b = fs.ladder(30)
    n_in = np.real(np.trace(fs.dag(model.b) @ model.b @ rho))
    bb_in = np.trace(model.b @ model.b @ rho)
    assert math.isclose(n_in, np.real(np.trace(fs.dag(b) @ b @ bare)), rel_tol=1e-8)
    assert abs(bb_in - np.trace(b @ b @ bare)) < 1e-8


def test_rhs_vacuum_stationary_and_trace_preserving():
    cfg = short_config(dpa=DpaParams(32.0, 0.0), n_cav=6, n_src=3)
    model = CascadedModel(cfg)
    vac = fs.vacuum(model.num.shape[0])
    blk = SectorBlock("00", "00", vac, time=-50.0)
    assert np.max(np.abs(cascaded_rhs(blk, -50.0, model))) == 0
    blk = SectorBlock("00", "00", vac, time=0.0)
    d = cascaded_rhs(blk, 0.0, model)
    assert abs(np.trace(d)) < 1e-12
    with pytest.raises(ValueError):
        cascaded_rhs(SectorBlock("00", "11", np.eye(3), 0.0), 0.0, model)


def test_diagonal_blocks_physical():
    run = run_gate(short_config())
    s = run.summary()
    assert s["max_trace_drift"] < 1e-10
    assert s["min_eigenvalue"] > -1e-8
    assert s["max_top_population_cavity"] < 1e-4
    for v in run.coherences.values():
        assert abs(complex(*v)) <= 1 + 1e-12


def test_displaced_frame_matches_lab_frame():
    drive = DriveParams(eps0=150.0, tau=4.0)
    disp = run_gate(short_config(drive=drive, diagonal_blocks="none"))
    lab = run_gate(short_config(drive=drive, diagonal_blocks="none", frame="lab", n_cav=14))
    assert np.allclose(disp.channel.matrix(), lab.channel.matrix(), atol=1e-7)


def test_hermiticity_pairing():
    cfg = short_config()
    model = CascadedModel(cfg)
    pairs = [(2, 0), (0, 2), (0, -2), (-2, 0)]
    Y, betas, coh, _, _ = _evolve(model, cfg, pairs, cfg.dt, record=False)
    assert np.allclose(Y[1], fs.dag(Y[0]), atol=1e-12)
    assert np.allclose(Y[3], fs.dag(Y[2]), atol=1e-12)
    assert abs(coh[(0, 2)] - np.conj(coh[(2, 0)])) < 1e-12


def test_no_dispersive_shift_no_gate():
    flat = SystemParams(g=1e-6, nu_a=17000.0)
    run = run_gate(short_config(system=flat, diagonal_blocks="none"))
    assert np.max(np.abs(run.channel.gamma)) < 1e-9
    assert np.max(np.abs(run.channel.mu)) < 1e-9


def test_richardson_ratio():
    cfg = short_config(drive=DriveParams(eps0=800.0, tau=4.0), dpa=calibrate_pump(10.0, 32.0), diagonal_blocks="none")
    c = [run_gate(cfg.with_(dt=h)).channel.matrix() for h in (0.08, 0.04, 0.02)]
    ratio = np.max(np.abs(c[0] - c[1])) / np.max(np.abs(c[1] - c[2]))
    assert 12 <= ratio <= 20


def test_step_audit_reports_halved_step_deviation():
    run = run_gate(short_config(step_audit=True, diagonal_blocks="none"))
    assert run.diagnostics["step_audit_max_dev"] < 1e-8


def test_truncation_error_names_mode():
    cfg = short_config(frame="lab", n_cav=3, diagonal_blocks="center", dpa=DpaParams(32.0, 0.0), n_src=2)
    with pytest.raises(fs.TruncationError) as info:
        run_gate(cfg)
    assert info.value.mode == "cavity"


def test_config_validation():
    with pytest.raises(ValueError):
        short_config(frame="rotating")
    with pytest.raises(fs.InvalidDimensionError):
        short_config(n_cav=1)
    assert len(OFF_DIAGONAL) == 3


@pytest.mark.slow
def test_anti_squeezing_hurts():
    drive = DriveParams(eps0=798.75)
    base = gate_error(run_gate(CascadedConfig(system=ROW1, drive=drive, dpa=DpaParams(32.0, 0.0), diagonal_blocks="none")).channel)
    anti = calibrate_pump(5.7, 32.0, theta=-math.pi / 2)
    worse = gate_error(run_gate(CascadedConfig(system=ROW1, drive=drive, dpa=anti, diagonal_blocks="none")).channel)
    assert worse > base
