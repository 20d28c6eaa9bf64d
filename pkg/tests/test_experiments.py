import math
import time

import numpy as np
import pytest

from ripsqueeze.analytic import SqueezeParams, analytic_channel
from ripsqueeze.channel import gate_error
from ripsqueeze.experiments import (
    SWEEP_DRIVES,
    TABLE1,
    CalibrationError,
    RunRecord,
    SweepSpec,
    best,
    calibrate_drive,
    cascaded_pump,
    reproduce_table1,
    sweep,
)
from ripsqueeze.trajectory import DriveParams, SystemParams, parity_phase


@pytest.mark.parametrize("delta_r, quoted", [(320.0, 796.0), (160.0, 278.5), (640.0, 2310.0)])
def test_calibration_matches_quoted_drives(delta_r, quoted):
    p = SystemParams(delta_r=delta_r)
    start = time.perf_counter()
    eps0 = calibrate_drive(p)
    assert time.perf_counter() - start < 1.0
    assert abs(eps0 / quoted - 1) < 0.05
    assert abs(parity_phase(p, DriveParams(eps0=eps0)) - math.pi / 2) < 1e-4


def test_calibration_scales_inversely_with_chi():
    p1 = SystemParams.from_chi(8.0, 10.0, 640.0)
    p2 = SystemParams.from_chi(16.0, 10.0, 640.0, Delta=6400.0)
    e1, e2 = calibrate_drive(p1), calibrate_drive(p2)
    # the loop area goes as chi^2 eps0^2; non-adiabatic corrections stay small at 640 MHz
    assert abs(e2 / e1 - 0.5) < 0.01


def test_calibration_bracket_failure():
    with pytest.raises(CalibrationError) as info:
        calibrate_drive(SystemParams(), tau=0.05)
    assert len(info.value.curve) == 7


def test_fixture_drives_consistent():
    # the area is quadratic in eps0, so 5% in amplitude allows about 10% in area
    for dr, eps in SWEEP_DRIVES.items():
        area = parity_phase(SystemParams(delta_r=dr), DriveParams(eps0=eps))
        assert abs(math.sqrt(area / (math.pi / 2)) - 1) < 0.05
    assert TABLE1[2].chi == 4.5 and TABLE1[1].db == 19.0


def test_sweep_spec_validation():
    with pytest.raises(ValueError):
        SweepSpec(grid=(1.0, 1.0))
    with pytest.raises(ValueError):
        SweepSpec(grid=())
    with pytest.raises(ValueError):
        SweepSpec(axis="kappa")
    with pytest.raises(ValueError):
        SweepSpec(engine="cascaded", dpa=None)


def test_single_point_sweep_equals_direct_run():
    p = SystemParams()
    drive = DriveParams(eps0=calibrate_drive(p))
    (rec,) = sweep(SweepSpec(system=p, drive=drive, grid=(7.0,)))
    direct = analytic_channel(p, drive, SqueezeParams(db=7.0))
    assert rec.ok and rec.error == gate_error(direct)
    assert rec.config["squeeze"]["db"] == 7.0


def test_theta_sweep_minimum_at_zero():
    p = SystemParams()
    drive = DriveParams(eps0=calibrate_drive(p))
    step = math.pi / 36
    grid = tuple(step * k for k in range(-18, 19))
    recs = sweep(SweepSpec(system=p, drive=drive, squeeze=SqueezeParams(db=5.7), axis="theta", grid=grid))
    errors = np.array([r.error for r in recs])
    assert abs(best(recs).value) <= step / 2
    # convex around the optimum
    k = int(np.argmin(errors))
    assert np.all(np.diff(errors[k:]) > 0) and np.all(np.diff(errors[: k + 1]) < 0)


def test_delta_axis_recalibrates_drive():
    recs = sweep(SweepSpec(axis="delta_r", grid=(160.0, 640.0)))
    eps = [r.config["drive"]["eps0"] for r in recs]
    assert abs(eps[0] / 278.5 - 1) < 0.05 and abs(eps[1] / 2310.0 - 1) < 0.05


def test_failures_are_recorded_and_sweep_continues():
    recs = sweep(SweepSpec(axis="delta_r", grid=(1e-9, 320.0)))
    assert not recs[0].ok and "Error" in recs[0].failure
    assert recs[1].ok
    assert math.isnan(recs[0].row()["error"])


def test_sweep_is_deterministic_and_sorted():
    spec = SweepSpec(grid=(10.0, 5.0, 0.0))
    a, b = sweep(spec), sweep(spec)
    assert [r.value for r in a] == [0.0, 5.0, 10.0]
    strip = lambda rec: {k: v for k, v in rec.to_dict().items() if k != "wall_clock"}
    assert [strip(r) for r in a] == [strip(r) for r in b]


def test_record_snapshot_reproduces_run():
    p = SystemParams()
    (rec,) = sweep(SweepSpec(system=p, drive=DriveParams(eps0=790.0), grid=(12.0,)))
    cfg = rec.config
    again = analytic_channel(
        SystemParams(**cfg["system"]), DriveParams(**cfg["drive"]), SqueezeParams(**cfg["squeeze"]), dt=cfg["numerics"]["dt"]
    )
    assert gate_error(again) == rec.error


def test_best_requires_success():
    with pytest.raises(ValueError):
        best([RunRecord("analytic", "db", 0.0, {}, failure="x")])


def test_cascaded_pump_mapping():
    assert cascaded_pump(SqueezeParams(db=0.0)).pump == 0
    dpa = cascaded_pump(SqueezeParams(db=16.0, theta=0.3))
    assert dpa.theta == -0.3 and math.isclose(dpa.squeezing_db, 16.0)


def test_table1_analytic_within_tolerance():
    report = reproduce_table1(engines=("analytic",))
    print()
    print(report.format())
    assert report.ok
    assert len(report.cells) == 6
