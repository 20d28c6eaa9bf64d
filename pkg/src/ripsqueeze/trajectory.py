"""Gaussian drive, coherent cavity trajectories and the accumulated gate phases.

In the frame rotating at the drive frequency each joint qubit configuration
with sigma_z sum ``s`` sees the cavity detuned by delta_r + s*chi, and the
coherent amplitude obeys

    d alpha_s/dt = -i (delta_r + s chi) alpha_s - i eps(t)  [- kappa/2 alpha_s].

The decay term is optional and off by default.  Along with alpha_s we
integrate the dynamical phase of the coherent state, d phi_s/dt =
-eps(t) Re alpha_s, and, for s = 0, the two-qubit parity area
int 4 chi^2 |alpha|^2 / delta_r dt.  The gate condition is area = pi/2.
"""

import csv
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter

from .units import angular

SECTORS = (2, 0, -2)


class StepSizeError(ValueError):
    pass


class DivergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class SystemParams:
    """Dispersive two-qubit + cavity parameters, all nu = omega/2pi in MHz."""

    nu_r: float = 7000.0
    nu_a: float = 10200.0
    g: float = 160.0
    kappa: float = 10.0
    delta_r: float = 320.0

    def __post_init__(self):
        if not self.kappa > 0:
            raise ValueError(f"kappa must be > 0, got {self.kappa}")
        if self.delta_r == 0:
            raise ValueError("delta_r must be nonzero")
        if self.g <= 0:
            raise ValueError(f"g must be > 0, got {self.g}")
        if self.Delta < 10 * self.g:
            warnings.warn(
                f"qubit-cavity detuning {self.Delta} MHz is below 10 g = {10 * self.g} MHz; "
                "the dispersive approximation is doubtful",
                stacklevel=2,
            )

    @property
    def Delta(self):
        return self.nu_a - self.nu_r

    @property
    def chi(self):
        return self.g**2 / self.Delta

    @property
    def n_crit(self):
        return self.Delta**2 / (4 * self.g**2)

    @classmethod
    def from_chi(cls, chi, kappa, delta_r, Delta=3200.0, nu_r=7000.0):
        """Pick g so that g^2/Delta equals ``chi`` at the given qubit-cavity detuning."""
        return cls(nu_r=nu_r, nu_a=nu_r + Delta, g=math.sqrt(chi * Delta), kappa=kappa, delta_r=delta_r)

    def with_(self, **changes):
        from dataclasses import replace

        return replace(self, **changes)


@dataclass(frozen=True)
class DriveParams:
    """Gaussian pulse eps0 exp(-t^2/tau^2) on the window |t| <= t_g/2, t_g = 5 tau."""

    eps0: float = 796.0
    tau: float = 40.0

    def __post_init__(self):
        if self.eps0 < 0:
            raise ValueError(f"eps0 must be >= 0, got {self.eps0}")
        if not self.tau > 0:
            raise ValueError(f"tau must be > 0, got {self.tau}")

    @property
    def t_g(self):
        return 5.0 * self.tau


def envelope(t, drive):
    """Drive amplitude in MHz; zero outside the gate window."""
    # the window edge carries a relative slack of 1e-12 so that grid points
    # built by repeated addition still land inside
    half = drive.t_g / 2 * (1 + 1e-12)
    if isinstance(t, float):
        return drive.eps0 * math.exp(-((t / drive.tau) ** 2)) if abs(t) <= half else 0.0
    t = np.asarray(t, dtype=float)
    out = np.where(np.abs(t) <= half, drive.eps0 * np.exp(-((t / drive.tau) ** 2)), 0.0)
    return out if out.ndim else float(out)


def sector_detuning(params, s):
    """Cavity detuning (MHz) seen in the sigma_z-sum sector ``s``."""
    if s not in SECTORS:
        raise ValueError(f"sector must be one of {SECTORS}, got {s!r}")
    return params.delta_r + s * params.chi


@dataclass(frozen=True)
class FieldTrajectory:
    """Coherent amplitude per sector on a uniform grid from -t_g/2 to t_g/2.

    ``alpha[s]`` is dimensionless, ``phases[s]`` is the accumulated dynamical
    phase in radians and ``area`` the running parity area (sector 0 only).
    """

    grid: np.ndarray
    alpha: dict
    phases: dict
    area: np.ndarray = None
    include_kappa: bool = False
    meta: dict = field(default_factory=dict)

    @property
    def sectors(self):
        return tuple(self.alpha)

    def closure_ratio(self, s=0):
        a2 = np.abs(self.alpha[s]) ** 2
        return float(a2[-1] / a2.max()) if a2.max() > 0 else 0.0

    def max_photons(self, s=0):
        return float(np.max(np.abs(self.alpha[s]) ** 2))


def _check_step(params, s, dt):
    fastest = abs(angular(sector_detuning(params, s)))
    if dt > 0.2 / fastest:
        raise StepSizeError(f"dt={dt} ns does not resolve detuning {sector_detuning(params, s)} MHz (need dt <= {0.2 / fastest:.4g} ns)")


def _grid(drive, dt):
    n = int(round(drive.t_g / dt))
    if not math.isclose(n * dt, drive.t_g, rel_tol=1e-9):
        raise StepSizeError(f"dt={dt} does not divide the gate time {drive.t_g}")
    return np.linspace(-drive.t_g / 2, drive.t_g / 2, n + 1)


def _integrate(params, drive, s, dt, include_kappa):
    """Classical RK4 for (alpha, phase, area) in angular units.

    The amplitude equation is linear, d alpha/dt = lam alpha + f(t), so one RK4
    step is alpha_{k+1} = R(lam dt) alpha_k + g_k with g_k built from f at
    t_k, t_k + dt/2, t_k + dt.  The recurrence is run with ``lfilter`` and the
    stage values are then reused for the phase and area quadratures, which
    gives exactly the RK4 result of the augmented system.
    """
    _check_step(params, s, dt)
    t = _grid(drive, dt)
    det = angular(sector_detuning(params, s))
    damp = 0.5 * angular(params.kappa) if include_kappa else 0.0
    lam = -1j * det - damp
    chi = angular(params.chi)
    area_rate = 4 * chi**2 / angular(params.delta_r)

    eps0 = angular(envelope(t[:-1], drive))
    eps_h = angular(envelope(t[:-1] + dt / 2, drive))
    eps1 = angular(envelope(t[1:], drive))
    f0, fh, f1 = -1j * eps0, -1j * eps_h, -1j * eps1

    z = lam * dt
    growth = 1 + z + z**2 / 2 + z**3 / 6 + z**4 / 24
    # forcing part of one step from alpha_k = 0
    q1 = f0
    q2 = lam * (dt / 2) * q1 + fh
    q3 = lam * (dt / 2) * q2 + fh
    q4 = lam * dt * q3 + f1
    g = dt / 6 * (q1 + 2 * q2 + 2 * q3 + q4)
    a = np.empty(len(t), dtype=complex)
    a[0] = 0.0
    a[1:] = lfilter([1.0], [1.0, -growth], g)
    if not np.all(np.isfinite(a)):
        raise DivergenceError(f"non-finite amplitude in sector {s}")

    ak = a[:-1]
    k1 = lam * ak + f0
    s2 = ak + dt / 2 * k1
    k2 = lam * s2 + fh
    s3 = ak + dt / 2 * k2
    k3 = lam * s3 + fh
    s4 = ak + dt * k3

    dphi = dt / 6 * -(eps0 * ak.real + 2 * eps_h * s2.real + 2 * eps_h * s3.real + eps1 * s4.real)
    darea = dt / 6 * area_rate * (np.abs(ak) ** 2 + 2 * np.abs(s2) ** 2 + 2 * np.abs(s3) ** 2 + np.abs(s4) ** 2)
    phase = np.concatenate([[0.0], np.cumsum(dphi)])
    area = np.concatenate([[0.0], np.cumsum(darea)])
    return t, a, phase, area


def propagate_alpha(params, drive, s=0, dt=0.005, include_kappa=False):
    """Single-sector trajectory."""
    t, a, ph, area = _integrate(params, drive, s, dt, include_kappa)
    return FieldTrajectory(
        grid=t,
        alpha={s: a},
        phases={s: ph},
        area=area if s == 0 else None,
        include_kappa=include_kappa,
        meta={"dt": dt},
    )


def propagate_sectors(params, drive, dt=0.005, include_kappa=False):
    """Trajectories for all three sectors on a shared grid."""
    alpha, phases, area = {}, {}, None
    for s in SECTORS:
        t, a, ph, ar = _integrate(params, drive, s, dt, include_kappa)
        alpha[s], phases[s] = a, ph
        if s == 0:
            area = ar
    return FieldTrajectory(grid=t, alpha=alpha, phases=phases, area=area, include_kappa=include_kappa, meta={"dt": dt})


def arg_alpha(traj, s=0):
    """Orientation of the field in phase space, folded into (-pi/2, pi/2].

    Squeezing is invariant under a rotation by pi, so only the line through
    alpha matters; a real field of either sign gives 0.  Samples with zero
    amplitude are returned as NaN.
    """
    a = np.asarray(traj.alpha[s])
    ang = 0.5 * np.angle(a**2)
    ang = np.where(ang <= -np.pi / 2, ang + np.pi, ang)
    return np.where(np.abs(a) > 0, ang, np.nan)


def parity_phase(params, drive, dt=0.005, include_kappa=False):
    """Accumulated parity area int 4 chi^2 |alpha_0|^2 / delta_r dt in radians."""
    if drive.eps0 == 0:
        return 0.0
    _, _, _, area = _integrate(params, drive, 0, dt, include_kappa)
    return float(area[-1])


def adiabatic_parity_phase(params, drive):
    """Closed form 4 chi^2 eps0^2 tau sqrt(pi/2) / delta_r^3 for alpha ~ -eps/delta_r."""
    chi, eps0, dr = angular(params.chi), angular(drive.eps0), angular(params.delta_r)
    return 4 * chi**2 * eps0**2 * drive.tau * math.sqrt(math.pi / 2) / dr**3


def write_csv(traj, path):
    """Trajectory export: t_ns, re_alpha, im_alpha, abs2_alpha, arg_alpha, sector."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t_ns", "re_alpha", "im_alpha", "abs2_alpha", "arg_alpha", "sector"])
        for s in traj.sectors:
            a = traj.alpha[s]
            args = arg_alpha(traj, s)
            for t, z, ang in zip(traj.grid, a, args):
                w.writerow([repr(float(t)), repr(float(z.real)), repr(float(z.imag)), repr(float(abs(z) ** 2)), repr(float(ang)), s])
