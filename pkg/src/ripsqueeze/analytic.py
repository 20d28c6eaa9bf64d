"""Adiabatic dephasing model for a displaced squeezed drive.

The instantaneous measurement-induced dephasing rate between configurations
whose sigma_z sums differ by 2 is

    gamma_phi(t) = (4 chi^2 kappa / delta_r^2)
                   * [N(omega_r) + |alpha|^2/2 (e^{-2r} cos^2 Phi + e^{2r} sin^2 Phi)],

with Phi = theta - arg alpha(t) and N(omega_r) the squeezed-bath photon number
at the cavity frequency.  Coherences with a sigma_z-sum difference dS dephase
with the same integral scaled by dS^2/4.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson

from .channel import SIGMA_SUM, ChannelElements, average_fidelity, gate_error
from .trajectory import propagate_sectors
from .units import angular


@dataclass(frozen=True)
class SqueezeParams:
    """Squeezing power (dB), angle (rad) and bandwidth Gamma/2pi (MHz).

    ``efficiency`` mixes the squeezed input with vacuum, as a lossy line would.
    """

    db: float = 0.0
    theta: float = 0.0
    gamma_bw: float = 32.0
    efficiency: float = 1.0

    def __post_init__(self):
        if self.db < 0:
            raise ValueError(f"squeezing power must be >= 0 dB, got {self.db}")
        if not self.gamma_bw > 0:
            raise ValueError(f"gamma_bw must be > 0, got {self.gamma_bw}")
        if not 0 <= self.efficiency <= 1:
            raise ValueError(f"efficiency must lie in [0, 1], got {self.efficiency}")

    @property
    def r_d(self):
        """Squeeze parameter at the drive frequency; e^{2 r_d} = 10^{db/10}."""
        return self.db / 20.0 * math.log(10.0)

    def n_r(self, offset):
        """Bath photon number at ``offset`` MHz from the drive."""
        return self.efficiency * thermal_occupation(self.r_d, self.gamma_bw, offset)

    def quadrature_factors(self):
        """Noise of the squeezed and anti-squeezed quadratures relative to vacuum."""
        eta, r = self.efficiency, self.r_d
        return eta * math.exp(-2 * r) + 1 - eta, eta * math.exp(2 * r) + 1 - eta


def thermal_occupation(r_d, gamma_bw, offset):
    """sinh^2(r_d) filtered by a unit-peak Lorentzian of half width ``gamma_bw``."""
    if not gamma_bw > 0:
        raise ValueError("gamma_bw must be > 0")
    return math.sinh(r_d) ** 2 * gamma_bw**2 / (offset**2 + gamma_bw**2)


def _rate_prefactor(params):
    chi, kappa, dr = angular(params.chi), angular(params.kappa), angular(params.delta_r)
    return 4 * chi**2 * kappa / dr**2


def rate_from_alpha(alpha, sp, params):
    """Dephasing rate (rad/ns) for given complex field amplitude(s)."""
    alpha = np.asarray(alpha, dtype=complex)
    sq, anti = sp.quadrature_factors()
    phi = sp.theta - np.angle(alpha)
    field = 0.5 * np.abs(alpha) ** 2 * (sq * np.cos(phi) ** 2 + anti * np.sin(phi) ** 2)
    return _rate_prefactor(params) * (sp.n_r(params.delta_r) + field)


def dephasing_rate(t, traj, sp, params):
    """Rate at time(s) ``t`` (ns) along the sector-0 trajectory, in rad/ns."""
    a = traj.alpha[0]
    re = np.interp(t, traj.grid, a.real)
    im = np.interp(t, traj.grid, a.imag)
    return rate_from_alpha(re + 1j * im, sp, params)


def integrated_dephasing(traj, sp, params):
    """int gamma_phi dt over the gate window (dimensionless)."""
    rates = rate_from_alpha(traj.alpha[0], sp, params)
    return float(simpson(rates, x=traj.grid))


def integrated_gamma(traj, sp, params):
    """4x4 decoherence exponents gamma_{ab} = (S_a - S_b)^2/4 * int gamma_phi dt."""
    base = integrated_dephasing(traj, sp, params)
    ds = SIGMA_SUM[:, None] - SIGMA_SUM[None, :]
    return ds**2 / 4.0 * base


def configuration_phases(traj):
    """Final dynamical phase of each basis configuration (00, 01, 10, 11)."""
    end = {s: traj.phases[s][-1] for s in traj.sectors}
    return np.array([end[int(s)] for s in SIGMA_SUM])


def channel_phases(traj, params=None):
    """mu_{ab} = phi_a - phi_b from the three sector trajectories."""
    if set(traj.sectors) != {2, 0, -2}:
        raise ValueError("channel_phases needs trajectories for all three sectors")
    phi = configuration_phases(traj)
    return phi[:, None] - phi[None, :]


def analytic_channel(params, drive, sp, dt=0.005, include_kappa=False, traj=None):
    if traj is None:
        traj = propagate_sectors(params, drive, dt=dt, include_kappa=include_kappa)
    return ChannelElements(mu=channel_phases(traj, params), gamma=integrated_gamma(traj, sp, params))


def optimal_squeezing(params, drive, theta, db_grid, gamma_bw=32.0, dt=0.005, traj=None):
    """Grid scan of the gate error over squeezing power at fixed angle.

    Returns (db*, E*, errors) with ``errors`` aligned to ``db_grid``.
    """
    grid = np.asarray(db_grid, dtype=float)
    if grid.size == 0:
        raise ValueError("db_grid is empty")
    if grid.size > 1 and not (np.all(np.diff(grid) > 0) or np.all(np.diff(grid) < 0)):
        raise ValueError("db_grid must be strictly monotone")
    if traj is None:
        traj = propagate_sectors(params, drive, dt=dt)
    errors = np.array([
        gate_error(analytic_channel(params, drive, SqueezeParams(db=db, theta=theta, gamma_bw=gamma_bw), traj=traj))
        for db in grid
    ])
    k = int(np.argmin(errors))
    return float(grid[k]), float(errors[k]), errors


def analytic_fidelities(params, drive, sp, dt=0.005, traj=None):
    ch = analytic_channel(params, drive, sp, dt=dt, traj=traj)
    return gate_error(ch), average_fidelity(ch), ch
