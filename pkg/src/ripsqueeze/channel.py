"""Two-qubit dephasing channel E(|ij><kl|) = exp(i mu - gamma) |ij><kl|.

Basis order is (00, 01, 10, 11) with sigma_z sums (+2, 0, 0, -2).  The
channel is a Schur multiplier: the output density matrix is the input times
C = exp(i mu - gamma) elementwise.  Single-qubit Z phases are removed by
maximising the overlap over two local Z angles before any figure of merit is
reported, mirroring an echo sequence.
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

BASIS = ("00", "01", "10", "11")
SECTOR_OF = {"00": 2, "01": 0, "10": 0, "11": -2}
SIGMA_SUM = np.array([SECTOR_OF[b] for b in BASIS], dtype=float)
UZZ_DIAG = np.array([1, 1, 1, -1], dtype=complex)
# local Z phases: qubit 1 is the left digit
_Z1 = np.array([0, 0, 1, 1], dtype=float)
_Z2 = np.array([0, 1, 0, 1], dtype=float)


@dataclass(frozen=True)
class ChannelElements:
    mu: np.ndarray
    gamma: np.ndarray

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float)
        gamma = np.asarray(self.gamma, dtype=float)
        if mu.shape != (4, 4) or gamma.shape != (4, 4):
            raise ValueError("channel arrays must be 4x4")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "gamma", gamma)

    @classmethod
    def from_matrix(cls, c):
        """Build from the multiplier C_ab = exp(i mu_ab - gamma_ab)."""
        c = np.asarray(c, dtype=complex)
        c = 0.5 * (c + c.conj().T)
        mu = np.angle(c)
        gamma = -np.log(np.abs(c))
        np.fill_diagonal(mu, 0.0)
        np.fill_diagonal(gamma, 0.0)
        return cls(mu=mu, gamma=gamma)

    @classmethod
    def from_phases(cls, phi, gamma=None):
        """Deterministic per-configuration phases phi_a -> mu_ab = phi_a - phi_b."""
        phi = np.asarray(phi, dtype=float)
        mu = phi[:, None] - phi[None, :]
        if gamma is None:
            gamma = np.zeros((4, 4))
        return cls(mu=mu, gamma=gamma)

    @classmethod
    def ideal(cls):
        return cls.from_phases(np.angle(UZZ_DIAG))

    def matrix(self):
        return np.exp(1j * self.mu - self.gamma)

    def check(self, atol=1e-12):
        """Raise if the structural invariants of a physical dephasing channel fail."""
        if np.any(np.abs(np.diag(self.gamma)) > atol) or np.any(np.abs(np.diag(self.mu)) > atol):
            raise ValueError("diagonal of mu and gamma must vanish")
        if np.max(np.abs(self.gamma - self.gamma.T)) > atol:
            raise ValueError("gamma must be symmetric")
        if np.max(np.abs(_wrap(self.mu + self.mu.T))) > atol:
            raise ValueError("mu must be antisymmetric")
        if np.any(self.gamma < -atol):
            raise ValueError("gamma must be non-negative")

    def zz_angle(self):
        """Parity phase mu_{00,01} + mu_{11,10}, equal to pi for the ideal gate (mod 2pi)."""
        return float(self.mu[0, 1] + self.mu[3, 2])

    def to_dict(self):
        return {"basis": list(BASIS), "mu": self.mu.tolist(), "gamma": self.gamma.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(mu=np.array(d["mu"]), gamma=np.array(d["gamma"]))


def _wrap(x):
    return (np.asarray(x) + np.pi) % (2 * np.pi) - np.pi


def _local_phases(z):
    return z[0] * _Z1 + z[1] * _Z2


def _overlap(c, z, target_diag):
    """(1/16) sum_ab u_a^* u_b C_ab e^{i(c_a - c_b)} for local Z angles z."""
    w = target_diag * np.exp(1j * _local_phases(z))
    return float(np.real(w.conj() @ c @ w)) / 16.0


def echo_angles(ch, target_diag=UZZ_DIAG):
    """Local Z angles (z1, z2) that best align the channel with the target."""
    c = ch.matrix()
    # analytic start: cancel the Stark phases of 01 and 10 relative to 00
    z0 = np.array([ch.mu[0, 2], ch.mu[0, 1]])
    best = None
    for start in (z0, z0 + [np.pi, 0.0], z0 + [0.0, np.pi], z0 + np.pi):
        res = minimize(lambda z: -_overlap(c, z, target_diag), start, method="BFGS", options={"gtol": 1e-12})
        if best is None or res.fun < best.fun:
            best = res
    return best.x


def corrected_matrix(ch, target_diag=UZZ_DIAG):
    """Channel multiplier after the optimal local Z correction."""
    z = echo_angles(ch, target_diag)
    cz = _local_phases(z)
    return ch.matrix() * np.exp(-1j * (cz[:, None] - cz[None, :]))


def gate_error(ch):
    """1 - <psi_T| E(|psi_0><psi_0|) |psi_T> for psi_0 = (|00>+|01>+|10>+|11>)/2."""
    psi0 = np.full(4, 0.5, dtype=complex)
    target = UZZ_DIAG * psi0
    rho_out = np.outer(psi0, psi0.conj()) * corrected_matrix(ch)
    err = 1.0 - float(np.real(target.conj() @ rho_out @ target))
    return min(max(err, 0.0), 1.0)


def process_fidelity(ch, target_diag=UZZ_DIAG):
    """Entanglement fidelity of the echo-corrected channel against a diagonal unitary."""
    d = 4
    c = corrected_matrix(ch, target_diag)
    # Choi state J = (1/d) sum_ab |a><b| (x) C_ab |a><b|
    choi = np.zeros((d * d, d * d), dtype=complex)
    for a in range(d):
        for b in range(d):
            choi[a * d + a, b * d + b] = c[a, b] / d
    phi_u = np.zeros(d * d, dtype=complex)
    for a in range(d):
        phi_u[a * d + a] = target_diag[a] / np.sqrt(d)
    return float(np.real(phi_u.conj() @ choi @ phi_u))


def average_fidelity(ch, target_diag=UZZ_DIAG):
    d = 4
    f_pro = process_fidelity(ch, target_diag)
    return min(max((d * f_pro + 1) / (d + 1), 0.0), 1.0)
