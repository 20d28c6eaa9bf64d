"""Dense truncated-Fock-space linear algebra.

Operators and density matrices are plain complex ``numpy`` arrays in the
number basis.  Composite spaces use ``np.kron`` with the first factor varying
slowest, so ``tensor(a_cav, eye_src)`` acts on the cavity of a cavity x source
register.

Quadratures follow the x = (a + a^dag)/2 convention: vacuum variance 1/4.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm
from scipy.special import gammaln


class InvalidDimensionError(ValueError):
    pass


class TruncationError(RuntimeError):
    """Raised when a state leaks into the top levels of a truncated space."""

    def __init__(self, message, top_population=None, mode=None):
        super().__init__(message)
        self.top_population = top_population
        self.mode = mode


def ladder(dim):
    """Annihilation operator a with <n|a|n+1> = sqrt(n+1)."""
    if int(dim) != dim or dim < 2:
        raise InvalidDimensionError(f"Fock dimension must be an integer >= 2, got {dim!r}")
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), k=1).astype(complex)


def identity(dim):
    return np.eye(dim, dtype=complex)


def number(dim):
    return np.diag(np.arange(dim, dtype=float)).astype(complex)


def dag(op):
    return op.conj().T


def tensor(*ops):
    """Kronecker product, leftmost factor varying slowest."""
    if not ops:
        raise ValueError("tensor() needs at least one operand")
    out = np.asarray(ops[0])
    for op in ops[1:]:
        out = np.kron(out, np.asarray(op))
    return out


def quadrature(dim, angle):
    """x_angle = (a e^{-i angle} + a^dag e^{i angle}) / 2."""
    a = ladder(dim)
    return 0.5 * (a * np.exp(-1j * angle) + dag(a) * np.exp(1j * angle))


def vacuum(dim):
    rho = np.zeros((dim, dim), dtype=complex)
    rho[0, 0] = 1.0
    return rho


def top_population(rho, levels=2):
    """Population in the highest ``levels`` number states."""
    return float(np.real(np.trace(rho[-levels:, -levels:])))


def squeezed_vacuum(dim, r, theta, tol=1e-5):
    """Single-mode squeezed vacuum S(xi)|0><0|S(xi)^dag with xi = r e^{i theta}.

    S(xi) = exp[(xi^* a^2 - xi a^dag^2)/2], so the quadrature at angle theta/2
    has variance e^{-2r}/4.  Amplitudes are evaluated in closed form,

        c_{2n} = (-e^{i theta} tanh r)^n sqrt((2n)!) / (2^n n! sqrt(cosh r)),

    and the truncated state is renormalised.  ``tol`` bounds the population
    of the top two retained levels.
    """
    ladder(dim)  # dimension check
    if r < 0:
        raise ValueError(f"squeeze parameter must be >= 0, got {r}")
    psi = np.zeros(dim, dtype=complex)
    if r == 0:
        psi[0] = 1.0
    else:
        n = np.arange(0, dim, 2)
        m = n // 2
        log_mag = 0.5 * gammaln(n + 1) - m * np.log(2.0) - gammaln(m + 1) + m * np.log(np.tanh(r))
        psi[n] = np.exp(log_mag - 0.5 * np.log(np.cosh(r))) * (-np.exp(1j * theta)) ** m
        psi /= np.linalg.norm(psi)
    rho = np.outer(psi, psi.conj())
    top = top_population(rho)
    if top > tol:
        raise TruncationError(
            f"squeezed vacuum r={r} needs more than {dim} levels "
            f"(top-level population {top:.3e} > {tol:.1e})",
            top_population=top,
        )
    return rho


def expect(op, rho):
    return complex(np.trace(op @ rho))


def quadrature_variance(rho, angle):
    x = quadrature(rho.shape[0], angle)
    mean = np.real(expect(x, rho))
    return float(np.real(expect(x @ x, rho)) - mean**2)


@dataclass(frozen=True)
class StateReport:
    trace_deviation: float
    hermiticity_deviation: float
    min_eigenvalue: float
    purity: float


def diagnostics(rho):
    """Trace, Hermiticity, positivity and purity checks. Does not modify ``rho``."""
    rho = np.asarray(rho)
    herm = float(np.max(np.abs(rho - rho.conj().T))) if rho.size else 0.0
    sym = 0.5 * (rho + rho.conj().T)
    eigs = np.linalg.eigvalsh(sym)
    return StateReport(
        trace_deviation=float(abs(np.trace(rho) - 1.0)),
        hermiticity_deviation=herm,
        min_eigenvalue=float(eigs.min()),
        purity=float(np.real(np.trace(sym @ sym))),
    )


def displacement(dim, beta):
    """Truncated displacement operator exp(beta a^dag - beta^* a).

    Accurate on levels well below ``dim`` only; used for small amplitudes.
    """
    a = ladder(dim)
    return expm(beta * dag(a) - np.conj(beta) * a)
