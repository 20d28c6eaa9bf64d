"""Cascaded master equation: degenerate parametric amplifier -> driven cavity.

The source mode b (linewidth Gamma_b, pump lambda) emits squeezed vacuum that
is fed unidirectionally into the dispersively coupled cavity a.  Everything is
written in the frame rotating at the drive frequency.  Because
[H, sigma_z1 + sigma_z2] = 0, the joint density matrix splits into blocks
X_{s s'} = <s|rho|s'> on cavity (x) source, each obeying

    dX/dt = -i (H_s X - X H_s') + J X J^dag - {J^dag J, X}/2

with H_s = delta_s a^dag a + eps(t)(a + a^dag) + H_dpa + H_cascade,
J = sqrt(Gamma_b) b + sqrt(kappa) a, and

    H_dpa     = i lambda/2 (e^{-2i theta} b^dag^2 - e^{2i theta} b^2)
    H_cascade = i/2 sqrt(kappa Gamma_b) (b^dag a - a^dag b).

The coherence between qubit configurations is tr X_{s s'}.

Production runs use a displaced frame, Y = D(beta_s)^dag X D(beta_s'), with
beta_s following the damped coherent amplitude of each sector.  The cavity then
only carries the small fluctuation field, so a handful of Fock levels suffices
where the lab frame would need ~20.
"""

import math
import time as _time
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.sparse as sps
from scipy.linalg import expm
from scipy.sparse.linalg import spsolve

from . import fockspace as fs
from .channel import BASIS, SECTOR_OF, ChannelElements
from .trajectory import SECTORS, DriveParams, SystemParams, envelope, sector_detuning
from .units import angular


class AboveThresholdError(ValueError):
    pass


class IntegratorStepError(RuntimeError):
    pass


def pump_for_db(db, gamma_b):
    """Pump lambda/2pi (MHz) whose output squeezes the carrier by ``db``.

    Below threshold the zero-frequency squeezed-quadrature noise is
    ((Gamma_b/2 - lambda)/(Gamma_b/2 + lambda))^2 = e^{-2r}.
    """
    if db < 0:
        raise ValueError(f"squeezing power must be >= 0 dB, got {db}")
    if math.isinf(db):
        raise AboveThresholdError("infinite squeezing needs lambda = Gamma_b/2 (threshold)")
    em = math.exp(-db / 20.0 * math.log(10.0))
    return 0.5 * gamma_b * (1 - em) / (1 + em)


@dataclass(frozen=True)
class DpaParams:
    """Source cavity linewidth Gamma_b/2pi, pump lambda/2pi (MHz) and squeeze angle (rad)."""

    gamma_b: float = 32.0
    pump: float = 0.0
    theta: float = 0.0

    def __post_init__(self):
        if not self.gamma_b > 0:
            raise ValueError(f"gamma_b must be > 0, got {self.gamma_b}")
        if not 0 <= self.pump < self.gamma_b / 2:
            raise AboveThresholdError(
                f"pump {self.pump} MHz must satisfy 0 <= pump < gamma_b/2 = {self.gamma_b / 2} MHz"
            )

    @property
    def squeezing_db(self):
        x = self.pump / (self.gamma_b / 2)
        return 20.0 * math.log10((1 + x) / (1 - x))

    @property
    def squeezing_halfwidth(self):
        """Half width (MHz) of the squeezed-quadrature output spectrum."""
        return self.gamma_b / 2 - self.pump


def squeezed_quadrature_angle(theta):
    """Angle of the output quadrature squeezed by a pump of phase ``theta``."""
    return math.pi / 2 - theta


def _source_ops(n_src, r_basis=0.0, theta=0.0):
    """Source annihilator in a Fock basis of c = S^dag b S.

    With b = cosh(r) c + e^{-2i theta} sinh(r) c^dag the below-threshold
    amplifier state is close to thermal in c, so far fewer levels are needed
    than in the bare number basis.  r = 0 gives the ordinary ladder operator.
    """
    c = fs.ladder(n_src)
    b = math.cosh(r_basis) * c + np.exp(-2j * theta) * math.sinh(r_basis) * fs.dag(c)
    return b, fs.dag(b)


def intracavity_squeeze(dpa):
    """Squeeze parameter of the amplifier's intracavity steady state.

    The intracavity quadrature variances are 1/(4(1 -+ x)) with x = 2 lambda/Gamma_b,
    so their ratio is e^{4r}.
    """
    x = dpa.pump / (dpa.gamma_b / 2)
    return 0.25 * math.log((1 + x) / (1 - x))


def _dpa_hamiltonian(dpa, b):
    lam = angular(dpa.pump)
    bd = fs.dag(b)
    ph = np.exp(-2j * dpa.theta)
    return 0.5j * lam * (ph * bd @ bd - np.conj(ph) * b @ b)


def _lindbladian_sparse(K, J):
    """Column-stacked generator of X -> K X + X K^dag + J X J^dag."""
    n = K.shape[0]
    eye = sps.identity(n, dtype=complex, format="csr")
    Ks, Js = sps.csr_matrix(K), sps.csr_matrix(J)
    return (sps.kron(eye, Ks) + sps.kron(Ks.conj(), eye) + sps.kron(Js.conj(), Js)).tocsc()


def _steady_state(K, J):
    """Unique steady state of the Lindblad generator with effective K and jump J."""
    n = K.shape[0]
    L = _lindbladian_sparse(K, J).tolil()
    # replace one equation by the trace condition
    L[0, :] = 0
    L[0, [i * n + i for i in range(n)]] = 1.0
    rhs = np.zeros(n * n, dtype=complex)
    rhs[0] = 1.0
    x = spsolve(L.tocsc(), rhs)
    rho = x.reshape((n, n), order="F")
    return 0.5 * (rho + fs.dag(rho))


def _apply(K, J, X):
    return K @ X + X @ fs.dag(K) + J @ X @ fs.dag(J)


def source_steady_state(dpa, n_src=40):
    b, bd = _source_ops(n_src)
    gb = angular(dpa.gamma_b)
    J = math.sqrt(gb) * b
    K = -1j * _dpa_hamiltonian(dpa, b) - 0.5 * fs.dag(J) @ J
    return _steady_state(K, J)


def source_output_variance(dpa, quadrature_angle, n_src=40):
    """Zero-frequency output quadrature noise of the bare source, vacuum = 1.

    Uses the steady state and the quantum regression theorem,

        S(0) = 1 + 4 Gamma_b int dtau <:X(tau) X(0):>,

    with the time integral done by solving against the Liouvillian.
    """
    b, bd = _source_ops(n_src)
    gb = angular(dpa.gamma_b)
    J = math.sqrt(gb) * b
    K = -1j * _dpa_hamiltonian(dpa, b) - 0.5 * bd @ b * gb
    rho = _steady_state(K, J)
    if fs.top_population(rho) > 1e-8:
        raise fs.TruncationError(
            f"source needs more than {n_src} levels for pump {dpa.pump} MHz",
            top_population=fs.top_population(rho),
            mode="source",
        )
    n = n_src
    L = _lindbladian_sparse(K, J)

    def propagated_integral(v):
        # int_0^inf e^{L tau} v dtau = -L^{-1} v on the traceless subspace
        A = L.tolil()
        A[0, :] = 0
        A[0, [i * n + i for i in range(n)]] = 1.0
        rhs = v.reshape(-1, order="F").copy()
        rhs[0] = 0.0
        x = spsolve(A.tocsc(), rhs)
        return -x.reshape((n, n), order="F")

    mb = np.trace(b @ rho)
    # fluctuation operators
    db = b - mb * np.eye(n)
    ddb = fs.dag(db)
    w_b = propagated_integral(db @ rho)  # int e^{L tau}(b rho)
    w_bd = propagated_integral(rho @ ddb)  # int e^{L tau}(rho b^dag)
    bb = np.trace(db @ w_b)  # int <b(tau) b(0)>
    bdbd = np.trace(ddb @ w_bd)  # int <b^dag(0) b^dag(tau)>
    bdb_a = np.trace(db @ w_bd)  # int <b^dag(0) b(tau)>
    bdb_b = np.trace(ddb @ w_b)  # int <b^dag(tau) b(0)>
    phi = quadrature_angle
    half = 0.25 * (np.exp(-2j * phi) * bb + np.exp(2j * phi) * bdbd + bdb_a + bdb_b)
    # tau < 0 half is the complex conjugate
    return float(1.0 + 4.0 * gb * 2.0 * np.real(half))


def calibrate_pump(db_target, gamma_b=32.0, theta=0.0, verify=True, n_src=None):
    """Pump for a requested carrier squeezing, checked against the output noise."""
    lam = pump_for_db(db_target, gamma_b)
    if lam >= gamma_b / 2:
        raise AboveThresholdError(f"{db_target} dB needs a pump at or above threshold")
    dpa = DpaParams(gamma_b=gamma_b, pump=lam, theta=theta)
    if verify and lam > 0:
        if n_src is None:
            n_src = int(min(120, 30 + 6 * db_target))
        v = source_output_variance(dpa, squeezed_quadrature_angle(theta), n_src=n_src)
        want = 10.0 ** (-db_target / 10.0)
        if abs(v - want) > 0.02 * want:
            raise RuntimeError(f"pump calibration check failed: output noise {v:.5g}, expected {want:.5g}")
    return dpa


@dataclass(frozen=True)
class CascadedConfig:
    system: SystemParams = field(default_factory=SystemParams)
    drive: DriveParams = field(default_factory=DriveParams)
    dpa: DpaParams = field(default_factory=DpaParams)
    n_cav: int = 4
    n_src: int = 10
    dt: float = 0.02
    frame: str = "displaced"
    source_basis: str = "squeezed"
    diagonal_blocks: str = "center"
    diag_every: int = 100
    step_audit: bool = False
    include_source: bool = True

    def __post_init__(self):
        if self.frame not in ("displaced", "lab"):
            raise ValueError(f"frame must be 'displaced' or 'lab', got {self.frame!r}")
        if self.source_basis not in ("squeezed", "fock"):
            raise ValueError(f"source_basis must be 'squeezed' or 'fock', got {self.source_basis!r}")
        if self.diagonal_blocks not in ("all", "center", "none"):
            raise ValueError("diagonal_blocks must be 'all', 'center' or 'none'")
        fs.ladder(self.n_cav)
        if self.include_source:
            fs.ladder(self.n_src)

    def with_(self, **changes):
        from dataclasses import replace

        return replace(self, **changes)


@dataclass
class SectorBlock:
    """Coherence block <s_bra| rho |s_ket> on cavity (x) source at ``time`` (ns)."""

    bra_sector: str
    ket_sector: str
    block: np.ndarray
    time: float


class CascadedModel:
    """Operators and generators for one configuration, angular units throughout."""

    def __init__(self, cfg):
        self.cfg = cfg
        p = cfg.system
        nb = cfg.n_src if cfg.include_source else 1
        self.n_cav, self.n_src = cfg.n_cav, nb
        ac = fs.ladder(cfg.n_cav)
        ic = fs.identity(cfg.n_cav)
        ib = fs.identity(nb)
        self.a = fs.tensor(ac, ib)
        self.ad = fs.dag(self.a)
        self.num = self.ad @ self.a
        self.eye = np.eye(cfg.n_cav * nb, dtype=complex)
        self.kappa = angular(p.kappa)
        self.det = {s: angular(sector_detuning(p, s)) for s in SECTORS}
        if cfg.include_source:
            r_basis = intracavity_squeeze(cfg.dpa) if cfg.source_basis == "squeezed" else 0.0
            bs, _ = _source_ops(nb, r_basis, cfg.dpa.theta)
            self.b = fs.tensor(ic, bs)
            self.gb = angular(cfg.dpa.gamma_b)
            h_dpa = fs.tensor(ic, _dpa_hamiltonian(cfg.dpa, bs))
            h_casc = 0.5j * math.sqrt(self.kappa * self.gb) * (fs.dag(self.b) @ self.a - self.ad @ self.b)
            self.J = math.sqrt(self.gb) * self.b + math.sqrt(self.kappa) * self.a
        else:
            self.b = None
            self.gb = 0.0
            h_dpa = np.zeros_like(self.num)
            h_casc = np.zeros_like(self.num)
            self.J = math.sqrt(self.kappa) * self.a
        self.Jd = fs.dag(self.J)
        self.h_static = h_dpa + h_casc
        self.K0 = -1j * self.h_static - 0.5 * self.Jd @ self.J
        self.K0d = fs.dag(self.K0)
        self._K0J = np.vstack([self.K0, self.J])
        self._K0dJd = np.hstack([self.K0d, self.Jd])
        self._nvec = np.real(np.diag(self.num)).copy()

    # -- lab frame ----------------------------------------------------------
    def hamiltonian(self, s, t):
        eps = angular(envelope(t, self.cfg.drive))
        return self.det[s] * self.num + eps * (self.a + self.ad) + self.h_static

    def rhs_lab(self, X, t, s_bra, s_ket):
        Hl, Hr = self.hamiltonian(s_bra, t), self.hamiltonian(s_ket, t)
        JdJ = self.Jd @ self.J
        return -1j * (Hl @ X - X @ Hr) + self.J @ X @ self.Jd - 0.5 * (JdJ @ X + X @ JdJ)

    # -- displaced frame ----------------------------------------------------
    def beta_dot(self, s, beta, t):
        eps = angular(envelope(t, self.cfg.drive))
        return -(1j * self.det[s] + 0.5 * self.kappa) * beta - 1j * eps

    def _scalar(self, s, beta, eps):
        """Identity coefficient of the left generator for sector s (eps in rad/ns)."""
        bdot = -(1j * self.det[s] + 0.5 * self.kappa) * beta - 1j * eps
        return (
            -1j * self.det[s] * abs(beta) ** 2
            - 2j * eps * beta.real
            - 0.5 * self.kappa * abs(beta) ** 2
            - 1j * (np.conj(beta) * bdot).imag
        )

    def displaced_generators(self, pairs, betas, t):
        """Left/right effective operators so that dY = KL Y + Y KR + J Y J^dag."""
        eps = angular(envelope(t, self.cfg.drive))
        rk = math.sqrt(self.kappa)
        sl = [p[0] for p in pairs]
        sr = [p[1] for p in pairs]
        bl = np.array([betas[s] for s in sl])
        br = np.array([betas[s] for s in sr])
        dl = np.array([self.det[s] for s in sl])
        dr = np.array([self.det[s] for s in sr])
        scal = {s: self._scalar(s, betas[s], eps) for s in SECTORS}
        cl = np.array([scal[s] for s in sl]) + self.kappa * bl * np.conj(br)
        cr = np.conj(np.array([scal[s] for s in sr]))
        col = (slice(None), None, None)
        KL = self.K0[None] + (-1j * dl)[col] * self.num + (rk * np.conj(br - bl))[col] * self.J + cl[col] * self.eye
        KR = self.K0d[None] + (1j * dr)[col] * self.num + (rk * (bl - br))[col] * self.Jd + cr[col] * self.eye
        return KL, KR

    def rhs_displaced(self, Y, t, pairs, betas):
        """dY/dt for a stack of displaced-frame blocks.

        Same generator as ``displaced_generators`` but without forming the
        per-block operators: the diagonal number operator is applied
        elementwise and K0, J share one stacked product on each side.
        """
        eps = angular(envelope(t, self.cfg.drive))
        rk = math.sqrt(self.kappa)
        n = self.num.shape[0]
        scal = {s: self._scalar(s, betas[s], eps) for s in SECTORS}
        col = (slice(None), None, None)
        bl = np.array([betas[p[0]] for p in pairs])
        br = np.array([betas[p[1]] for p in pairs])
        dl = np.array([self.det[p[0]] for p in pairs])
        dr = np.array([self.det[p[1]] for p in pairs])
        cl = np.array([scal[p[0]] for p in pairs]) + self.kappa * bl * np.conj(br)
        cr = np.conj(np.array([scal[p[1]] for p in pairs]))
        left = self._K0J @ Y  # (k, 2n, n): K0 Y over J Y
        right = Y @ self._K0dJd  # (k, n, 2n): Y K0^dag beside Y J^dag
        out = left[:, :n] + right[:, :, :n]
        out += (rk * np.conj(br - bl))[col] * left[:, n:] + (rk * (bl - br))[col] * right[:, :, n:]
        out += left[:, n:] @ self.Jd
        out += (cl + cr)[col] * Y
        out += Y * (-1j * dl[:, None, None] * self._nvec[None, :, None] + 1j * dr[:, None, None] * self._nvec[None, None, :])
        return out

    def displacement(self, beta):
        dc = expm(beta * fs.dag(fs.ladder(self.n_cav)) - np.conj(beta) * fs.ladder(self.n_cav))
        return fs.tensor(dc, fs.identity(self.n_src))

    def lab_trace(self, Y, beta_l, beta_r):
        """tr X for X = D(beta_l) Y D(beta_r)^dag."""
        M = self.displacement(-beta_r) @ self.displacement(beta_l) * np.exp(1j * (np.conj(beta_r) * beta_l).imag)
        return complex(np.trace(Y @ M))

    def initial_field(self):
        """Undriven steady state of source + cavity, cavity at the bare detuning."""
        if not self.cfg.include_source:
            return fs.vacuum(self.n_cav)
        K = self.K0 - 1j * self.det[0] * self.num
        rho = _steady_state(K, self.J)
        resid = np.max(np.abs(_apply(K, self.J, rho)))
        if resid > 1e-8:
            raise IntegratorStepError(f"steady state not converged (residual {resid:.2e} per ns)")
        return rho


def cascaded_rhs(block, t, model, betas=None):
    """Time derivative of one sector block (lab frame unless ``betas`` given)."""
    X = block.block
    if X.shape != model.num.shape:
        raise ValueError(f"block shape {X.shape} does not match model dimension {model.num.shape}")
    sl, sr = SECTOR_OF[block.bra_sector], SECTOR_OF[block.ket_sector]
    if betas is None:
        return model.rhs_lab(X, t, sl, sr)
    return model.rhs_displaced(X[None], t, [(sl, sr)], betas)[0]


@dataclass
class GateRun:
    channel: ChannelElements
    coherences: dict
    diagnostics: dict
    wall_clock: float
    config: dict

    def summary(self):
        d = self.diagnostics
        return {
            "max_trace_drift": d.get("max_trace_drift"),
            "min_eigenvalue": d.get("min_eigenvalue"),
            "max_top_population_cavity": d.get("max_top_population_cavity"),
            "max_top_population_source": d.get("max_top_population_source"),
            "max_coherence_increase": d.get("max_coherence_increase"),
            "step_audit_max_dev": d.get("step_audit_max_dev"),
            "wall_clock_s": self.wall_clock,
        }


OFF_DIAGONAL = ((2, 0), (2, -2), (0, -2))


def _pairs_for(cfg):
    diag = {"all": [(2, 2), (0, 0), (-2, -2)], "center": [(0, 0)], "none": []}[cfg.diagonal_blocks]
    return list(OFF_DIAGONAL) + diag


def _reduced_top(Y, n_cav, n_src):
    """Top-level populations of cavity and source for a physical block.

    The top two levels are used, or only the highest one for dimension 2.
    """
    r = Y.reshape(n_cav, n_src, n_cav, n_src)
    cav = np.real(np.einsum("ipjp->ij", r).diagonal())
    src = np.real(np.einsum("mimj->ij", r).diagonal())
    return float(cav[-min(2, n_cav - 1):].sum()), float(src[-min(2, n_src - 1):].sum())


def _evolve(model, cfg, pairs, dt, record=True):
    """RK4 over the gate window. Returns final blocks, betas and diagnostics."""
    drive = cfg.drive
    n_steps = int(round(drive.t_g / dt))
    if not math.isclose(n_steps * dt, drive.t_g, rel_tol=1e-9):
        raise ValueError(f"dt={dt} does not divide the gate time {drive.t_g}")
    t0 = -drive.t_g / 2
    rho0 = model.initial_field()
    Y = np.repeat(rho0[None], len(pairs), axis=0)
    displaced = cfg.frame == "displaced"
    betas = {s: 0j for s in SECTORS}
    diag_idx = [k for k, (l, r) in enumerate(pairs) if l == r]
    off_idx = [k for k, (l, r) in enumerate(pairs) if l != r]

    def f(t, Yb, bt):
        if displaced:
            return model.rhs_displaced(Yb, t, pairs, bt)
        return np.stack([model.rhs_lab(Yb[k], t, l, r) for k, (l, r) in enumerate(pairs)])

    def fb(t, bt):
        return {s: model.beta_dot(s, bt[s], t) for s in SECTORS}

    series = {"t": [], "trace": [], "min_eig": [], "top_cav": [], "top_src": [], "photons": [], "coherence": []}

    def record_point(t, Yb, bt):
        series["t"].append(t)
        tr, me, tc, ts = [], [], [], []
        for k in diag_idx:
            blk = Yb[k]
            tr.append(complex(np.trace(blk)))
            me.append(float(np.linalg.eigvalsh(0.5 * (blk + fs.dag(blk))).min()))
            c, s_ = _reduced_top(blk, model.n_cav, model.n_src)
            tc.append(c)
            ts.append(s_)
        series["trace"].append(tr)
        series["min_eig"].append(me)
        series["top_cav"].append(tc)
        series["top_src"].append(ts)
        if (0, 0) in pairs:
            blk = Yb[pairs.index((0, 0))]
            bet = bt[0] if displaced else 0j
            shifted = model.a + bet * model.eye
            series["photons"].append(float(np.real(np.trace(blk @ fs.dag(shifted) @ shifted))))
        cohs = []
        for k in off_idx:
            l, r = pairs[k]
            cohs.append(model.lab_trace(Yb[k], bt[l], bt[r]) if displaced else complex(np.trace(Yb[k])))
        series["coherence"].append(cohs)

    t = t0
    if record:
        record_point(t, Y, betas)
    for step in range(n_steps):
        if displaced:
            k1b = fb(t, betas)
            b2 = {s: betas[s] + dt / 2 * k1b[s] for s in SECTORS}
            k2b = fb(t + dt / 2, b2)
            b3 = {s: betas[s] + dt / 2 * k2b[s] for s in SECTORS}
            k3b = fb(t + dt / 2, b3)
            b4 = {s: betas[s] + dt * k3b[s] for s in SECTORS}
            k4b = fb(t + dt, b4)
        else:
            b2 = b3 = b4 = betas
        k1 = f(t, Y, betas)
        k2 = f(t + dt / 2, Y + dt / 2 * k1, b2)
        k3 = f(t + dt / 2, Y + dt / 2 * k2, b3)
        k4 = f(t + dt, Y + dt * k3, b4)
        Y = Y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if displaced:
            betas = {s: betas[s] + dt / 6 * (k1b[s] + 2 * k2b[s] + 2 * k3b[s] + k4b[s]) for s in SECTORS}
        t = t0 + (step + 1) * dt
        if record and ((step + 1) % cfg.diag_every == 0 or step + 1 == n_steps):
            record_point(t, Y, betas)
            if series["min_eig"][-1] and min(series["min_eig"][-1]) < -1e-6:
                raise IntegratorStepError(f"positivity lost at t={t:.3f} ns (min eigenvalue {min(series['min_eig'][-1]):.2e})")
            if series["top_cav"][-1] and max(series["top_cav"][-1]) > 1e-4:
                raise fs.TruncationError(f"cavity truncation n_cav={model.n_cav} exceeded at t={t:.3f} ns", max(series["top_cav"][-1]), "cavity")
            if cfg.include_source and series["top_src"][-1] and max(series["top_src"][-1]) > 1e-4:
                raise fs.TruncationError(f"source truncation n_src={model.n_src} exceeded at t={t:.3f} ns", max(series["top_src"][-1]), "source")
        if not np.all(np.isfinite(Y[:, 0, 0])):
            raise IntegratorStepError(f"non-finite block entries at t={t:.3f} ns")

    coh = {}
    for k in off_idx:
        l, r = pairs[k]
        coh[(l, r)] = model.lab_trace(Y[k], betas[l], betas[r]) if displaced else complex(np.trace(Y[k]))
    mags = np.abs(np.array(series["coherence"])) if off_idx and record else None
    max_increase = float(max(np.max(np.diff(mags, axis=0)), 0.0)) if mags is not None and len(mags) > 1 else 0.0
    return Y, betas, coh, series, max_increase


def _channel_from_coherences(coh):
    c = np.ones((4, 4), dtype=complex)
    for i, a in enumerate(BASIS):
        for j, b in enumerate(BASIS):
            sa, sb = SECTOR_OF[a], SECTOR_OF[b]
            if sa == sb:
                continue
            if (sa, sb) in coh:
                c[i, j] = coh[(sa, sb)]
            else:
                c[i, j] = np.conj(coh[(sb, sa)])
    return ChannelElements.from_matrix(c)


def config_snapshot(cfg):
    d = asdict(cfg)
    return d


def run_gate(cfg):
    """Integrate the cascaded model over the gate and extract the qubit channel."""
    start = _time.perf_counter()
    model = CascadedModel(cfg)
    pairs = _pairs_for(cfg)
    Y, betas, coh, series, max_inc = _evolve(model, cfg, pairs, cfg.dt)
    channel = _channel_from_coherences(coh)

    diag = {"series": series}
    traces = [abs(x - 1.0) for row in series["trace"] for x in row]
    eigs = [x for row in series["min_eig"] for x in row]
    diag["max_trace_drift"] = max(traces) if traces else None
    diag["min_eigenvalue"] = min(eigs) if eigs else None
    tops_c = [x for row in series["top_cav"] for x in row]
    tops_s = [x for row in series["top_src"] for x in row]
    diag["max_top_population_cavity"] = max(tops_c) if tops_c else None
    diag["max_top_population_source"] = max(tops_s) if tops_s else None
    diag["max_coherence_increase"] = max_inc
    diag["final_betas"] = {str(s): [betas[s].real, betas[s].imag] for s in SECTORS}
    if cfg.include_source:
        diag["source_linewidth_mhz"] = cfg.dpa.gamma_b
        diag["squeezing_halfwidth_mhz"] = cfg.dpa.squeezing_halfwidth
        diag["squeezing_db"] = cfg.dpa.squeezing_db
    if cfg.step_audit:
        _, _, coh2, _, _ = _evolve(model, cfg, list(OFF_DIAGONAL), cfg.dt / 2, record=False)
        dev = max(abs(coh2[k] - coh[k]) for k in coh)
        diag["step_audit_max_dev"] = float(dev)
    return GateRun(
        channel=channel,
        coherences={f"{l},{r}": [v.real, v.imag] for (l, r), v in coh.items()},
        diagnostics=diag,
        wall_clock=_time.perf_counter() - start,
        config=config_snapshot(cfg),
    )
