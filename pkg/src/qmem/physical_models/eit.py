"""Three-mode EIT storage: closed forms and open-system moment dynamics.

Modes are ordered (signal field ``a_L``, ground coherence ``sigma_21/sqrt(N)``,
excited coherence ``sigma_23/sqrt(N)``).  Complex amplitudes ``z_k`` map to
quadratures through ``z = (x + i p)/sqrt(2)`` and the real representation is
interleaved ``(x1, p1, x2, p2, x3, p3)``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.linalg import expm

from .._parallel import parallel_map
from ..phase_space import uncertainty_eigenvalues
from ..quadratic_dynamics import BilinearHamiltonian
from .couplings import ADIABATIC_RATIO, ValidityWarning

TAN_CAP = 1e-6
N_SAMPLES = 512
RAMP_SHAPES = ("linear", "smoothstep")
TRAJECTORY_UNCERTAINTY_TOL = 1e-6

_SQRT3 = math.sqrt(3.0)


class IntegrationError(RuntimeError):
    def __init__(self, message: str, time: float):
        super().__init__(f"{message} at t = {time:.12g}")
        self.time = time


@dataclass(frozen=True)
class Ramp:
    """Mixing-angle schedule ``theta(t)`` on ``[0, duration]``."""

    shape: str = "smoothstep"
    duration: float = 1.0
    theta_start: float = 0.0
    theta_end: float = math.pi / 2

    def __post_init__(self):
        if self.shape not in RAMP_SHAPES:
            raise ValueError(f"ramp shape must be one of {RAMP_SHAPES}, got {self.shape!r}")
        if not (self.duration > 0 and math.isfinite(self.duration)):
            raise ValueError("ramp duration must be positive and finite")
        for th in (self.theta_start, self.theta_end):
            if not 0.0 <= th <= math.pi / 2:
                raise ValueError("ramp endpoints must lie in [0, pi/2]")

    @property
    def span(self) -> float:
        return self.theta_end - self.theta_start

    @property
    def mean_rate(self) -> float:
        return self.span / self.duration

    def theta(self, t: float) -> float:
        s = min(max(t / self.duration, 0.0), 1.0)
        if self.shape == "smoothstep":
            s = s * s * (3.0 - 2.0 * s)
        return self.theta_start + self.span * s

    def theta_dot(self, t: float) -> float:
        s = t / self.duration
        if s < 0.0 or s > 1.0:
            return 0.0
        if self.shape == "smoothstep":
            return self.span * 6.0 * s * (1.0 - s) / self.duration
        return self.mean_rate


@dataclass(frozen=True)
class EITParams:
    g: float
    n_atoms: float
    gamma: float
    delta: float = 0.0
    ramp: Ramp = field(default_factory=Ramp)

    def __post_init__(self):
        if self.n_atoms <= 0:
            raise ValueError("n_atoms must be positive")
        if self.gamma < 0:
            raise ValueError("gamma must be non-negative")

    @property
    def g_sqrt_n(self) -> float:
        return self.g * math.sqrt(self.n_atoms)


class BrightParams(NamedTuple):
    W: float
    omega_B: float
    gamma_B: float
    gamma_D: Callable[[float], float]


class EITGenerator(NamedTuple):
    hamiltonian: np.ndarray
    drift: np.ndarray
    noise: np.ndarray


class StarkShifts(NamedTuple):
    signal: float
    spin: float


@dataclass(frozen=True)
class IntegratorOptions:
    """``method`` is ``"magnus"`` (4th order, step doubling) or ``"rk"`` (DOP853).

    ``frame`` selects the rotating polariton frame or the lab frame for the
    Magnus route; the RK route always runs in the lab frame.
    """

    rtol: float = 1e-9
    atol: float = 1e-12
    max_step: float | None = None
    method: str = "magnus"
    frame: str = "rotating"
    max_steps: int = 10_000_000

    def __post_init__(self):
        if self.method not in ("magnus", "rk"):
            raise ValueError(f"unknown integrator method {self.method!r}")
        if self.frame not in ("rotating", "lab"):
            raise ValueError(f"unknown frame {self.frame!r}")
        if self.rtol <= 0 or self.atol <= 0:
            raise ValueError("tolerances must be positive")


@dataclass(frozen=True)
class ThreeModeTrajectory:
    times: np.ndarray
    means: np.ndarray
    second_moments: np.ndarray | None = None

    def __post_init__(self):
        if self.means.shape != (len(self.times), 3):
            raise ValueError("means must have shape (n_samples, 3)")
        if self.second_moments is not None:
            if self.second_moments.shape != (len(self.times), 6, 6):
                raise ValueError("second_moments must have shape (n_samples, 6, 6)")
            for k, V in enumerate(self.second_moments):
                # interleaved (x1,p1,x2,p2,...) order is already mode-blocked
                lo = uncertainty_eigenvalues(V).min()
                if lo < -TRAJECTORY_UNCERTAINTY_TOL:
                    raise ValueError(
                        f"covariance violates the uncertainty relation at t = {self.times[k]:.6g} "
                        f"(min eigenvalue {lo:.3g})"
                    )


def real_representation(A: np.ndarray) -> np.ndarray:
    """Real 6x6 matrix acting on interleaved quadratures for ``dz/dt = A z``."""
    Ar, Ai = A.real, A.imag
    n = A.shape[0]
    F = np.zeros((2 * n, 2 * n))
    F[0::2, 0::2] = Ar
    F[0::2, 1::2] = -Ai
    F[1::2, 0::2] = Ai
    F[1::2, 1::2] = Ar
    return F


def eit_mixing_angle(g: float, n_atoms: float, omega_control: float) -> float:
    """``theta`` with ``tan(theta) = g sqrt(N) / Omega``."""
    if omega_control < 0:
        raise ValueError("control Rabi frequency must be non-negative")
    gs = g * math.sqrt(n_atoms)
    if gs == 0 and omega_control == 0:
        raise ValueError("mixing angle undefined when g sqrt(N) = Omega = 0")
    return math.atan2(gs, omega_control)


def eit_bright_params(ep: EITParams, omega_control: float) -> BrightParams:
    denom = ep.gamma**2 / 4 + ep.delta**2
    if denom == 0:
        raise ValueError("bright-state parameters undefined for gamma = delta = 0")
    W = math.hypot(ep.g_sqrt_n, omega_control)
    gamma_B = W**2 * ep.gamma / denom

    def gamma_D(theta_dot: float) -> float:
        return theta_dot**2 / gamma_B

    return BrightParams(W, W**2 * ep.delta / denom, gamma_B, gamma_D)


def eit_generator(ep: EITParams, omega_control: float) -> EITGenerator:
    """Hamiltonian matrix, quadrature drift and vacuum-noise input matrix.

    The excited mode decays in amplitude at ``Gamma/2``; the noise term
    ``Gamma/2`` on its quadratures keeps the vacuum (variance 1/2) stationary.
    """
    gs = ep.g_sqrt_n
    H = np.array(
        [[0.0, 0.0, gs], [0.0, 0.0, omega_control], [gs, omega_control, -ep.delta]],
        dtype=complex,
    )
    A = -1j * H
    A[2, 2] -= ep.gamma / 2
    D = np.zeros((6, 6))
    D[4, 4] = D[5, 5] = ep.gamma / 2
    return EITGenerator(H, real_representation(A), D)


def control_from_angle(g_sqrt_n: float, theta: float, cap: float = TAN_CAP) -> float:
    """``Omega = g sqrt(N) / tan(theta)`` with ``tan(theta)`` floored at ``cap``."""
    return g_sqrt_n / max(math.tan(theta), cap)


def polariton_rotation(theta: float) -> np.ndarray:
    """``R(theta)`` taking (a, sigma, E) to (dark, bright, E)."""
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def rotating_hamiltonian(W: float, theta_dot: float, delta: float) -> np.ndarray:
    """``R H R^-1 + i dR/dt R^-1`` in the polariton basis."""
    return np.array(
        [[0.0, -1j * theta_dot, 0.0], [1j * theta_dot, 0.0, W], [0.0, W, -delta]],
        dtype=complex,
    )


def _effective_angle(ep: EITParams, t: float) -> tuple[float, float]:
    # the tan cap freezes theta, so its rate vanishes while the cap is active
    th = ep.ramp.theta(t)
    if math.tan(th) < TAN_CAP:
        return math.atan(TAN_CAP), 0.0
    return th, ep.ramp.theta_dot(t)


def _lab_drift(ep: EITParams, t: float) -> np.ndarray:
    omega = control_from_angle(ep.g_sqrt_n, ep.ramp.theta(t))
    return eit_generator(ep, omega).drift


def _rotating_drift(ep: EITParams, t: float) -> np.ndarray:
    th, thd = _effective_angle(ep, t)
    W = math.hypot(ep.g_sqrt_n, control_from_angle(ep.g_sqrt_n, th))
    A = -1j * rotating_hamiltonian(W, thd, ep.delta)
    A[2, 2] -= ep.gamma / 2
    return real_representation(A)


def _lyapunov_block(F: np.ndarray, D: np.ndarray) -> np.ndarray:
    # linear generator of [vec(V); 1] for dV/dt = F V + V F^T + D (row-major vec)
    n = F.shape[0]
    eye = np.eye(n)
    L = np.zeros((n * n + 1, n * n + 1))
    L[: n * n, : n * n] = np.kron(F, eye) + np.kron(eye, F)
    L[: n * n, -1] = D.ravel()
    return L


def _magnus_step(gen, t: float, h: float, y: np.ndarray) -> np.ndarray:
    A1 = gen(t + h * (0.5 - _SQRT3 / 6))
    A2 = gen(t + h * (0.5 + _SQRT3 / 6))
    omega = 0.5 * h * (A1 + A2) + (_SQRT3 / 12) * h * h * (A2 @ A1 - A1 @ A2)
    return expm(omega) @ y


def _magnus_integrate(gen, y0, t_grid, opts: IntegratorOptions) -> np.ndarray:
    """Adaptive 4th-order Magnus with step doubling; hits every grid time."""
    T = t_grid[-1]
    out = np.empty((len(t_grid), len(y0)))
    out[0] = y0
    y = np.array(y0, dtype=float)
    t = 0.0
    h = T * 1e-6
    h_max = opts.max_step or T
    n_steps = 0
    for k in range(1, len(t_grid)):
        target = t_grid[k]
        while t < target:
            h = min(h, h_max, target - t)
            if h <= 64 * np.spacing(max(abs(t), T)):
                raise IntegrationError("step size underflow", t)
            # an oversized trial step can overflow expm; that counts as a rejection
            with np.errstate(over="ignore", invalid="ignore"):
                y_full = _magnus_step(gen, t, h, y)
                y_half = _magnus_step(gen, t + h / 2, h / 2, _magnus_step(gen, t, h / 2, y))
                scale = opts.atol + opts.rtol * np.maximum(np.abs(y), np.abs(y_half))
                err = float(np.max(np.abs(y_full - y_half) / scale)) / 15.0
            if not math.isfinite(err):
                err = math.inf
            if err <= 1.0:
                t = target if target - t - h <= 4 * np.spacing(target) else t + h
                y = y_half + (y_half - y_full) / 15.0
            h *= min(4.0, max(0.2, 0.9 * max(err, 1e-10) ** -0.2)) if math.isfinite(err) else 0.2
            n_steps += 1
            if n_steps > opts.max_steps:
                raise IntegrationError("step budget exhausted", t)
        out[k] = y
    return out


def _rk_integrate(gen, y0, t_grid, opts: IntegratorOptions) -> np.ndarray:
    kwargs = {} if opts.max_step is None else {"max_step": opts.max_step}
    sol = solve_ivp(
        lambda t, y: gen(t) @ y,
        (0.0, t_grid[-1]),
        y0,
        method="DOP853",
        t_eval=t_grid,
        rtol=opts.rtol,
        atol=opts.atol,
        **kwargs,
    )
    if not sol.success:
        raise IntegrationError(sol.message, float(sol.t[-1]) if len(sol.t) else 0.0)
    return sol.y.T


def _complex_means(Y: np.ndarray) -> np.ndarray:
    return (Y[:, 0:6:2] + 1j * Y[:, 1:6:2]) / math.sqrt(2)


def eit_simulate_transfer(
    ep: EITParams,
    input_amplitude: complex = 1.0,
    integrator: IntegratorOptions | None = None,
    with_covariance: bool = False,
    initial_cov: np.ndarray | None = None,
    n_samples: int = N_SAMPLES,
) -> tuple[ThreeModeTrajectory, float]:
    """Store a coherent signal by ramping the control field down.

    Returns the lab-frame trajectory on a uniform grid and the transfer
    efficiency ``|z_2(T)|^2 / |z_1(0)|^2``.
    """
    opts = integrator or IntegratorOptions()
    if input_amplitude == 0:
        raise ValueError("input amplitude must be non-zero")
    T = ep.ramp.duration
    t_grid = np.linspace(0.0, T, n_samples)
    rotating = opts.method == "magnus" and opts.frame == "rotating"

    z0 = np.array([input_amplitude, 0.0, 0.0], dtype=complex)
    R6_0 = None
    if rotating:
        R0 = polariton_rotation(_effective_angle(ep, 0.0)[0])
        z0 = R0 @ z0
        R6_0 = np.kron(R0, np.eye(2))
    y0 = np.empty(6)
    y0[0::2] = math.sqrt(2) * z0.real
    y0[1::2] = math.sqrt(2) * z0.imag

    drift = (lambda t: _rotating_drift(ep, t)) if rotating else (lambda t: _lab_drift(ep, t))
    D = eit_generator(ep, 0.0).noise
    if with_covariance:
        V0 = 0.5 * np.eye(6) if initial_cov is None else np.asarray(initial_cov, dtype=float)
        if V0.shape != (6, 6):
            raise ValueError("initial_cov must be 6x6")
        if R6_0 is not None:
            V0 = R6_0 @ V0 @ R6_0.T
        y0 = np.concatenate([y0, V0.ravel(), [1.0]])

        def gen(t):
            F = drift(t)
            G = np.zeros((43, 43))
            G[:6, :6] = F
            G[6:, 6:] = _lyapunov_block(F, D)
            return G
    else:
        gen = drift

    if opts.method == "magnus":
        Y = _magnus_integrate(gen, y0, t_grid, opts)
    else:
        Y = _rk_integrate(gen, y0, t_grid, opts)

    means = _complex_means(Y[:, :6])
    covs = Y[:, 6:42].reshape(-1, 6, 6) if with_covariance else None
    if rotating:
        for k, t in enumerate(t_grid):
            Rt = polariton_rotation(_effective_angle(ep, t)[0]).T
            means[k] = Rt @ means[k]
            if covs is not None:
                R6 = np.kron(Rt, np.eye(2))
                covs[k] = R6 @ covs[k] @ R6.T
    if covs is not None:
        covs = 0.5 * (covs + covs.transpose(0, 2, 1))

    efficiency = float(abs(means[-1, 1]) ** 2 / abs(input_amplitude) ** 2)
    if not efficiency <= 1.0 + 1e-9:
        raise IntegrationError(f"efficiency {efficiency:.12g} exceeds 1", T)
    return ThreeModeTrajectory(t_grid, means, covs), efficiency


def reference_gamma_B(ep: EITParams) -> float:
    """Bright-state decay at the smallest ``W`` of the storage ramp (``W = g sqrt(N)``)."""
    return eit_bright_params(ep, 0.0).gamma_B


def duration_for_rate(ep: EITParams, ratio: float) -> float:
    """Ramp duration giving a mean ``theta_dot / gamma_B`` equal to ``ratio``."""
    if ratio <= 0:
        raise ValueError("ratio must be positive")
    return abs(ep.ramp.span) / (ratio * reference_gamma_B(ep))


def dark_state_loss_integrals(ep: EITParams) -> tuple[float, float]:
    """Non-adiabatic loss estimates for the ramp.

    Returns ``(predicted_loss, gamma_D_T)``.  ``predicted_loss`` is the
    population leak ``integral theta_dot^2 Gamma / W^2 dt`` obtained by
    adiabatically eliminating the bright and excited modes;
    ``gamma_D_T = integral theta_dot^2 / gamma_B dt``.  At resonance the two
    differ by the factor 4 in ``gamma_B = 4 W^2 / Gamma``.
    """
    gs2 = ep.g_sqrt_n**2
    denom = ep.gamma**2 / 4 + ep.delta**2

    def leak(t):
        th, thd = _effective_angle(ep, t)
        return thd**2 * ep.gamma * math.sin(th) ** 2 / gs2

    def gamma_d(t):
        th, thd = _effective_angle(ep, t)
        W2 = gs2 / math.sin(th) ** 2
        return thd**2 * denom / (W2 * ep.gamma)

    T = ep.ramp.duration
    pts = np.linspace(0.0, T, 9)[1:-1]
    predicted = quad(leak, 0.0, T, points=pts, limit=200, epsabs=0.0, epsrel=1e-10)[0]
    gd = quad(gamma_d, 0.0, T, points=pts, limit=200, epsabs=0.0, epsrel=1e-10)[0]
    return predicted, gd


def _sweep_row(job):
    ep, ratio, opts = job
    T = duration_for_rate(ep, ratio)
    ep_T = EITParams(ep.g, ep.n_atoms, ep.gamma, ep.delta, Ramp(
        ep.ramp.shape, T, ep.ramp.theta_start, ep.ramp.theta_end))
    predicted, gd = dark_state_loss_integrals(ep_T)
    row = {
        "T": T,
        "theta_dot_over_gammaB": ratio,
        "efficiency": math.nan,
        "predicted_loss": predicted,
        "gamma_D_T": gd,
        "omega_B": eit_bright_params(ep, 0.0).omega_B,
        "status": "ok",
    }
    try:
        row["efficiency"] = eit_simulate_transfer(ep_T, 1.0, opts)[1]
    except IntegrationError as exc:
        row["status"] = f"integrator_failure: {exc}"
    return row


def eit_ramp_sweep(ep: EITParams, ratios, integrator: IntegratorOptions | None = None,
                   workers: int | None = None) -> list[dict]:
    """One transfer simulation per ``theta_dot/gamma_B`` value, rows in input order."""
    opts = integrator or IntegratorOptions()
    jobs = [(ep, float(r), opts) for r in ratios]
    return parallel_map(_sweep_row, jobs, workers)


def loglog_slope(x, y) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    return float(np.polyfit(lx, ly, 1)[0])


def eit_off_resonant_hamiltonian(ep: EITParams, omega_control: float):
    """Far-detuned limit: beam-splitter coupling plus uncancelled Stark shifts.

    The exchange term ``(g sqrt(N) Omega / Delta)(a^dag s + s^dag a)`` becomes
    ``kappa (X_A X_L + P_A P_L)``; the shifts ``g^2 N / Delta`` (signal) and
    ``Omega^2 / Delta`` (spin) are returned separately.
    """
    if ep.delta == 0:
        raise ValueError("off-resonant regime needs a non-zero detuning")
    W = math.hypot(ep.g_sqrt_n, omega_control)
    for label, val in (("W", W), ("Gamma", ep.gamma)):
        if abs(val / ep.delta) >= ADIABATIC_RATIO:
            warnings.warn(
                f"{label}/|Delta| = {abs(val / ep.delta):.3g} is not small; "
                "the far-off-resonant reduction is questionable",
                ValidityWarning,
                stacklevel=2,
            )
    kappa = ep.g_sqrt_n * omega_control / ep.delta
    shifts = StarkShifts(ep.g_sqrt_n**2 / ep.delta, omega_control**2 / ep.delta)
    return BilinearHamiltonian(p=kappa, s=kappa), shifts


def off_resonant_write_loss(ep: EITParams, omega_control: float) -> float:
    """Bright-state loss ``gamma_B T`` accumulated over ``T = Delta / W^2``."""
    bp = eit_bright_params(ep, omega_control)
    return bp.gamma_B * abs(ep.delta) / bp.W**2
