"""Independent numerical references used by the tests.

None of these reuse the closed-form machinery under test: Wigner functions
come from wavefunctions or the Gaussian density formula, transforms are done
pointwise or by grid convolution, integrals by grid quadrature, and operator
algebra in a truncated Fock space.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.signal import fftconvolve


# ---- grids --------------------------------------------------------------

class Grid:
    """Square phase-space grid ``[-L, L]^2`` with spacing ``h``."""

    def __init__(self, L: float = 12.0, h: float = 0.05):
        n = int(round(2 * L / h)) + 1
        self.axis = np.linspace(-L, L, n)
        self.h = self.axis[1] - self.axis[0]
        self.X, self.P = np.meshgrid(self.axis, self.axis, indexing="ij")

    def integrate(self, values: np.ndarray) -> float:
        # trapezoid weights; spectrally accurate for smooth decaying integrands
        w = np.full(len(self.axis), self.h)
        w[0] = w[-1] = self.h / 2
        return float(w @ values @ w)


# ---- pointwise Wigner functions ------------------------------------------

def gaussian_wigner(mean, cov):
    mean = np.asarray(mean, float)
    cov = np.asarray(cov, float)
    inv = np.linalg.inv(cov)
    norm = 1.0 / (2 * math.pi * math.sqrt(np.linalg.det(cov)))

    def W(x, p):
        dx, dp = x - mean[0], p - mean[1]
        q = inv[0, 0] * dx * dx + 2 * inv[0, 1] * dx * dp + inv[1, 1] * dp * dp
        return norm * np.exp(-0.5 * q)

    return W


def cat_wavefunction(alpha: float, parity: str = "odd"):
    """Position wavefunction of ``|alpha> -/+ |-alpha>``, normalized numerically."""
    a = math.sqrt(2) * alpha
    sign = -1.0 if parity == "odd" else 1.0
    y = np.linspace(-20, 20, 40001)
    raw = np.exp(-((y - a) ** 2) / 2) + sign * np.exp(-((y + a) ** 2) / 2)
    norm = math.sqrt(np.trapezoid(raw**2, y))
    return lambda x: (np.exp(-((x - a) ** 2) / 2) + sign * np.exp(-((x + a) ** 2) / 2)) / norm


def wigner_from_wavefunction(psi, y_max: float = 8.0, dy: float = 0.025, chunk: int = 4096):
    """``W(x,p) = (1/pi) int psi(x+y) psi(x-y) cos(2 p y) dy`` for real ``psi``."""
    y = np.arange(-y_max, y_max + dy / 2, dy)

    def W(x, p):
        x = np.asarray(x, float)
        p = np.asarray(p, float)
        xs, ps = np.broadcast_arrays(x, p)
        flat_x, flat_p = xs.ravel(), ps.ravel()
        out = np.empty(flat_x.size)
        for s in range(0, flat_x.size, chunk):
            xx = flat_x[s : s + chunk, None]
            pp = flat_p[s : s + chunk, None]
            K = psi(xx + y) * psi(xx - y) * np.cos(2 * pp * y)
            out[s : s + chunk] = K.sum(axis=1) * dy / math.pi
        return out.reshape(xs.shape)

    return W


def cat_wigner(alpha: float, parity: str = "odd"):
    return wigner_from_wavefunction(cat_wavefunction(alpha, parity))


# ---- transforms ----------------------------------------------------------

def pullback(W, A, b=(0.0, 0.0)):
    """Pointwise ``W(A v + b)``."""
    A = np.asarray(A, float)
    b = np.asarray(b, float)
    return lambda x, p: W(A[0, 0] * x + A[0, 1] * p + b[0], A[1, 0] * x + A[1, 1] * p + b[1])


def smooth_on_grid(values: np.ndarray, grid: Grid, axis: str, width: float) -> np.ndarray:
    """Discrete convolution with a sampled normalized Gaussian along one axis."""
    if width == 0:
        return values
    half = int(math.ceil(10 * width / grid.h))
    u = np.arange(-half, half + 1) * grid.h
    kernel = np.exp(-(u**2) / (2 * width**2)) / (math.sqrt(2 * math.pi) * width) * grid.h
    k2 = kernel[:, None] if axis == "x" else kernel[None, :]
    return fftconvolve(values, k2, mode="same")


def smooth_pointwise(W, axis: str, width: float, n_nodes: int = 80):
    """Gauss-Hermite convolution for pointwise checks."""
    if width == 0:
        return W
    t, w = np.polynomial.hermite.hermgauss(n_nodes)
    shifts = math.sqrt(2) * width * t
    weights = w / math.sqrt(math.pi)

    def out(x, p):
        total = 0.0
        for s, wt in zip(shifts, weights):
            total = total + wt * (W(x - s, p) if axis == "x" else W(x, p - s))
        return total

    return out


# ---- two-mode Fock-space operators ---------------------------------------

def fock_quadratures(cutoff: int):
    """``X_A, P_A, X_L, P_L`` on a truncated two-mode Fock space."""
    a = np.diag(np.sqrt(np.arange(1, cutoff)), 1)
    x = (a + a.T) / math.sqrt(2)
    p = (a - a.T) / (1j * math.sqrt(2))
    eye = np.eye(cutoff)
    return [np.kron(x, eye), np.kron(p, eye), np.kron(eye, x), np.kron(eye, p)]


def heisenberg_generator(K: np.ndarray, cutoff: int = 8) -> np.ndarray:
    """Coefficients ``G`` with ``i[H, y_i] = sum_j G_ij y_j`` for ``H = y^T K y / 2``.

    Built from truncated matrices and read off on the low-photon block where
    truncation does not reach.
    """
    ops = fock_quadratures(cutoff)
    H = sum(0.5 * K[i, j] * ops[i] @ ops[j] for i in range(4) for j in range(4))
    n = np.arange(cutoff)
    keep = (n[:, None] + n[None, :] <= cutoff - 3).ravel()
    basis = np.array([op[np.ix_(keep, keep)].ravel() for op in ops]).T
    G = np.zeros((4, 4))
    for i, y in enumerate(ops):
        lhs = (1j * (H @ y - y @ H))[np.ix_(keep, keep)].ravel()
        coef, *_ = np.linalg.lstsq(basis, lhs, rcond=None)
        G[i] = coef.real
    return G
