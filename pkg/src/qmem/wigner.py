"""Exact single-mode Wigner-function calculus on sums of complex Gaussians.

A Wigner function is stored as

    W(v) = Re sum_k c_k exp(-(v - mu_k)^T Q_k (v - mu_k)),    v = (x, p),

with complex coefficients, complex centres and complex symmetric precision
matrices whose real parts are positive definite.  Gaussian states need one
term; a cat state needs two real terms plus one conjugate pair carrying the
interference fringes.  Affine changes of variables, Gaussian smoothing along
an axis and overlap integrals all map this class to itself, so the memory
output of the single- and double-pass schemes is computed without grids.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

AXES = {"x": 0, "p": 1}


def _sqrt_det(Q: np.ndarray) -> np.ndarray:
    # Eigenvalues of Q lie in the right half-plane, so the product of principal
    # roots is the analytic continuation of sqrt(det Q) from real Q.
    lam = np.linalg.eigvals(Q)
    return np.prod(np.sqrt(lam), axis=-1)


@dataclass(frozen=True)
class GaussianTermSum:
    coeffs: np.ndarray  # (K,)
    means: np.ndarray  # (K, 2)
    precisions: np.ndarray  # (K, 2, 2)

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.coeffs, dtype=complex))
        m = np.asarray(self.means, dtype=complex).reshape(-1, 2)
        Q = np.asarray(self.precisions, dtype=complex).reshape(-1, 2, 2)
        if not (c.shape[0] == m.shape[0] == Q.shape[0]):
            raise ValueError("coeffs, means and precisions disagree on the term count")
        if np.max(np.abs(Q - Q.transpose(0, 2, 1)), initial=0.0) > 1e-12 * max(
            1.0, float(np.max(np.abs(Q), initial=0.0))
        ):
            raise ValueError("precision matrices must be symmetric")
        re_eigs = np.linalg.eigvalsh(Q.real) if len(Q) else np.ones((0, 2))
        if np.any(re_eigs <= 0):
            raise ValueError("real part of every precision matrix must be positive definite")
        for a in (c, m, Q):
            a.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "means", m)
        object.__setattr__(self, "precisions", Q)

    def __len__(self):
        return self.coeffs.size

    def terms(self):
        return zip(self.coeffs, self.means, self.precisions)

    def conjugate(self) -> "GaussianTermSum":
        return GaussianTermSum(self.coeffs.conj(), self.means.conj(), self.precisions.conj())

    def is_conjugate_closed(self, tol: float = 1e-12) -> bool:
        """Every term has its complex conjugate partner in the sum."""
        conj = self.conjugate()
        used = set()
        for c, m, Q in conj.terms():
            for j, (c2, m2, Q2) in enumerate(self.terms()):
                if j in used:
                    continue
                if (
                    abs(c - c2) <= tol * max(1.0, abs(c))
                    and np.max(np.abs(m - m2)) <= tol * max(1.0, np.max(np.abs(m)))
                    and np.max(np.abs(Q - Q2)) <= tol * max(1.0, np.max(np.abs(Q)))
                ):
                    used.add(j)
                    break
            else:
                return False
        return True

    def __add__(self, other: "GaussianTermSum") -> "GaussianTermSum":
        return GaussianTermSum(
            np.concatenate([self.coeffs, other.coeffs]),
            np.concatenate([self.means, other.means]),
            np.concatenate([self.precisions, other.precisions]),
        )

    def scaled(self, factor: complex) -> "GaussianTermSum":
        return GaussianTermSum(self.coeffs * factor, self.means, self.precisions)


@dataclass(frozen=True)
class CatSpec:
    """``|alpha> -/+ |-alpha>`` with real amplitude ``alpha``."""

    alpha: float
    parity: str = "odd"

    def __post_init__(self):
        if self.parity not in ("odd", "even"):
            raise ValueError("parity must be 'odd' or 'even'")
        if not (math.isfinite(self.alpha) and self.alpha >= 0):
            raise ValueError("alpha must be a finite non-negative real")


def make_gaussian(mean, variances) -> GaussianTermSum:
    """Normalized Gaussian with uncorrelated position/momentum variances."""
    vx, vp = (float(v) for v in variances)
    if vx <= 0 or vp <= 0:
        raise ValueError("variances must be positive")
    c = 1.0 / (2 * math.pi * math.sqrt(vx * vp))
    Q = np.diag([0.5 / vx, 0.5 / vp])
    return GaussianTermSum([c], [np.asarray(mean, dtype=float)], [Q])


def make_gaussian_state(state) -> GaussianTermSum:
    """Wigner function of a single-mode :class:`~qmem.phase_space.GaussianState`."""
    if state.n_modes != 1:
        raise ValueError("only single-mode states have a 2D Wigner function here")
    c = 1.0 / (2 * math.pi * math.sqrt(np.linalg.det(state.cov)))
    return GaussianTermSum([c], [state.mean], [0.5 * np.linalg.inv(state.cov)])


def make_cat(spec: CatSpec) -> GaussianTermSum:
    """Wigner function of a real-amplitude Schroedinger cat state.

    The coherent components sit at ``x = +/- sqrt(2) alpha``; the fringes are
    carried by one conjugate pair centred at ``p = +/- i sqrt(2) alpha``.
    """
    alpha = spec.alpha
    odd = spec.parity == "odd"
    overlap = math.exp(-2 * alpha**2)
    if odd:
        if alpha < 1e-6:
            raise ValueError(
                "odd cat normalization 1 - exp(-2 alpha^2) underflows for alpha < 1e-6; "
                "that limit is the single-photon Fock state"
            )
        norm = -math.expm1(-2 * alpha**2)
    else:
        norm = 1 + overlap
    n2 = 1.0 / (2 * norm)
    x0 = math.sqrt(2) * alpha
    sign = -1.0 if odd else 1.0
    eye = np.eye(2)
    lobe = n2 / math.pi
    fringe = sign * n2 / math.pi * overlap
    return GaussianTermSum(
        [lobe, lobe, fringe, fringe],
        [[x0, 0.0], [-x0, 0.0], [0.0, 1j * x0], [0.0, -1j * x0]],
        [eye, eye, eye, eye],
    )


def _terms_at(W: GaussianTermSum, x, p) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    v = np.stack(np.broadcast_arrays(x, p), axis=-1)[..., None, :]  # (..., 1, 2)
    d = v - W.means
    quad = np.einsum("...ki,kij,...kj->...k", d, W.precisions, d)
    return W.coeffs * np.exp(-quad)


def evaluate(W: GaussianTermSum, x, p):
    """Real part of the term sum at ``(x, p)``; broadcasts over arrays."""
    out = _terms_at(W, x, p).sum(axis=-1).real
    return float(out) if out.ndim == 0 else out


def imaginary_residue(W: GaussianTermSum, x, p):
    """Imaginary part of the unprojected sum; vanishes for conjugate-closed sums."""
    return np.abs(_terms_at(W, x, p).sum(axis=-1).imag)


def affine_pullback(W: GaussianTermSum, A, b=(0.0, 0.0)) -> GaussianTermSum:
    """``W'(v) = W(A v + b)``, term by term."""
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    if A.shape != (2, 2) or b.shape != (2,):
        raise ValueError("A must be 2x2 and b a 2-vector")
    if abs(np.linalg.det(A)) < 1e-14:
        raise ValueError("affine map is singular")
    Ainv = np.linalg.inv(A)
    means = (W.means - b) @ Ainv.T
    precisions = np.einsum("ji,kjl,lm->kim", A, W.precisions, A)
    return GaussianTermSum(W.coeffs, means, precisions)


def gaussian_smooth(W: GaussianTermSum, axis: str, width: float) -> GaussianTermSum:
    """Convolve with a normalized 1D Gaussian of standard deviation ``width``."""
    if width < 0:
        raise ValueError("smoothing width must be non-negative")
    a = AXES[axis]
    if width == 0:
        return W
    Q = W.precisions
    stretch = 1.0 + 2.0 * width**2 * Q[:, a, a]
    D = np.zeros((2, 2))
    D[a, a] = 2.0 * width**2
    new_Q = np.linalg.inv(np.linalg.inv(Q) + D)
    new_Q = 0.5 * (new_Q + new_Q.transpose(0, 2, 1))
    return GaussianTermSum(W.coeffs / np.sqrt(stretch), W.means, new_Q)


def total_integral(W: GaussianTermSum) -> float:
    return float(np.real(np.sum(W.coeffs * math.pi / _sqrt_det(W.precisions))))


def _cross_integrals(A: GaussianTermSum, B: GaussianTermSum) -> complex:
    """``sum_jk integral a_j(v) b_k(v) dv`` for the unprojected terms."""
    Q = A.precisions[:, None] + B.precisions[None, :]
    bA = np.einsum("kij,kj->ki", A.precisions, A.means)
    bB = np.einsum("kij,kj->ki", B.precisions, B.means)
    lin = bA[:, None] + bB[None, :]
    cA = np.einsum("ki,ki->k", A.means, bA)
    cB = np.einsum("ki,ki->k", B.means, bB)
    sol = np.linalg.solve(Q, lin[..., None])[..., 0]
    expo = np.einsum("jki,jki->jk", lin, sol) - cA[:, None] - cB[None, :]
    vals = np.outer(A.coeffs, B.coeffs) * math.pi / _sqrt_det(Q) * np.exp(expo)
    return complex(vals.sum())


def overlap_integral(W1: GaussianTermSum, W2: GaussianTermSum) -> float:
    """``integral W1 W2 dx dp`` with both real parts taken."""
    # Re(a) Re(b) = Re(a b + a conj(b)) / 2
    return 0.5 * (_cross_integrals(W1, W2) + _cross_integrals(W1, W2.conjugate())).real


def purity(W: GaussianTermSum) -> float:
    return 2 * math.pi * overlap_integral(W, W)


def overlap_fidelity(W_target: GaussianTermSum, W_mem: GaussianTermSum) -> float:
    """``2 pi * integral W_target W_mem``, clamped to ``[0, 1 + 1e-9]``."""
    for name, W in (("target", W_target), ("memory", W_mem)):
        norm = total_integral(W)
        if abs(norm - 1) > 1e-6:
            warnings.warn(f"{name} Wigner function integrates to {norm:.9g}, not 1", stacklevel=2)
    F = 2 * math.pi * overlap_integral(W_target, W_mem)
    if F < -1e-9 or F > 1 + 1e-9:
        warnings.warn(f"overlap fidelity {F:.12g} outside [0, 1]; clamped", stacklevel=2)
    return min(max(F, 0.0), 1.0 + 1e-9)


@dataclass(frozen=True)
class AtomicGaussian:
    """Initial atomic state: only its position spread and centre reach the memory."""

    var_x: float = 0.5
    x0: float = 0.0

    def __post_init__(self):
        if self.var_x < 0:
            raise ValueError("var_x must be non-negative")


def _swap_pullback(W_in: GaussianTermSum, t: float, x0: float) -> GaussianTermSum:
    # (x, p) -> W_in(-t p, (x - x0)/t)
    if t == 0:
        raise ValueError("t must be non-zero")
    return affine_pullback(W_in, [[0.0, -t], [1.0 / t, 0.0]], [0.0, -x0 / t])


def target_wigner(W_in: GaussianTermSum, t: float = 1.0, x0: float = 0.0) -> GaussianTermSum:
    """Ideally stored state ``W_in(-t p, (x - x0)/t)``."""
    return _swap_pullback(W_in, t, x0)


def memory_output(
    scheme: str,
    W_in: GaussianTermSum,
    atom: AtomicGaussian = AtomicGaussian(),
    t: float = 1.0,
    sigma_eta: float = 0.0,
) -> GaussianTermSum:
    """Outcome-averaged Wigner function of the atomic memory.

    ``single_pass_feedback``: the ideal image smoothed along x by the atomic
    position spread and along p by ``sigma_eta / t``.
    ``double_pass``: strengths ``(t, 1/t)``, smoothing along x only by the
    atomic spread.
    ``double_pass_feedback``: strengths ``(t, 1/t)``, smoothing along x by
    ``t * sigma_eta``.
    ``triple_pass``: strengths ``(t, 1/t, t)``, no smoothing.
    """
    if sigma_eta < 0:
        raise ValueError("sigma_eta must be non-negative")
    sx = math.sqrt(atom.var_x)
    if scheme == "single_pass_feedback":
        V = _swap_pullback(W_in, t, atom.x0)
        return gaussian_smooth(gaussian_smooth(V, "x", sx), "p", sigma_eta / abs(t))
    if scheme == "double_pass":
        return gaussian_smooth(_swap_pullback(W_in, t, atom.x0), "x", sx)
    if scheme == "double_pass_feedback":
        return gaussian_smooth(_swap_pullback(W_in, t, 0.0), "x", abs(t) * sigma_eta)
    if scheme == "triple_pass":
        return _swap_pullback(W_in, t, 0.0)
    raise ValueError(f"unknown scheme {scheme!r}")


AMPLITUDE_CONVENTIONS = ("quadrature", "coherent")


def cat_amplitude(alpha2: float, convention: str = "quadrature") -> float:
    """Coherent amplitude of a cat whose size on the plotted axis is ``alpha2``.

    ``"quadrature"``: ``alpha2`` is the squared lobe position, lobes at
    ``x = +/- sqrt(alpha2)``.  ``"coherent"``: ``alpha2`` is the mean photon
    number of each coherent component, lobes at ``x = +/- sqrt(2 alpha2)``.
    """
    if alpha2 < 0:
        raise ValueError("alpha2 must be non-negative")
    if convention == "quadrature":
        return math.sqrt(alpha2 / 2)
    if convention == "coherent":
        return math.sqrt(alpha2)
    raise ValueError(f"convention must be one of {AMPLITUDE_CONVENTIONS}")


def cat_fidelity(
    alpha2: float,
    var_xa: float,
    sigma_eta: float = 0.0,
    t: float = 1.0,
    parity: str = "odd",
    scheme: str = "single_pass_feedback",
    convention: str = "quadrature",
) -> float:
    """Storage fidelity of a real cat state of size ``alpha2``."""
    W_in = make_cat(CatSpec(cat_amplitude(alpha2, convention), parity))
    atom = AtomicGaussian(var_xa)
    x0 = atom.x0 if scheme in ("single_pass_feedback", "double_pass") else 0.0
    target = target_wigner(W_in, t, x0)
    return overlap_fidelity(target, memory_output(scheme, W_in, atom, t, sigma_eta))


def cat_fidelity_surface(
    alpha2_values,
    var_values,
    sigma_eta: float = 0.0,
    t: float = 1.0,
    convention: str = "quadrature",
) -> np.ndarray:
    """Fidelity grid with rows indexed by ``alpha2`` and columns by variance."""
    return np.array(
        [
            [cat_fidelity(a2, v, sigma_eta, t, convention=convention) for v in var_values]
            for a2 in alpha2_values
        ]
    )


def classical_limit_crossing(
    var_xa: float = 0.5,
    level: float = 0.5,
    bracket=(0.1, 5.0),
    sigma_eta: float = 0.0,
    t: float = 1.0,
    convention: str = "quadrature",
) -> float:
    """``alpha2`` at which the odd-cat fidelity falls to ``level``."""

    def excess(a2):
        return cat_fidelity(a2, var_xa, sigma_eta, t, convention=convention) - level

    lo, hi = bracket
    if excess(lo) * excess(hi) > 0:
        raise ValueError(f"fidelity does not cross {level} inside alpha2 in {bracket}")
    return brentq(excess, lo, hi, xtol=1e-12)
