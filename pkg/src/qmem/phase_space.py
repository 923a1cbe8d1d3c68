"""Canonical quadrature algebra for few-mode bosonic systems.

Every vector in this package uses the ordering ``(X_A, P_A, X_L, P_L)``:
atomic mode first, light mode second, position before momentum.  Units are
hbar = 1 with ``[X, P] = i``, so vacuum and coherent states carry variance
1/2 in each quadrature.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

#: Mode indices in the global ordering.
ATOM, LIGHT = 0, 1
#: Quadrature offsets inside a mode block.
X, P = 0, 1
#: Labels of the four quadratures, in storage order.
QUADRATURE_LABELS = ("X_A", "P_A", "X_L", "P_L")

VACUUM_VARIANCE = 0.5
SYMPLECTIC_TOL = 1e-10
UNCERTAINTY_TOL = 1e-9


class DimensionError(ValueError):
    """Raised when array shapes do not describe a valid phase space."""


class UncertaintyViolation(ValueError):
    """Raised when a covariance matrix breaks ``cov + (i/2) Omega >= 0``."""


def quadrature_index(mode: int, quadrature: str | int) -> int:
    """Position of ``(mode, quadrature)`` in a phase-space vector.

    ``quadrature`` may be ``"X"``/``"P"`` or the integer offsets :data:`X`/:data:`P`.
    """
    if isinstance(quadrature, str):
        try:
            quadrature = {"X": X, "P": P}[quadrature.upper()]
        except KeyError:
            raise ValueError(f"unknown quadrature {quadrature!r}") from None
    if quadrature not in (X, P) or mode < 0:
        raise ValueError(f"invalid mode/quadrature ({mode}, {quadrature})")
    return 2 * mode + quadrature


def symplectic_form(n_modes: int) -> np.ndarray:
    """Block-diagonal canonical form with 2x2 blocks ``[[0, 1], [-1, 0]]``."""
    if n_modes < 1:
        raise ValueError("n_modes must be >= 1")
    return np.kron(np.eye(n_modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def _n_modes(dim: int) -> int:
    if dim % 2:
        raise DimensionError(f"phase-space dimension must be even, got {dim}")
    return dim // 2


def _square(M) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {M.shape}")
    _n_modes(M.shape[0])
    return M


def symplectic_residual(M) -> float:
    """Max-norm of ``M Omega M^T - Omega``."""
    M = _square(M)
    omega = symplectic_form(M.shape[0] // 2)
    return float(np.max(np.abs(M @ omega @ M.T - omega)))


def is_symplectic(M, tol: float = SYMPLECTIC_TOL) -> bool:
    return symplectic_residual(M) <= tol


def compose(M2, M1) -> np.ndarray:
    """Map that applies ``M1`` first and then ``M2``."""
    M1, M2 = _square(M1), _square(M2)
    if M1.shape != M2.shape:
        raise DimensionError(f"cannot compose {M2.shape} with {M1.shape}")
    return M2 @ M1


def is_complete_memory_map(M, tol: float = SYMPLECTIC_TOL) -> bool:
    """True when each subsystem's quadratures land entirely on the other's.

    Both 2x2 diagonal blocks must vanish (max-norm <= ``tol``) and the map must
    be symplectic.
    """
    M = _square(M)
    if M.shape != (4, 4):
        raise DimensionError("memory maps act on the two-mode space (4x4)")
    diag_blocks = max(np.max(np.abs(M[:2, :2])), np.max(np.abs(M[2:, 2:])))
    return bool(diag_blocks <= tol and is_symplectic(M, tol))


def uncertainty_eigenvalues(cov) -> np.ndarray:
    """Eigenvalues of the Hermitian matrix ``cov + (i/2) Omega``."""
    cov = _square(cov)
    omega = symplectic_form(cov.shape[0] // 2)
    return np.linalg.eigvalsh(cov + 0.5j * omega)


def satisfies_uncertainty(cov, tol: float = UNCERTAINTY_TOL) -> bool:
    return bool(np.min(uncertainty_eigenvalues(cov)) >= -tol)


@dataclass(frozen=True)
class GaussianState:
    """First and second moments of an n-mode Gaussian state.

    ``cov`` holds symmetrized covariances, ``<{dy_i, dy_j}>/2``.
    """

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.array(self.mean, dtype=float).reshape(-1)
        cov = np.array(self.cov, dtype=float)
        if cov.shape != (mean.size, mean.size):
            raise DimensionError(
                f"mean of length {mean.size} does not match cov of shape {cov.shape}"
            )
        _n_modes(mean.size)
        if not np.all(np.isfinite(mean)) or not np.all(np.isfinite(cov)):
            raise ValueError("Gaussian state moments must be finite")
        scale = max(1.0, float(np.max(np.abs(cov))))
        if np.max(np.abs(cov - cov.T)) > 1e-12 * scale:
            raise ValueError("covariance matrix is not symmetric")
        cov = 0.5 * (cov + cov.T)
        if not satisfies_uncertainty(cov, UNCERTAINTY_TOL * scale):
            raise UncertaintyViolation(
                f"covariance violates the uncertainty relation "
                f"(min eigenvalue {np.min(uncertainty_eigenvalues(cov)):.3e})"
            )
        mean.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def n_modes(self) -> int:
        return self.mean.size // 2

    def variance(self, mode: int, quadrature: str | int) -> float:
        k = quadrature_index(mode, quadrature)
        return float(self.cov[k, k])

    def reduce(self, modes) -> "GaussianState":
        """Marginal state of the listed modes (partial trace)."""
        idx = [quadrature_index(m, q) for m in modes for q in (X, P)]
        return GaussianState(self.mean[idx], self.cov[np.ix_(idx, idx)])

    @classmethod
    def vacuum(cls, n_modes: int = 1) -> "GaussianState":
        return cls(np.zeros(2 * n_modes), VACUUM_VARIANCE * np.eye(2 * n_modes))

    @classmethod
    def coherent(cls, x: float = 0.0, p: float = 0.0) -> "GaussianState":
        return cls([x, p], VACUUM_VARIANCE * np.eye(2))

    @classmethod
    def squeezed(cls, var_x: float, x: float = 0.0, p: float = 0.0) -> "GaussianState":
        """Minimum-uncertainty single-mode state with position variance ``var_x``."""
        if var_x <= 0:
            raise ValueError("var_x must be positive")
        return cls([x, p], np.diag([var_x, 0.25 / var_x]))


def tensor(*states: GaussianState) -> GaussianState:
    """Product state; the first argument becomes mode 0."""
    mean = np.concatenate([s.mean for s in states])
    blocks = [s.cov for s in states]
    dim = mean.size
    cov = np.zeros((dim, dim))
    i = 0
    for b in blocks:
        cov[i : i + b.shape[0], i : i + b.shape[0]] = b
        i += b.shape[0]
    return GaussianState(mean, cov)


def transform_state(M, state: GaussianState, shift=None) -> GaussianState:
    """Apply ``y -> M y + shift`` to the moments of ``state``."""
    M = _square(M)
    if M.shape[0] != state.mean.size:
        raise DimensionError(
            f"map of size {M.shape[0]} cannot act on a {state.n_modes}-mode state"
        )
    mean = M @ state.mean
    if shift is not None:
        shift = np.asarray(shift, dtype=float).reshape(-1)
        if shift.size != mean.size:
            raise DimensionError("shift length does not match the state")
        mean = mean + shift
    return GaussianState(mean, M @ state.cov @ M.T)
