"""Symplectic maps generated by bilinear two-mode Hamiltonians.

Heisenberg equations use ``dA/dt = i[H, A]``.  Writing a quadratic
Hamiltonian as ``H = y^T K y / 2`` with symmetric ``K`` gives the linear flow
``dy/dt = Omega K y``; :func:`generator_matrix` returns ``Omega K``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .phase_space import symplectic_form


@dataclass(frozen=True)
class BilinearHamiltonian:
    """``omega_A/2 (X_A^2+P_A^2) + omega_L/2 (X_L^2+P_L^2) + H_int`` with
    ``H_int = p X_A X_L + q X_A P_L + r P_A X_L + s P_A P_L``."""

    p: float = 0.0
    q: float = 0.0
    r: float = 0.0
    s: float = 0.0
    omega_A: float = 0.0
    omega_L: float = 0.0

    def __post_init__(self):
        for name in ("p", "q", "r", "s", "omega_A", "omega_L"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    @classmethod
    def ideal(cls, xi: float, alpha: float = 1.0) -> "BilinearHamiltonian":
        """``alpha * [sin(xi)(X_A X_L + P_A P_L) + cos(xi)(P_A X_L - X_A P_L)]``."""
        sx, cx = alpha * math.sin(xi), alpha * math.cos(xi)
        return cls(p=sx, q=-cx, r=cx, s=sx)

    def free_part(self) -> "BilinearHamiltonian":
        return BilinearHamiltonian(omega_A=self.omega_A, omega_L=self.omega_L)

    def interaction_part(self) -> "BilinearHamiltonian":
        return BilinearHamiltonian(p=self.p, q=self.q, r=self.r, s=self.s)

    def hessian(self) -> np.ndarray:
        """Symmetric ``K`` with ``H = y^T K y / 2``."""
        coupling = np.array([[self.p, self.q], [self.r, self.s]])
        K = np.zeros((4, 4))
        K[:2, :2] = self.omega_A * np.eye(2)
        K[2:, 2:] = self.omega_L * np.eye(2)
        K[:2, 2:] = coupling
        K[2:, :2] = coupling.T
        return K


@dataclass(frozen=True)
class IdealCoupling:
    """Coupling ``alpha(t) H_1(xi)`` summarized by its accumulated area."""

    xi: float
    alpha_area: float


def generator_matrix(h: BilinearHamiltonian) -> np.ndarray:
    return symplectic_form(2) @ h.hessian()


def evolve(h: BilinearHamiltonian, t: float) -> np.ndarray:
    """Heisenberg map ``y(t) = exp(G t) y(0)`` for a time-independent ``h``."""
    return expm(generator_matrix(h) * t)


def swap_generator(xi: float) -> np.ndarray:
    """Generator of ``H_1(xi)``; squares to minus the identity.

    Block form ``[[0, R^T], [-R, 0]]`` with ``R`` the rotation by ``xi``.
    """
    c, s = math.cos(xi), math.sin(xi)
    R = np.array([[c, -s], [s, c]])
    C = np.zeros((4, 4))
    C[:2, 2:] = R.T
    C[2:, :2] = -R
    return C


def ideal_map(c: IdealCoupling) -> np.ndarray:
    """Closed form ``cos(Phi) 1 + sin(Phi) C`` of the resonant swap dynamics."""
    phi = c.alpha_area
    return math.cos(phi) * np.eye(4) + math.sin(phi) * swap_generator(c.xi)


def bch_series_map(c: IdealCoupling, n_terms: int) -> np.ndarray:
    """Partial sum ``sum_{k < n_terms} Phi^k C^k / k!`` of the commutator series."""
    if n_terms < 1:
        raise ValueError("n_terms must be >= 1")
    C = swap_generator(c.xi)
    term = np.eye(4)
    total = term.copy()
    for k in range(1, n_terms):
        term = term @ C * (c.alpha_area / k)
        total = total + term
    return total


def bch_remainder_bound(phi: float, n_terms: int) -> float:
    """Max-norm bound ``|Phi|^n / n! * e^|Phi|`` on the truncated series."""
    phi = abs(phi)
    return phi**n_terms / math.factorial(n_terms) * math.exp(phi)


def qnd_commutation_check(h: BilinearHamiltonian, tol: float = 1e-12) -> bool:
    """Whether the free and interaction generators commute."""
    G0 = generator_matrix(h.free_part())
    G1 = generator_matrix(h.interaction_part())
    return bool(np.max(np.abs(G0 @ G1 - G1 @ G0)) <= tol)
