"""Effective couplings of the off-resonant Faraday and Raman interfaces.

Both reduce, after adiabatic elimination of the excited levels and the
Holstein-Primakoff replacement of the transverse spin components, to a
:class:`~qmem.quadratic_dynamics.BilinearHamiltonian`.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from ..quadratic_dynamics import BilinearHamiltonian


class ValidityWarning(UserWarning):
    """An approximation behind an effective Hamiltonian is being stretched."""


ADIABATIC_RATIO = 0.1
HP_MIN_FACTOR = 0.9


@dataclass(frozen=True)
class FaradayParams:
    g: float
    delta: float
    alpha_amp: float
    n_atoms: float
    phi: float = 0.0

    def __post_init__(self):
        if self.delta == 0:
            raise ValueError("detuning must be non-zero")
        if self.n_atoms <= 0:
            raise ValueError("n_atoms must be positive")


@dataclass(frozen=True)
class RamanParams:
    g: float
    g_prime: float
    delta: float
    delta_prime: float
    alpha_amp: float
    n_atoms: float

    def __post_init__(self):
        if self.delta == 0 or self.delta_prime == 0:
            raise ValueError("detunings must be non-zero")
        if self.n_atoms <= 0:
            raise ValueError("n_atoms must be positive")


def faraday_coupling(fp: FaradayParams) -> float:
    """Signed ``kappa = g^2 |alpha| sqrt(N_A) / Delta``; ``H_int = -kappa P_L P_A``."""
    ratio = abs(fp.g * fp.alpha_amp / fp.delta)
    if ratio > ADIABATIC_RATIO:
        warnings.warn(
            f"g|alpha|/|Delta| = {ratio:.3g} exceeds {ADIABATIC_RATIO}; "
            "adiabatic elimination of the excited levels is questionable",
            ValidityWarning,
            stacklevel=2,
        )
    return fp.g**2 * fp.alpha_amp * math.sqrt(fp.n_atoms) / fp.delta


def faraday_hamiltonian(fp: FaradayParams) -> BilinearHamiltonian:
    return BilinearHamiltonian(s=-faraday_coupling(fp))


def hp_commutator_correction(n_excitations: float, n_atoms: float) -> float:
    """Factor ``1 - 2 n / N_A`` multiplying ``i`` in ``[X_A, P_A]``."""
    if n_atoms <= 0:
        raise ValueError("n_atoms must be positive")
    if n_excitations < 0:
        raise ValueError("n_excitations must be non-negative")
    factor = 1.0 - 2.0 * n_excitations / n_atoms
    if factor < HP_MIN_FACTOR:
        warnings.warn(
            f"commutator reduced to {factor:.3g} i; the oscillator picture of the spin breaks down",
            ValidityWarning,
            stacklevel=2,
        )
    return factor


def raman_coefficients(rp: RamanParams) -> tuple[float, float]:
    """Prefactors of ``S_z sigma_z`` and ``S_x sigma_x + S_y sigma_y``."""
    for name, g, d in (("", rp.g, rp.delta), ("'", rp.g_prime, rp.delta_prime)):
        if g and abs(rp.alpha_amp) > ADIABATIC_RATIO * abs(d / g):
            warnings.warn(
                f"|alpha| is not small against |Delta{name}/g{name}|; the control field "
                "is no longer off-resonant",
                ValidityWarning,
                stacklevel=2,
            )
    a = rp.g**2 / rp.delta
    b = rp.g_prime**2 / rp.delta_prime
    return -2.0 * (a + b), 2.0 * (a - b)


def light_shifts_cancel(rp: RamanParams, rtol: float = 1e-9) -> bool:
    """Whether ``g'^2/Delta' = -g^2/Delta``."""
    a = rp.g**2 / rp.delta
    b = rp.g_prime**2 / rp.delta_prime
    return math.isclose(b, -a, rel_tol=rtol, abs_tol=0.0)


def raman_hamiltonian(rp: RamanParams) -> BilinearHamiltonian:
    """Quadrature form of the Raman interaction with the control held classical.

    The exchange term becomes ``c (X_A X_L + P_A P_L)`` with
    ``c = beamsplitter_coeff * |alpha| sqrt(N_A) / 2``.  An uncancelled
    ``S_z sigma_z`` term is kept as the Stark shifts it produces at quadratic
    order: ``omega_L = -F N_A / 2`` and ``omega_A = -F |alpha|^2 / 2``.
    """
    faraday, exchange = raman_coefficients(rp)
    c = exchange * rp.alpha_amp * math.sqrt(rp.n_atoms) / 2.0
    return BilinearHamiltonian(
        p=c,
        s=c,
        omega_A=-faraday * rp.alpha_amp**2 / 2.0,
        omega_L=-faraday * rp.n_atoms / 2.0,
    )


def raman_pulse_area(rp: RamanParams, amplitude_profile, dt=None, times=None):
    """Swap area of a sampled control envelope ``|alpha(t)|``.

    The area is ``(g^2/Delta - g'^2/Delta') sqrt(N_A) * integral |alpha| dt``,
    which is ``(2 g^2 sqrt(N_A) / Delta) * integral |alpha| dt`` at the
    light-shift cancellation point.  Returns ``(area, scale)`` where ``scale``
    rescales the profile to an area of exactly pi/2.
    """
    profile = np.asarray(amplitude_profile, dtype=float)
    if profile.size < 2:
        raise ValueError("amplitude profile needs at least two samples")
    if np.any(profile < 0):
        raise ValueError("amplitude profile must be non-negative")
    if times is not None:
        times = np.asarray(times, dtype=float)
        if times.shape != profile.shape:
            raise ValueError("times and profile lengths differ")
        integral = np.trapezoid(profile, times)
    elif dt is not None:
        integral = np.trapezoid(profile, dx=dt)
    else:
        raise ValueError("give either dt or times")
    rate = (rp.g**2 / rp.delta - rp.g_prime**2 / rp.delta_prime) * math.sqrt(rp.n_atoms)
    area = rate * integral
    scale = (math.pi / 2) / area if area != 0 else math.inf
    return float(area), float(scale)
