"""Microscopic light-atom interfaces mapped onto bilinear couplings."""
from .couplings import (
    FaradayParams,
    RamanParams,
    ValidityWarning,
    faraday_coupling,
    faraday_hamiltonian,
    hp_commutator_correction,
    light_shifts_cancel,
    raman_coefficients,
    raman_hamiltonian,
    raman_pulse_area,
)
from .eit import (
    EITParams,
    IntegrationError,
    IntegratorOptions,
    Ramp,
    ThreeModeTrajectory,
    dark_state_loss_integrals,
    duration_for_rate,
    eit_bright_params,
    eit_generator,
    eit_mixing_angle,
    eit_off_resonant_hamiltonian,
    eit_ramp_sweep,
    eit_simulate_transfer,
    loglog_slope,
    off_resonant_write_loss,
)
