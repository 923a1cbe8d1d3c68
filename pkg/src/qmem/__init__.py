"""Phase-space toolkit for light-to-atom quantum memories."""
from .phase_space import (
    ATOM,
    LIGHT,
    GaussianState,
    compose,
    is_complete_memory_map,
    is_symplectic,
    satisfies_uncertainty,
    symplectic_form,
    transform_state,
)
from .quadratic_dynamics import BilinearHamiltonian, IdealCoupling, evolve, ideal_map
from .protocols import HomodyneModel, ProtocolSpec, analytic_fidelity, run_protocol

__version__ = "0.1.0"
