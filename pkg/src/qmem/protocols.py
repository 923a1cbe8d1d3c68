"""Light-to-atom memory schemes as Gaussian-state pipelines.

Four schemes are supported, all built from the QND shear ``P_A P_L`` and its
conjugate ``X_A X_L``:

``single_pass_feedback``
    one shear of strength ``t``, homodyne detection of ``X_L`` and a momentum
    kick ``-x/t`` on the atoms;
``double_pass``
    shear ``t`` followed by ``X_A X_L`` of strength ``t'``, no measurement;
``double_pass_feedback``
    the double pass plus detection of ``P_L`` and a position kick ``+t p``;
``triple_pass``
    shear, conjugate shear, shear.  At ``t = t' = t'' = 1`` this is the ideal
    swap.

Outcome averaging is done in closed form: with linear feedback the averaged
memory state is the image of an affine map on ``(y, detector noise)``.  The
Monte-Carlo sampler below exists as an independent check of that formula.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .phase_space import (
    ATOM,
    LIGHT,
    P,
    X,
    GaussianState,
    compose,
    quadrature_index,
    tensor,
    transform_state,
)

SCHEMES = ("single_pass_feedback", "double_pass", "double_pass_feedback", "triple_pass")
N_PASSES = {"single_pass_feedback": 1, "double_pass": 2, "double_pass_feedback": 2, "triple_pass": 3}

#: Stand-in for an infinitely squeezed atomic position.
SQUEEZING_FLOOR = 1e-12


def single_pass_map(t: float) -> np.ndarray:
    """Heisenberg map of ``H = P_A P_L`` acting for time ``t``."""
    return np.array(
        [
            [1.0, 0.0, 0.0, t],
            [0.0, 1.0, 0.0, 0.0],
            [0.0, t, 1.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ]
    )


def conjugate_shear_map(t_prime: float) -> np.ndarray:
    """Heisenberg map of ``H = X_A X_L`` acting for time ``t_prime``."""
    return np.array(
        [
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, -t_prime, 0.0],
            [0.0, 0.0, 1.0, 0.0],
            [-t_prime, 0.0, 0.0, 1.0],
        ]
    )


def double_pass_map(t: float, t_prime: float) -> np.ndarray:
    return compose(conjugate_shear_map(t_prime), single_pass_map(t))


def triple_pass_map(t: float, t_prime: float, t_dprime: float) -> np.ndarray:
    return compose(single_pass_map(t_dprime), double_pass_map(t, t_prime))


@dataclass(frozen=True)
class HomodyneModel:
    """Gaussian-smeared quadrature measurement.

    ``sigma_eta`` is the standard deviation of the detector noise in
    quadrature units; zero is a projective measurement and ``inf`` carries no
    information.
    """

    mode: int = LIGHT
    quadrature: str = "X"
    sigma_eta: float = 0.0

    def __post_init__(self):
        if not self.sigma_eta >= 0:
            raise ValueError("sigma_eta must be >= 0")
        quadrature_index(self.mode, self.quadrature)

    @property
    def index(self) -> int:
        return quadrature_index(self.mode, self.quadrature)


def _default_homodyne(scheme: str) -> HomodyneModel | None:
    if scheme == "single_pass_feedback":
        return HomodyneModel(LIGHT, "X")
    if scheme == "double_pass_feedback":
        return HomodyneModel(LIGHT, "P")
    return None


@dataclass(frozen=True)
class ProtocolSpec:
    scheme: str
    pass_strengths: tuple = (1.0,)
    homodyne: HomodyneModel | None = None
    feedback_gain: float | None = None
    x0: float = field(default=0.0, repr=False)

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        strengths = tuple(float(v) for v in self.pass_strengths)
        if len(strengths) != N_PASSES[self.scheme]:
            raise ValueError(
                f"{self.scheme} takes {N_PASSES[self.scheme]} pass strengths, got {len(strengths)}"
            )
        object.__setattr__(self, "pass_strengths", strengths)
        if self.measured:
            if self.homodyne is None:
                object.__setattr__(self, "homodyne", _default_homodyne(self.scheme))
            if self.homodyne.mode != LIGHT:
                raise ValueError("feedback schemes measure the light mode")
            if self.feedback_gain is None:
                t = strengths[0]
                if t == 0:
                    raise ValueError("default feedback gain needs t != 0")
                gain = -1.0 / t if self.scheme == "single_pass_feedback" else t
                object.__setattr__(self, "feedback_gain", gain)
        elif self.homodyne is not None or self.feedback_gain is not None:
            raise ValueError(f"{self.scheme} has no measurement or feedback")

    @property
    def measured(self) -> bool:
        return self.scheme.endswith("_feedback")

    @property
    def feedback_quadrature(self) -> str:
        """Atomic quadrature that receives the feedback kick."""
        return "P" if self.scheme == "single_pass_feedback" else "X"

    def composite_map(self) -> np.ndarray:
        s = self.pass_strengths
        if self.scheme == "single_pass_feedback":
            return single_pass_map(s[0])
        if self.scheme in ("double_pass", "double_pass_feedback"):
            return double_pass_map(*s)
        return triple_pass_map(*s)


@dataclass(frozen=True)
class ProtocolResult:
    memory_state: GaussianState
    outcome_mean: float | None
    outcome_variance: float | None
    composite_map: np.ndarray


class DegenerateMeasurement(ValueError):
    pass


def _condition_moments(mean, cov, k, noise_var, outcomes):
    """Gaussian conditioning on ``y_k + noise = outcome``; vectorized in outcomes."""
    total = cov[k, k] + noise_var
    if not total > 0:
        raise DegenerateMeasurement("measured quadrature has zero total variance")
    gain = cov[:, k] / total
    outcomes = np.asarray(outcomes, dtype=float)
    means = mean + np.multiply.outer(outcomes - mean[k], gain)
    return means, cov - np.outer(gain, cov[k, :]), total


def _surviving(n_modes: int, measured_mode: int) -> list[int]:
    keep = [m for m in range(n_modes) if m != measured_mode]
    return [quadrature_index(m, q) for m in keep for q in (X, P)]


def homodyne_condition(state: GaussianState, model: HomodyneModel, outcome: float):
    """Outcome density and post-measurement state of the unmeasured modes.

    Returns ``(density, conditional_state)``.  The measured mode is traced out.
    """
    k = model.index
    keep = _surviving(state.n_modes, model.mode)
    if math.isinf(model.sigma_eta):
        return 0.0, state.reduce([m for m in range(state.n_modes) if m != model.mode])
    means, cov, total = _condition_moments(
        state.mean, state.cov, k, model.sigma_eta**2, outcome
    )
    density = math.exp(-0.5 * (outcome - state.mean[k]) ** 2 / total) / math.sqrt(
        2 * math.pi * total
    )
    return density, GaussianState(means[keep], cov[np.ix_(keep, keep)])


def displace(state: GaussianState, mode: int, quadrature: str, amount: float) -> GaussianState:
    shift = np.zeros(state.mean.size)
    shift[quadrature_index(mode, quadrature)] = amount
    return GaussianState(state.mean + shift, state.cov)


def _pre_measurement(spec: ProtocolSpec, light_in: GaussianState, atom_in: GaussianState):
    if light_in.n_modes != 1 or atom_in.n_modes != 1:
        raise ValueError("light and atom inputs must be single-mode states")
    M = spec.composite_map()
    return M, transform_state(M, tensor(atom_in, light_in))


def _averaged_memory(spec: ProtocolSpec, joint: GaussianState) -> GaussianState:
    # y_mem = y_A + g e_j (y_k + n): linear in the extended vector (y, n).
    k = spec.homodyne.index
    j = quadrature_index(ATOM, spec.feedback_quadrature)
    L = np.zeros((2, 5))
    L[:, :2] = np.eye(2)
    L[j, k] += spec.feedback_gain
    L[j, 4] = spec.feedback_gain
    ext_mean = np.append(joint.mean, 0.0)
    ext_cov = np.zeros((5, 5))
    ext_cov[:4, :4] = joint.cov
    ext_cov[4, 4] = spec.homodyne.sigma_eta**2
    return GaussianState(L @ ext_mean, L @ ext_cov @ L.T)


def run_protocol(
    spec: ProtocolSpec,
    light_in: GaussianState,
    atom_in: GaussianState,
    outcome: float | str = "average",
) -> ProtocolResult:
    """Run a scheme and return the stored atomic state.

    ``outcome`` is either a measured value (conditional memory state after
    feedback) or ``"average"`` for the outcome-averaged state.
    """
    M, joint = _pre_measurement(spec, light_in, atom_in)
    if not spec.measured:
        return ProtocolResult(joint.reduce([ATOM]), None, None, M)

    model = spec.homodyne
    if math.isinf(model.sigma_eta):
        raise DegenerateMeasurement("feedback on an infinitely noisy outcome is undefined")
    k = model.index
    out_mean = float(joint.mean[k])
    out_var = float(joint.cov[k, k] + model.sigma_eta**2)
    if not out_var > 0:
        raise DegenerateMeasurement("measured quadrature has zero total variance")
    if isinstance(outcome, str):
        if outcome != "average":
            raise ValueError(f"unknown outcome policy {outcome!r}")
        memory = _averaged_memory(spec, joint)
    else:
        _, conditional = homodyne_condition(joint, model, float(outcome))
        memory = displace(conditional, 0, spec.feedback_quadrature, spec.feedback_gain * outcome)
    return ProtocolResult(memory, out_mean, out_var, M)


def sample_conditional_memories(
    spec: ProtocolSpec,
    light_in: GaussianState,
    atom_in: GaussianState,
    n_samples: int,
    rng: np.random.Generator,
):
    """Draw homodyne outcomes and return the post-feedback memory moments.

    Returns ``(outcomes, means, cov)``: one memory mean per sample and the
    outcome-independent conditional covariance.
    """
    if not spec.measured:
        raise ValueError(f"{spec.scheme} has no measurement to sample")
    _, joint = _pre_measurement(spec, light_in, atom_in)
    k = spec.homodyne.index
    noise_var = spec.homodyne.sigma_eta**2
    sd = math.sqrt(joint.cov[k, k] + noise_var)
    outcomes = joint.mean[k] + sd * rng.standard_normal(n_samples)
    means, cov, _ = _condition_moments(joint.mean, joint.cov, k, noise_var, outcomes)
    keep = _surviving(2, LIGHT)
    means = means[:, keep]
    j = quadrature_index(ATOM, spec.feedback_quadrature)
    means[:, j] += spec.feedback_gain * outcomes
    return outcomes, means, cov[np.ix_(keep, keep)]


def target_state(spec: ProtocolSpec, light_in: GaussianState) -> GaussianState:
    """Ideal stored state ``X_A = x0 + t P_L``, ``P_A = -X_L / t``.

    ``x0`` only enters the schemes whose memory keeps the initial atomic
    position (single pass and feedback-free double pass).
    """
    t = spec.pass_strengths[0]
    if t == 0:
        raise ValueError("t must be non-zero")
    T = np.array([[0.0, t], [-1.0 / t, 0.0]])
    x0 = spec.x0 if spec.scheme in ("single_pass_feedback", "double_pass") else 0.0
    return transform_state(T, light_in, shift=[x0, 0.0])


def gaussian_overlap_fidelity(a: GaussianState, b: GaussianState) -> float:
    """``2 pi * integral W_a W_b`` for two single-mode Gaussian states."""
    S = a.cov + b.cov
    d = a.mean - b.mean
    return float(math.exp(-0.5 * d @ np.linalg.solve(S, d)) / math.sqrt(np.linalg.det(S)))


def analytic_fidelity(
    scheme: str,
    var_xa: float = 0.5,
    var_pl: float = 0.5,
    var_xl: float = 0.5,
    sigma_eta: float = 0.0,
    t: float = 1.0,
) -> float:
    """Closed-form storage fidelity for Gaussian light inputs.

    Single pass with feedback::

        F = [(var_xa/t^2 + 2 var_pl)(sigma_eta^2 + 2 var_xl)]^(-1/2)

    The double-pass expressions are written for arbitrary input variances and
    reduce to ``(var_xa/t^2 + 1)^(-1/2)`` and ``(sigma_eta^2 + 1)^(-1/2)`` for
    coherent light.  The triple pass at unit strengths is an exact swap.
    """
    if t == 0:
        raise ValueError("t must be non-zero")
    if min(var_xa, var_pl, var_xl) < 0 or sigma_eta < 0:
        raise ValueError("variances and sigma_eta must be non-negative")
    if scheme == "single_pass_feedback":
        d = (var_xa / t**2 + 2 * var_pl) * (sigma_eta**2 + 2 * var_xl)
    elif scheme == "double_pass":
        d = (var_xa / t**2 + 2 * var_pl) * 2 * var_xl
    elif scheme == "double_pass_feedback":
        d = (2 * var_pl + sigma_eta**2) * 2 * var_xl
    elif scheme == "triple_pass":
        return 1.0
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    return d**-0.5
