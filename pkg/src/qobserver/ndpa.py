"""Mapping the observer design onto an NDPA fed back through a beamsplitter.

A non-degenerate parametric amplifier (NDPA) has two cavity modes a (plant)
and b (observer) with Hamiltonian (i/2)(eps a* b* - eps* a b) + omega_o b*b
and mirror couplings L = [sqrt(gamma) a, sqrt(gamma) b].  Feeding both
output fields back through a beamsplitter with angle theta and phase phi
closes the loop: the noise increments drop out algebraically and the
deterministic doubled-up dynamics

    d/dt (a, b, a*, b*) = F (a, b, a*, b*)

remain, with the off-diagonal loop terms proportional to
alpha = gamma e^{i phi} sin(theta) / (1 - cos(theta)).  The equivalent
quadratic Hamiltonian is recovered as M = (i/2)(J F - F^dag J) with
J = diag(I, -I), and in quadrature coordinates R = Phi^dag M Phi, where Phi
maps (q_p, p_p, q_o, p_o) to (a, b, a*, b*) via a = q_p + i p_p, etc.

The resulting R has the block form [[0, R_c], [R_c^T, 2 omega_o I]] with

    R_c = [[-Im(eps) - Im(alpha),  Re(eps) + Re(alpha)],
           [ Re(eps) - Re(alpha),  Im(eps) - Im(alpha)]],

so the hardware realizes a direct-coupled observer exactly when R_c is
rank one along the plant selector.  Writing eps = |eps| e^{i psi} and
c = C_p1 + i C_p2, that happens iff

    sin(theta) / (1 - cos(theta)) = |eps| / gamma           (magnitude)
    arg(e^{i psi} - e^{-i phi})   = arg(c) - pi/2           (orientation)

which this module solves in closed form, after which beta and C_o follow
from the coupling block.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .core import _frozen_array, maxabs
from .errors import (
    ConsistencyError,
    DesignError,
    DimensionError,
    FactorizationError,
    ModelValidityWarning,
    PipelineError,
    SingularBeamsplitterError,
    StructureError,
    ZeroCouplingError,
)
from .observer import ObserverDesign, PlantSpec, synthesize_observer

# Trusted squeezing-to-damping ratio for the linearized NDPA model.
EPS_RATIO_TRUSTED_MAX = 0.6

# Quadrature map: (a, b, a*, b*) = PHI @ (q_p, p_p, q_o, p_o).
PHI = np.array(
    [
        [1.0, 1.0j, 0.0, 0.0],
        [0.0, 0.0, 1.0, 1.0j],
        [1.0, -1.0j, 0.0, 0.0],
        [0.0, 0.0, 1.0, -1.0j],
    ]
)
PHI.setflags(write=False)

# Signature matrix of the doubled-up ordering (a, b | a*, b*).
J_PM = np.diag([1.0, 1.0, -1.0, -1.0]).astype(complex)
J_PM.setflags(write=False)


def wrap_angle(x: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    w = x - 2.0 * math.pi * round(x / (2.0 * math.pi))
    if w <= -math.pi:
        w += 2.0 * math.pi
    elif w > math.pi:
        w -= 2.0 * math.pi
    return w


@dataclass(frozen=True)
class NdpaParams:
    """Physical amplifier and beamsplitter parameters.

    gamma   mirror-coupling rate (frequency units)
    epsilon complex squeezing parameter, eps = |eps| e^{i psi}
    omega_o detuning of the observer mode b (the a mode is tuned)
    theta   beamsplitter angle in (0, pi)
    phi     beamsplitter phase, stored wrapped to (-pi, pi]
    """

    gamma: float
    epsilon: complex
    omega_o: float
    theta: float
    phi: float

    def __post_init__(self):
        object.__setattr__(self, "gamma", float(self.gamma))
        object.__setattr__(self, "epsilon", complex(self.epsilon))
        object.__setattr__(self, "omega_o", float(self.omega_o))
        object.__setattr__(self, "theta", float(self.theta))
        object.__setattr__(self, "phi", wrap_angle(float(self.phi)))
        if self.gamma <= 0.0:
            raise DesignError(f"gamma must be positive, got {self.gamma}")
        if not 0.0 < self.theta < math.pi:
            raise DesignError(
                f"beamsplitter angle must lie in (0, pi), got {self.theta}"
            )

    @property
    def eps_ratio(self) -> float:
        return abs(self.epsilon) / self.gamma

    @property
    def linearization_trusted(self) -> bool:
        """True when |eps|/gamma sits inside the trusted range (0, 0.6)."""
        return 0.0 < self.eps_ratio < EPS_RATIO_TRUSTED_MAX


@dataclass(frozen=True, eq=False)
class OpenNdpaModel:
    """NDPA before loop closure, in doubled-up (a, b, a*, b*) ordering.

    `drift` is the deterministic part of the open dynamics.  `input_gain`
    (-sqrt(gamma) I on the a, b rows) and `output_map` (sqrt(gamma) I) hold
    the couplings to the formal noise increments; the toolkit only ever
    eliminates those increments algebraically, it never integrates them.
    """

    drift: np.ndarray
    input_gain: np.ndarray
    output_map: np.ndarray
    gamma: float

    def __post_init__(self):
        object.__setattr__(self, "drift", _frozen_array(self.drift, dtype=complex))
        object.__setattr__(self, "input_gain", _frozen_array(self.input_gain))
        object.__setattr__(self, "output_map", _frozen_array(self.output_map))
        object.__setattr__(self, "gamma", float(self.gamma))


@dataclass(frozen=True, eq=False)
class NdpaDesign:
    """Physical parameters plus every derived pipeline artifact."""

    params: NdpaParams
    alpha: complex
    f: np.ndarray
    m: np.ndarray
    r: np.ndarray
    beta: np.ndarray
    c_o: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "f", _frozen_array(self.f, dtype=complex))
        object.__setattr__(self, "m", _frozen_array(self.m, dtype=complex))
        object.__setattr__(self, "r", _frozen_array(self.r))
        object.__setattr__(self, "beta", _frozen_array(np.reshape(self.beta, -1)))
        object.__setattr__(self, "c_o", _frozen_array(np.reshape(self.c_o, -1)))


@dataclass(frozen=True)
class DesignReport:
    """Residuals and flags collected while running the design pipeline."""

    arg_c: float
    delta: float
    theta_residual: float
    phase_residual: float
    arg_identity_residual: float
    det_r_c: float
    alpha_magnitude_defect: float
    factorization_residual: float
    cross_check_defect: float
    warnings: tuple[str, ...]


@dataclass(frozen=True)
class DesignResult:
    ndpa: NdpaDesign
    observer: ObserverDesign
    report: DesignReport


def solve_theta(eps_ratio: float) -> float:
    """Beamsplitter angle with sin(theta)/(1 - cos(theta)) = eps_ratio.

    On (0, pi) the left side equals cot(theta/2), so the unique solution is
    theta = 2 arctan(1/eps_ratio).  Ratios above 0.6 are accepted but flagged:
    the linearized amplifier model degrades there.
    """
    eps_ratio = float(eps_ratio)
    if eps_ratio <= 0.0:
        raise DesignError(f"squeezing ratio must be positive, got {eps_ratio}")
    if eps_ratio > EPS_RATIO_TRUSTED_MAX:
        warnings.warn(
            f"squeezing ratio {eps_ratio} above {EPS_RATIO_TRUSTED_MAX}: "
            "linearized amplifier model is not trusted",
            ModelValidityWarning,
            stacklevel=2,
        )
    return 2.0 * math.atan(1.0 / eps_ratio)


def solve_phases(arg_c: float, delta: float | None = None) -> tuple[float, float]:
    """Pump phase psi and beamsplitter phase phi for a target plant quadrature.

    The orientation condition arg(e^{i psi} - e^{-i phi}) = arg_c - pi/2 has
    a one-parameter family of solutions; it is parametrized here as

        psi = arg_c - pi + delta,    phi = pi - arg_c + delta,

    for which e^{i psi} - e^{-i phi} = 2i sin(delta) e^{i(arg_c - pi)}, so any
    delta in (0, pi) works.  The default delta = pi/2 keeps the two phases
    equal when arg_c = 0.  Both angles are returned wrapped to (-pi, pi].
    """
    if delta is None:
        delta = math.pi / 2.0
    delta = float(delta)
    arg_c = float(arg_c)
    if not 0.0 < delta < math.pi:
        raise DesignError(
            f"phase offset delta must lie in (0, pi), got {delta} "
            "(sin(delta) must be positive for a nonzero phase difference vector)"
        )
    psi = wrap_angle(arg_c - math.pi + delta)
    phi = wrap_angle(math.pi - arg_c + delta)
    return psi, phi


def alpha_parameter(gamma: float, theta: float, phi: float) -> complex:
    """Loop-coupling amplitude alpha = gamma e^{i phi} sin(theta)/(1 - cos(theta))."""
    return gamma * cmath.exp(1j * phi) * math.sin(theta) / (1.0 - math.cos(theta))


def build_open_ndpa(gamma: float, epsilon: complex, omega_o: float) -> OpenNdpaModel:
    """Open (pre-feedback) NDPA model in doubled-up form.

    On the (a, b) rows the drift is [[0, eps/2], [eps/2, 0]] acting on the
    conjugates minus [[gamma/2, 0], [0, gamma/2 + i omega_o]] acting on
    (a, b); the conjugate rows are the entrywise conjugates.
    """
    gamma = float(gamma)
    if gamma <= 0.0:
        raise DesignError(f"gamma must be positive, got {gamma}")
    epsilon = complex(epsilon)
    omega_o = float(omega_o)
    damp = -np.array([[gamma / 2.0, 0.0], [0.0, gamma / 2.0 + 1j * omega_o]])
    squeeze = np.array([[0.0, epsilon / 2.0], [epsilon / 2.0, 0.0]])
    drift = np.block([[damp, squeeze], [squeeze.conj(), damp.conj()]])
    sqg = math.sqrt(gamma)
    return OpenNdpaModel(
        drift=drift,
        input_gain=-sqg * np.eye(2),
        output_map=sqg * np.eye(2),
        gamma=gamma,
    )


def close_loop(model: OpenNdpaModel, theta: float, phi: float) -> np.ndarray:
    """Deterministic drift F after the beamsplitter feedback loop is closed.

    Substituting the beamsplitter relation into the output equation leaves

        [[cos(theta) - 1, -e^{-i phi} sin(theta)],
         [e^{i phi} sin(theta), cos(theta) - 1]] (dA, dB) = sqrt(gamma) (a, b) dt,

    whose inverse carries the prefactor sqrt(gamma) / (2 (1 - cos(theta))).
    Feeding the solved increments back into the drift cancels the diagonal
    damping and leaves the loop terms -alpha*/2 and alpha/2 off-diagonal.
    """
    theta = float(theta)
    phi = float(phi)
    cos_t = math.cos(theta)
    if abs(1.0 - cos_t) < 1e-9:
        raise SingularBeamsplitterError(
            f"theta = {theta} too close to full transmission; the feedback "
            "elimination is singular"
        )
    sin_t = math.sin(theta)
    # Closed-form inverse of the elimination matrix times -gamma, added to
    # the open (a, b) drift.
    pref = model.gamma / (2.0 * (1.0 - cos_t))
    correction = -pref * np.array(
        [
            [cos_t - 1.0, cmath.exp(-1j * phi) * sin_t],
            [-cmath.exp(1j * phi) * sin_t, cos_t - 1.0],
        ]
    )
    f_ab = model.drift[:2, :2] + correction
    squeeze = model.drift[:2, 2:]
    return np.block([[f_ab, squeeze], [squeeze.conj(), f_ab.conj()]])


def hamiltonian_from_drift(f: np.ndarray) -> np.ndarray:
    """Doubled-up Hamiltonian matrix M = (i/2)(J F - F^dag J).

    F must use the (a, b, a*, b*) ordering.  M is Hermitian for any F of
    that shape; the residual is checked anyway to catch malformed input.
    """
    f = np.asarray(f, dtype=complex)
    if f.shape != (4, 4):
        raise DimensionError(f"drift must be 4x4 doubled-up, got {f.shape}")
    m = 0.5j * (J_PM @ f - f.conj().T @ J_PM)
    herm = maxabs(m - m.conj().T)
    if herm > 1e-12 * max(1.0, maxabs(m)):
        raise StructureError(f"recovered Hamiltonian not Hermitian (defect {herm:.3e})")
    return m


def quadrature_hamiltonian(m: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Real quadrature energy matrix R = Phi^dag M Phi.

    The imaginary residue is required to stay below `tol` relative to the
    scale of M; anything larger means M is not a valid doubled-up
    Hamiltonian (e.g. wrong ordering or a non-Hermitian block).
    """
    m = np.asarray(m, dtype=complex)
    if m.shape != (4, 4):
        raise DimensionError(f"Hamiltonian matrix must be 4x4, got {m.shape}")
    r = PHI.conj().T @ m @ PHI
    imag = maxabs(r.imag)
    if imag > tol * max(1.0, maxabs(m)):
        raise StructureError(
            f"quadrature form has imaginary residue {imag:.3e}; input is not a "
            "valid doubled-up Hamiltonian"
        )
    r = r.real
    return (r + r.T) / 2.0


def coupling_block(epsilon: complex, alpha: complex) -> np.ndarray:
    """Plant-observer coupling block of R in terms of eps and alpha.

    det R_c = |alpha|^2 - |eps|^2, so the block is rank one exactly on the
    magnitude design curve |alpha| = |eps|.
    """
    epsilon = complex(epsilon)
    alpha = complex(alpha)
    return np.array(
        [
            [-epsilon.imag - alpha.imag, epsilon.real + alpha.real],
            [epsilon.real - alpha.real, epsilon.imag - alpha.imag],
        ]
    )


def extract_beta(r_c: np.ndarray, c_p, tol: float = 1e-9) -> np.ndarray:
    """Factor R_c = C_p^T beta and return beta.

    beta is the least-squares factor (C_p R_c) / |C_p|^2; the factorization
    must reproduce R_c to `tol` relative to its size, otherwise the design
    equations were not satisfied.
    """
    r_c = np.asarray(r_c, dtype=float)
    c_p = np.asarray(c_p, dtype=float).reshape(-1)
    if r_c.shape != (2, 2) or c_p.shape != (2,):
        raise DimensionError("coupling block must be 2x2 and selector length 2")
    if maxabs(c_p) == 0.0:
        raise DesignError("plant output selector is zero")
    scale = maxabs(r_c)
    if scale == 0.0:
        raise ZeroCouplingError("coupling block is zero: observer is decoupled")
    beta = (c_p @ r_c) / float(c_p @ c_p)
    residual = maxabs(r_c - np.outer(c_p, beta))
    if residual > tol * scale:
        raise FactorizationError(
            f"coupling block is not rank one along the plant selector "
            f"(residual {residual:.3e} vs {tol:.1e} * {scale:.3e})"
        )
    if maxabs(beta) == 0.0:
        raise ZeroCouplingError("factorization produced beta = 0")
    return beta


def design_ndpa(
    c_p,
    omega_o: float,
    gamma: float,
    eps_ratio: float,
    delta: float | None = None,
) -> DesignResult:
    """Full design pipeline from plant selector to hardware parameters.

    Solves the two design equations, forms eps and alpha, reads off beta and
    C_o from the coupling block, and independently rebuilds R through the
    physical route (open model -> loop closure -> M -> quadratures).  The two
    routes must agree to 1e-9 relative per entry or the result is rejected.
    All inputs are taken in one consistent frequency unit.
    """
    plant = PlantSpec(c_p)
    omega_o = float(omega_o)
    gamma = float(gamma)
    eps_ratio = float(eps_ratio)
    if omega_o <= 0.0:
        raise DesignError(f"omega_o must be positive, got {omega_o}")
    if gamma <= 0.0:
        raise DesignError(f"gamma must be positive, got {gamma}")
    if eps_ratio <= 0.0:
        raise DesignError(f"squeezing ratio must be positive, got {eps_ratio}")

    notes: list[str] = []
    if eps_ratio > EPS_RATIO_TRUSTED_MAX:
        notes.append(
            f"squeezing ratio {eps_ratio:g} above trusted range "
            f"(0, {EPS_RATIO_TRUSTED_MAX}); linearized model not trusted"
        )
    if delta is not None and delta != math.pi / 2.0:
        notes.append(
            f"non-default phase offset delta = {delta:g}; the phase pair is a "
            "toolkit convention, not uniquely determined"
        )

    def stage(name, fn, *args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ConsistencyError:
            raise
        except Exception as exc:
            raise PipelineError(name, str(exc)) from exc

    theta = stage("solve_theta", solve_theta, eps_ratio)
    arg_c = math.atan2(plant.c_p[1], plant.c_p[0])
    psi, phi = stage("solve_phases", solve_phases, arg_c, delta)
    epsilon = gamma * eps_ratio * cmath.exp(1j * psi)
    alpha = alpha_parameter(gamma, theta, phi)

    r_c = stage("coupling_block", coupling_block, epsilon, alpha)
    beta = stage("extract_beta", extract_beta, r_c, plant.c_p)
    observer = stage("synthesize_observer", synthesize_observer, plant, omega_o, beta)

    model = stage("build_open_ndpa", build_open_ndpa, gamma, epsilon, omega_o)
    f = stage("close_loop", close_loop, model, theta, phi)
    m = stage("hamiltonian_from_drift", hamiltonian_from_drift, f)
    r_physical = stage("quadrature_hamiltonian", quadrature_hamiltonian, m)

    r_abstract = np.zeros((4, 4))
    r_abstract[:2, 2:] = observer.r_c
    r_abstract[2:, :2] = observer.r_c.T
    r_abstract[2:, 2:] = observer.r_o
    cross_defect = maxabs(r_physical - r_abstract)
    if cross_defect > 1e-9 * max(1.0, maxabs(r_abstract)):
        raise ConsistencyError(
            f"physical route disagrees with abstract design "
            f"(max entry defect {cross_defect:.3e})"
        )

    theta_residual = abs(
        math.sin(theta) / (1.0 - math.cos(theta)) - eps_ratio
    )
    phase_residual = abs(
        wrap_angle(
            cmath.phase(cmath.exp(1j * psi) - cmath.exp(-1j * phi))
            - (arg_c - math.pi / 2.0)
        )
    )
    arg_identity_residual = abs(
        wrap_angle(cmath.phase(1j * (epsilon - alpha.conjugate())) - arg_c)
    )

    ndpa = NdpaDesign(
        params=NdpaParams(gamma, epsilon, omega_o, theta, phi),
        alpha=alpha,
        f=f,
        m=m,
        r=r_physical,
        beta=beta,
        c_o=observer.c_o,
    )
    report = DesignReport(
        arg_c=arg_c,
        delta=math.pi / 2.0 if delta is None else float(delta),
        theta_residual=theta_residual,
        phase_residual=phase_residual,
        arg_identity_residual=arg_identity_residual,
        det_r_c=float(np.linalg.det(r_c)),
        alpha_magnitude_defect=abs(abs(alpha) - abs(epsilon)),
        factorization_residual=maxabs(r_c - np.outer(plant.c_p, beta)),
        cross_check_defect=cross_defect,
        warnings=tuple(notes),
    )
    return DesignResult(ndpa=ndpa, observer=observer, report=report)
