"""Design and verification toolkit for direct-coupled coherent quantum
observers of closed linear quantum systems."""

__version__ = "0.1.0"

from .core import (
    LinearQuantumSystem,
    QuadraticHamiltonian,
    SymplecticSpace,
    TolerancePolicy,
    ccr_defect,
    generator_from_hamiltonian,
    make_symplectic_space,
    maxabs,
    propagator,
    realizability_defect,
)
from .dynamics import (
    CheckResult,
    ConvergenceReport,
    SimpsonRule,
    Trajectory,
    coefficient_trajectory,
    dominant_frequency,
    running_average,
    simulate_means,
    time_average_error,
    verify_convergence,
)
from .errors import (
    ConsistencyError,
    DesignError,
    DimensionError,
    FactorizationError,
    ModelValidityWarning,
    PipelineError,
    QObserverError,
    QuadratureError,
    SingularBeamsplitterError,
    StructureError,
    ZeroCouplingError,
)
from .ndpa import (
    DesignReport,
    DesignResult,
    NdpaDesign,
    NdpaParams,
    OpenNdpaModel,
    alpha_parameter,
    build_open_ndpa,
    close_loop,
    coupling_block,
    design_ndpa,
    extract_beta,
    hamiltonian_from_drift,
    quadrature_hamiltonian,
    solve_phases,
    solve_theta,
    wrap_angle,
)
from .observer import (
    ObserverDesign,
    ObserverDiagnostics,
    PlantSpec,
    augment,
    synthesize_observer,
    validate_observer,
)

__all__ = [
    "__version__",
    "CheckResult",
    "ConsistencyError",
    "ConvergenceReport",
    "DesignError",
    "DesignReport",
    "DesignResult",
    "DimensionError",
    "FactorizationError",
    "LinearQuantumSystem",
    "ModelValidityWarning",
    "NdpaDesign",
    "NdpaParams",
    "ObserverDesign",
    "ObserverDiagnostics",
    "OpenNdpaModel",
    "PipelineError",
    "PlantSpec",
    "QObserverError",
    "QuadraticHamiltonian",
    "QuadratureError",
    "SimpsonRule",
    "SingularBeamsplitterError",
    "StructureError",
    "SymplecticSpace",
    "TolerancePolicy",
    "Trajectory",
    "ZeroCouplingError",
    "alpha_parameter",
    "augment",
    "build_open_ndpa",
    "ccr_defect",
    "close_loop",
    "coefficient_trajectory",
    "coupling_block",
    "design_ndpa",
    "dominant_frequency",
    "extract_beta",
    "generator_from_hamiltonian",
    "hamiltonian_from_drift",
    "make_symplectic_space",
    "maxabs",
    "propagator",
    "quadrature_hamiltonian",
    "realizability_defect",
    "running_average",
    "simulate_means",
    "solve_phases",
    "solve_theta",
    "synthesize_observer",
    "time_average_error",
    "validate_observer",
    "verify_convergence",
    "wrap_angle",
]
