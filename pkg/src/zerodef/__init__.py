"""Deficiency-zero single-linkage reaction networks: analysis, certificates, simulation.

The public surface re-exports the main types and operations; see the module
docstrings for the mathematical conventions (edge rates A[i, j] on j -> i,
complex vectors as columns of B, power conventions at the boundary).
"""

__version__ = "0.1.0"

from .errors import (
    DomainError,
    InfeasibleError,
    NumericalError,
    ParseError,
    StructuralError,
    ValidationError,
    ZerodefError,
)
from .kinetics import Kinetics
from .network import (
    LogActivities,
    ReactionNetwork,
    ValidationReport,
    complex_activities,
    laplacian,
    log_activities,
    rate_split,
    support_set,
    validate,
    velocity,
    velocity_factored,
)
from .parser import parse, serialize
from .stoichiometry import (
    ClassId,
    SubspaceBases,
    class_of,
    positive_witness,
    same_class,
    stoichiometric_bases,
)
from .equilibria import (
    CoordinateChart,
    Equilibrium,
    PerronVector,
    base_equilibrium,
    class_equilibrium,
    class_has_boundary_equilibria,
    coordinate_chart,
    equilibrium_manifold_point,
    homogeneity_check,
    is_boundary_equilibrium,
    log_imbalance,
    log_imbalance_strict,
    positive_kernel,
    project_to_class,
)
from .lyapunov import (
    CertificateReport,
    certify,
    comparison_field,
    dissipation_coeff,
    dissipation_margin,
    dissipation_margin_batch,
    entropy_distance,
    exponential_rate,
    laplacian_gap,
    lyapunov_value,
    min_activity,
    robust_margin,
)
from .simulate import (
    PerturbationSpec,
    SimConfig,
    Trajectory,
    integrate,
    perturbed_within_margin,
)
from .control import ActuatorChoice, FeedbackLaw, make_feedback, select_actuators
from .models import (
    McKeithanParams,
    example_networks,
    mckeithan,
    mckeithan_equilibrium,
    pi3_closed_form,
)
