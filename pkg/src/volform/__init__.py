"""Volume-preserving one-step integrators for divergence-free fields in R^3.

The package constructs, classifies, and runs the implicit maps defined
by generating one-forms: the permutation algebra and five-class
reduction (:mod:`.perm3`), exact quadratic-polynomial calculus
(:mod:`.quadcalc`), potential representations of divergence-free fields
(:mod:`.fields`), the generic implicit engine (:mod:`.genmap`), the
scheme factories (:mod:`.schemes`), and a verification toolkit
(:mod:`.verify`).  ``volform`` on the command line drives batch runs.
"""

from .errors import (
    ConfigError,
    DegeneracyError,
    DegenerateCoefficientError,
    LegendreFailureError,
    NewtonDivergenceError,
    QuadratureFailureError,
    SelfReferenceError,
    SolverError,
    StepTooLargeError,
    TwistDegenerateError,
    TwistViolationError,
    UnknownFieldError,
    VolformError,
)
from .fields import (
    Field3,
    LinearField,
    PotentialTriple,
    ScalarPotential,
    builtin,
    extract_potentials,
    field_from_potentials,
    linear_potentials,
    potentials_for,
)
from .genmap import GeneratingFormSpec, PotentialFn, SolverConfig, adjoint, base_step, permuted_step
from .perm3 import (
    Permutation,
    PairClass,
    act_vec,
    classify,
    compose,
    enumerate_classes,
    inverse,
    permact,
    render_conditions,
    sign,
)
from .quadcalc import AffineExpr, QuadForm
from .schemes import (
    AffineMap3,
    DiscreteLagrangian,
    SchemeHandle,
    SCHEME_NAMES,
    derive_s1_potentials,
    derive_s2_potentials,
    legendre,
    make_dl_dl,
    make_dl_se,
    make_euler,
    make_rk4,
    make_s1,
    make_s2,
    make_scheme,
    make_se_se,
    quispel_corrected_step,
    quispel_semi_implicit,
)
from .verify import (
    OrderReport,
    VolumeAudit,
    det3,
    expm3,
    jacobian_fd,
    observed_order,
    rk4_reference,
    volume_audit,
)

__version__ = "0.1.0"
