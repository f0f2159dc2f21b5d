"""Numerical laboratory for H-consistency transformation functions and bounds."""

from .errors import (
    ConstraintError,
    DomainError,
    HCGrowthError,
    InsufficientSamplesError,
    NonPositiveError,
    NotFoundError,
    ParameterError,
    PreconditionError,
    ResolutionError,
    SchemaError,
)
from .phi import (
    PHI_IDS,
    PhiFunction,
    SurrogateSpec,
    eval_loss,
    gce_spec,
    get_phi,
    loss_matrix,
    make_spec,
    predict,
    spec_from_dict,
    verify_regularity,
)

__version__ = "0.1.0"
