"""Passivity radius, optimally robust port-Hamiltonian realizations and
distance to passivity for linear time-invariant state-space models.
"""

__version__ = "0.1.0"

from .exceptions import *  # noqa: F401,F403
from .model import (
    Certificate,
    FrequencyScan,
    Pencil,
    PencilSpectrum,
    PHRealization,
    StateSpaceModel,
    assemble_hamiltonian,
    assemble_pencil,
    assemble_w,
    certify,
    check_ph,
    eval_gamma,
    frequency_scan,
    from_ph_form,
    shift_model,
    transfer,
    transform_to_ph,
    transformed_model,
    validate_model,
    xi_star,
)
from .riccati import AreSolution, extremal_solutions, riccati_residual, solve_are
from .radius import (
    RadiusReport,
    StructuredPerturbation,
    apply_perturbation,
    lambda_max_profile,
    ph_radius,
    x_passivity_radius,
)
from .optimal import (
    OptimalPH,
    PassivityStatus,
    XiResult,
    classify_passivity,
    negative_intervals,
    optimal_ph,
    passivity_status,
    real_shift_roots,
    xi_accelerated,
    xi_bisection,
    xi_upper_bound,
)
from .distance import (
    PassivationResult,
    StabilityRadius,
    StabilizationResult,
    passify,
    passivation_diagonal,
    passivation_refine,
    stability_radius,
    stabilization_diagonal,
    stabilization_refine,
)
from .oracle import GridSpec, grid_xi_oracle, random_passive_model, random_perturbation_search
from .io import load_model, parse_model
