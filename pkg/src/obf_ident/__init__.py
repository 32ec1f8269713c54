"""Identification of linear systems with rational basis functions whose poles
are chosen from the geometry of an a-priori pole region."""
from importlib.metadata import PackageNotFoundError, version

from .errors import ObfIdentError
from .hyperbolic import (
    PoleRegion,
    blaschke_product,
    elliptic_K,
    pair_product,
    pseudo_metric,
    tau_analytic,
    worst_case_product,
)
from .conformal import IntervalMapParams, annulus_to_region, jacobi_sn, region_to_annulus, tsuji_init
from .pole_select import (
    PoleSet,
    SelectOptions,
    SelectReport,
    enforce_conjugate_closure,
    minimax_poles,
    tsuji_points,
    worst_case_rate,
)
from .lti_core import (
    EnergyBudget,
    PartialFractionTF,
    StateSpaceModel,
    Trajectory,
    bias_upper_bound,
    h2_norm,
    optimal_projection,
    projection_bias,
    scalar_error_closed_form,
    simulate_closed_loop,
)
from .ident import convergence_experiment, ho_kalman, least_squares_fit, regressor_states

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # pragma: no cover
    __version__ = "0.0.0"
