"""Panel treatment-effect estimators: DID, synthetic control and synthetic DID.

All three share one weighted ATE formula and differ only in how the unit
and time weights are chosen. Standard errors come from a unit-level
bootstrap.
"""

from .dgp import DgpSpec, generate_panel, grid_oracle_weights, oracle_ate_did
from .estimator import (
    AteEstimate,
    TrendSeries,
    ate_from_weights,
    baseline_mean,
    estimate,
    significance_stars,
    trend_series,
)
from .inference import BootstrapResult, attach_inference, bootstrap_se
from .models import DiD, SyntheticControl, SyntheticDiD
from .panel import BlockDesign, Panel, build_panel, set_treatment, to_block, validate_block
from .solver import SolverOptions, solve_simplex_ls
from .weights import (
    Method,
    Regularizer,
    WeightSet,
    compute_zeta,
    did_weights,
    sc_unit_weights,
    sdid_time_weights,
    sdid_unit_weights,
    sigma_hat_sq,
)

__version__ = "0.1.0"

__all__ = [
    "AteEstimate", "BlockDesign", "BootstrapResult", "DgpSpec", "DiD", "Method", "Panel",
    "Regularizer", "SolverOptions", "SyntheticControl", "SyntheticDiD", "TrendSeries",
    "WeightSet", "ate_from_weights", "attach_inference", "baseline_mean", "bootstrap_se",
    "build_panel", "compute_zeta", "did_weights", "estimate", "generate_panel",
    "grid_oracle_weights", "oracle_ate_did", "sc_unit_weights", "sdid_time_weights",
    "sdid_unit_weights", "set_treatment", "sigma_hat_sq", "significance_stars",
    "solve_simplex_ls", "to_block", "trend_series", "validate_block",
]
