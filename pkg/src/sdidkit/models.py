"""Scikit-learn style wrappers around the functional estimators.

Hyper-parameters go to the constructor and data to :meth:`fit`, so the
estimators work with ``get_params``/``set_params``, ``clone`` and grid
utilities::

    >>> from sdidkit import SyntheticDiD
    >>> est = SyntheticDiD(n_bootstrap=200, seed=1).fit(panel)
    >>> est.ate_, est.se_
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .estimator import estimate, trend_series
from .exceptions import DimensionMismatch
from .inference import attach_inference, bootstrap_se
from .panel import block_matrix, to_block
from .solver import SolverOptions
from .validation import check_nonnegative, check_panel
from .weights import Method


class _PanelATE(BaseEstimator):
    _method: Method

    def _solver_options(self) -> SolverOptions:
        return SolverOptions(
            tol=getattr(self, "tol", 1e-10),
            max_iter=getattr(self, "max_iter", 10000),
            lambda_ridge=getattr(self, "lambda_ridge", 0.0),
        )

    def _validate_params(self):
        check_nonnegative("n_bootstrap", self.n_bootstrap, integer=True)
        if self.n_bootstrap == 1:
            raise ValueError("n_bootstrap must be 0 (no inference) or at least 2")
        for name in ("tol", "max_iter", "lambda_ridge"):
            if hasattr(self, name):
                check_nonnegative(name, getattr(self, name), integer=name == "max_iter")

    def fit(self, X, y=None, treated_units=None, treatment_start=None):
        """Estimate the ATE on a panel.

        Parameters
        ----------
        X : Panel, wide DataFrame or 2-D array
            Outcomes with units as rows and periods as columns.
        y : ignored
        treated_units, treatment_start : optional
            Treatment metadata; required unless ``X`` is a Panel carrying it.
        """
        self._validate_params()
        panel = check_panel(X, treated_units, treatment_start)
        opts = self._solver_options()
        est = estimate(panel, self._method, opts)
        self.design_ = to_block(panel)
        Y = block_matrix(panel, self.design_)
        self.bootstrap_ = None
        if self.n_bootstrap:
            self.bootstrap_ = bootstrap_se(
                panel, self._method, B=self.n_bootstrap, seed=self.seed, opts=opts,
                max_redraws=self.max_redraws, n_jobs=self.n_jobs,
            )
            est = attach_inference(est, self.bootstrap_)
        self.estimate_ = est
        self.ate_ = est.ate
        self.se_ = est.se
        self.weights_ = est.weights
        self.trend_ = trend_series(Y, self.design_, est.weights)
        self.control_units_ = [panel.unit_ids[i] for i in self.design_.row_order[: self.design_.n0]]
        self.n_obs_ = est.n_obs
        return self

    def predict(self, X=None, treated_units=None, treatment_start=None) -> np.ndarray:
        """Counterfactual (synthetic control) path per period.

        Without ``X`` the path for the training panel is returned; a new
        panel must have the same control count and pre-period count.
        """
        check_is_fitted(self, "estimate_")
        if X is None:
            return self.trend_.synthetic_path.copy()
        panel = check_panel(X, treated_units, treatment_start)
        design = to_block(panel)
        if (design.n0, design.t0) != (self.design_.n0, self.design_.t0):
            raise DimensionMismatch(
                f"panel has n0={design.n0}, t0={design.t0}; "
                f"estimator was fitted with n0={self.design_.n0}, t0={self.design_.t0}"
            )
        Y = block_matrix(panel, design)
        return trend_series(Y, design, self.weights_).synthetic_path

    def summary(self) -> dict:
        check_is_fitted(self, "estimate_")
        return self.estimate_.to_dict()


class DiD(_PanelATE):
    """Difference-in-differences with uniform unit and time weights."""

    _method = Method.DID

    def __init__(self, n_bootstrap=0, seed=0, max_redraws=None, n_jobs=1):
        self.n_bootstrap = n_bootstrap
        self.seed = seed
        self.max_redraws = max_redraws
        self.n_jobs = n_jobs


class SyntheticControl(_PanelATE):
    """Synthetic control: simplex unit weights, no time weighting."""

    _method = Method.SC

    def __init__(self, tol=1e-10, max_iter=10000, n_bootstrap=0, seed=0,
                 max_redraws=None, n_jobs=1):
        self.tol = tol
        self.max_iter = max_iter
        self.n_bootstrap = n_bootstrap
        self.seed = seed
        self.max_redraws = max_redraws
        self.n_jobs = n_jobs


class SyntheticDiD(_PanelATE):
    """Synthetic difference-in-differences.

    Unit weights carry a free intercept and a ridge penalty scaled by the
    first-difference noise of the controls; time weights carry a free
    intercept and, by default, no penalty (``lambda_ridge``).
    """

    _method = Method.SDID

    def __init__(self, tol=1e-10, max_iter=10000, lambda_ridge=0.0, n_bootstrap=0,
                 seed=0, max_redraws=None, n_jobs=1):
        self.tol = tol
        self.max_iter = max_iter
        self.lambda_ridge = lambda_ridge
        self.n_bootstrap = n_bootstrap
        self.seed = seed
        self.max_redraws = max_redraws
        self.n_jobs = n_jobs

    @property
    def zeta_(self) -> float:
        check_is_fitted(self, "estimate_")
        return self.estimate_.regularizer.zeta


ESTIMATORS = {Method.DID: DiD, Method.SC: SyntheticControl, Method.SDID: SyntheticDiD}
