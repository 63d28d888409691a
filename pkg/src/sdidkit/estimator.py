"""Weighted ATE evaluation and the three named estimators."""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, replace

import numpy as np

from .exceptions import DimensionMismatch
from .panel import BlockDesign, Panel, block_matrix, to_block
from .solver import SolverOptions
from .weights import Method, Regularizer, WeightSet, fit_weights

# two-sided normal critical values for p < .10, .05, .01
STAR_THRESHOLDS = (1.645, 1.960, 2.576)


def significance_stars(ate: float, se: float | None) -> int:
    """Number of stars for ``ate / se`` under the two-sided normal rule."""
    if se is None or not math.isfinite(se):
        return 0
    if ate == 0:
        return 0
    z = math.inf if se == 0 else abs(ate / se)
    return sum(z >= c for c in STAR_THRESHOLDS)


def panel_digest(panel: Panel) -> str:
    """Content hash identifying a panel (values, labels and treatment)."""
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(panel.outcomes).tobytes())
    h.update(repr((panel.unit_ids, panel.period_ids)).encode())
    h.update(repr((panel.treated_units, panel.treatment_start)).encode())
    return h.hexdigest()


@dataclass(frozen=True)
class AteEstimate:
    method: Method
    ate: float
    baseline_mean: float
    n_obs: int
    weights: WeightSet
    se: float | None = None
    stars: int = 0
    regularizer: Regularizer | None = None
    panel_digest: str | None = None

    def to_dict(self) -> dict:
        return {
            "method": self.method.value,
            "ate": self.ate,
            "se": self.se,
            "stars": self.stars,
            "baseline_mean": self.baseline_mean,
            "n_obs": self.n_obs,
            "zeta": None if self.regularizer is None else self.regularizer.zeta,
            "sigma_hat_sq": None if self.regularizer is None else self.regularizer.sigma_hat_sq,
            "panel_digest": self.panel_digest,
            "weights": self.weights.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AteEstimate":
        reg = None
        if d.get("zeta") is not None:
            reg = Regularizer(zeta=d["zeta"], sigma_hat_sq=d["sigma_hat_sq"])
        return cls(
            method=Method.parse(d["method"]),
            ate=d["ate"],
            baseline_mean=d["baseline_mean"],
            n_obs=d["n_obs"],
            weights=WeightSet.from_dict(d["weights"]),
            se=d.get("se"),
            stars=d.get("stars", 0),
            regularizer=reg,
            panel_digest=d.get("panel_digest"),
        )


@dataclass(frozen=True)
class TrendSeries:
    """Treated mean path, weighted control path and pre-period weights."""

    treated_path: np.ndarray
    synthetic_path: np.ndarray
    lambda_profile: np.ndarray

    def to_dict(self) -> dict:
        return {
            "treated_path": self.treated_path.tolist(),
            "synthetic_path": self.synthetic_path.tolist(),
            "lambda_profile": self.lambda_profile.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrendSeries":
        return cls(*(np.asarray(d[k], dtype=float) for k in
                     ("treated_path", "synthetic_path", "lambda_profile")))


def _check(Y, design: BlockDesign, w: WeightSet | None = None) -> np.ndarray:
    Y = np.asarray(Y, dtype=float)
    if Y.shape != (design.n, design.t):
        raise DimensionMismatch(
            f"outcome matrix {Y.shape} does not match design ({design.n}, {design.t})"
        )
    if w is not None and (w.omega.shape != (design.n0,) or w.lam.shape != (design.t0,)):
        raise DimensionMismatch(
            f"weights ({w.omega.size}, {w.lam.size}) do not match "
            f"design (n0={design.n0}, t0={design.t0})"
        )
    return Y


def ate_from_weights(Y, design: BlockDesign, w: WeightSet) -> float:
    """Weighted pre/post contrast of treated units against weighted controls.

    For every unit, the post-period mean minus the ``lam``-weighted
    pre-period level; treated units are averaged, controls are
    ``omega``-weighted, and the ATE is the difference. Intercepts are
    ignored here.
    """
    Y = _check(Y, design, w)
    n0, t0 = design.n0, design.t0
    contrast = Y[:, t0:].mean(axis=1) - Y[:, :t0] @ w.lam
    return float(contrast[n0:].mean() - w.omega @ contrast[:n0])


def baseline_mean(Y, design: BlockDesign) -> float:
    """Mean outcome over all units in the pre-treatment periods."""
    Y = _check(Y, design)
    return float(Y[:, : design.t0].mean())


def trend_series(Y, design: BlockDesign, w: WeightSet) -> TrendSeries:
    Y = _check(Y, design, w)
    n0 = design.n0
    treated = Y[n0:].mean(axis=0)
    if w.method is Method.DID:
        synthetic = Y[:n0].mean(axis=0)
    else:
        synthetic = w.omega @ Y[:n0]
    if w.omega0 is not None:
        synthetic = synthetic + w.omega0
    return TrendSeries(treated, synthetic, w.lam.copy())


def estimate_block(
    Y, design: BlockDesign, method, opts: SolverOptions | None = None
) -> tuple[float, WeightSet, Regularizer | None]:
    """Fit weights and evaluate the ATE on a block-ordered matrix."""
    Y = _check(Y, design)
    w, reg = fit_weights(Y, design, method, opts)
    return ate_from_weights(Y, design, w), w, reg


def estimate(panel: Panel, method, opts: SolverOptions | None = None) -> AteEstimate:
    """Point estimate for one method; ``se`` stays empty until inference."""
    method = Method.parse(method)
    design = to_block(panel)
    Y = block_matrix(panel, design)
    ate, w, reg = estimate_block(Y, design, method, opts)
    return AteEstimate(
        method=method,
        ate=ate,
        baseline_mean=baseline_mean(Y, design),
        n_obs=panel.n_units * panel.n_periods,
        weights=w,
        regularizer=reg,
        panel_digest=panel_digest(panel),
    )


def with_se(est: AteEstimate, se: float) -> AteEstimate:
    return replace(est, se=float(se), stars=significance_stars(est.ate, se))
