"""Unit and time weights for the DID, SC and SDID estimators."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .exceptions import DimensionMismatch, InsufficientPrePeriods
from .panel import BlockDesign
from .solver import SimplexSolution, SolverOptions, solve_simplex_ls


class Method(str, Enum):
    DID = "DID"
    SC = "SC"
    SDID = "SDID"

    @classmethod
    def parse(cls, value) -> "Method":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().upper())
        except ValueError:
            raise ValueError(f"unknown method {value!r}; expected one of DID, SC, SDID") from None


@dataclass(frozen=True)
class WeightSet:
    """Control-unit weights ``omega`` and pre-period weights ``lam``.

    The intercepts only exist for SDID; SC carries all-zero time weights.
    """

    omega: np.ndarray
    lam: np.ndarray
    method: Method
    omega0: float | None = None
    lambda0: float | None = None

    def check(self, atol: float = 1e-8, floor: float = -1e-12) -> list[str]:
        """Violations of the simplex and intercept invariants (empty if valid)."""
        problems = []
        if abs(self.omega.sum() - 1.0) > atol:
            problems.append(f"omega sums to {self.omega.sum()!r}")
        if self.omega.min() < floor:
            problems.append(f"omega has negative entry {self.omega.min()!r}")
        if self.method is Method.SC:
            if np.any(self.lam != 0):
                problems.append("SC time weights must be zero")
        else:
            if abs(self.lam.sum() - 1.0) > atol:
                problems.append(f"lambda sums to {self.lam.sum()!r}")
            if self.lam.min() < floor:
                problems.append(f"lambda has negative entry {self.lam.min()!r}")
        is_sdid = self.method is Method.SDID
        if (self.omega0 is not None) != is_sdid or (self.lambda0 is not None) != is_sdid:
            problems.append("intercepts must be present exactly for SDID")
        return problems

    def to_dict(self) -> dict:
        return {
            "method": self.method.value,
            "omega": self.omega.tolist(),
            "lambda": self.lam.tolist(),
            "omega0": self.omega0,
            "lambda0": self.lambda0,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "WeightSet":
        return cls(
            omega=np.asarray(d["omega"], dtype=float),
            lam=np.asarray(d["lambda"], dtype=float),
            method=Method.parse(d["method"]),
            omega0=d.get("omega0"),
            lambda0=d.get("lambda0"),
        )


@dataclass(frozen=True)
class Regularizer:
    zeta: float
    sigma_hat_sq: float


def _check_shape(Y: np.ndarray, design: BlockDesign) -> np.ndarray:
    Y = np.asarray(Y, dtype=float)
    if Y.shape != (design.n, design.t):
        raise DimensionMismatch(
            f"outcome matrix {Y.shape} does not match design ({design.n}, {design.t})"
        )
    return Y


def did_weights(design: BlockDesign) -> WeightSet:
    """Uniform weights over control units and pre-periods."""
    return WeightSet(
        omega=np.full(design.n0, 1.0 / design.n0),
        lam=np.full(design.t0, 1.0 / design.t0),
        method=Method.DID,
    )


def sigma_hat_sq(Y, design: BlockDesign) -> float:
    """Variance of first differences of control outcomes over pre-periods.

    Uses the divisor ``n0 * (t0 - 1)``, i.e. the mean squared deviation of
    the differences from their grand mean.
    """
    Y = _check_shape(Y, design)
    if design.t0 < 2:
        raise InsufficientPrePeriods(
            f"need at least 2 pre-treatment periods to difference, got {design.t0}"
        )
    delta = np.diff(Y[: design.n0, : design.t0], axis=1)
    dev = delta - delta.mean()
    return float(np.mean(dev * dev))


def compute_zeta(design: BlockDesign, sigma_hat_sq: float) -> Regularizer:
    if sigma_hat_sq < 0:
        raise ValueError("sigma_hat_sq must be non-negative")
    zeta = (design.n1 * design.t1) ** 0.25 * np.sqrt(sigma_hat_sq)
    return Regularizer(zeta=float(zeta), sigma_hat_sq=float(sigma_hat_sq))


def sc_unit_weights(Y, design: BlockDesign, opts: SolverOptions | None = None) -> WeightSet:
    """Simplex weights matching the treated pre-period mean path, no intercept."""
    Y = _check_shape(Y, design)
    A = Y[: design.n0, : design.t0].T
    b = Y[design.n0 :, : design.t0].mean(axis=0)
    sol = solve_simplex_ls(A, b, ridge=0.0, with_intercept=False, opts=opts)
    return WeightSet(omega=sol.weights, lam=np.zeros(design.t0), method=Method.SC)


def sdid_unit_solution(
    Y, design: BlockDesign, reg: Regularizer, opts: SolverOptions | None = None
) -> SimplexSolution:
    Y = _check_shape(Y, design)
    A = Y[: design.n0, : design.t0].T
    b = Y[design.n0 :, : design.t0].mean(axis=0)
    return solve_simplex_ls(A, b, ridge=reg.zeta, with_intercept=True, opts=opts)


def sdid_time_solution(
    Y, design: BlockDesign, opts: SolverOptions | None = None
) -> SimplexSolution:
    Y = _check_shape(Y, design)
    opts = opts or SolverOptions()
    A = Y[: design.n0, : design.t0]
    b = Y[: design.n0, design.t0 :].mean(axis=1)
    return solve_simplex_ls(A, b, ridge=opts.lambda_ridge, with_intercept=True, opts=opts)


def sdid_unit_weights(
    Y, design: BlockDesign, reg: Regularizer, opts: SolverOptions | None = None
) -> tuple[np.ndarray, float]:
    """Ridge-penalised, intercept-augmented unit weights.

    Returns ``(omega, omega0)``; the penalty ``zeta^2 * t0 * ||omega||^2``
    never touches the intercept.
    """
    sol = sdid_unit_solution(Y, design, reg, opts)
    return sol.weights, sol.intercept


def sdid_time_weights(
    Y, design: BlockDesign, opts: SolverOptions | None = None
) -> tuple[np.ndarray, float]:
    """Intercept-augmented pre-period weights predicting control post means.

    Returns ``(lam, lambda0)``.
    """
    sol = sdid_time_solution(Y, design, opts)
    return sol.weights, sol.intercept


def sdid_weights(
    Y, design: BlockDesign, opts: SolverOptions | None = None
) -> tuple[WeightSet, Regularizer]:
    """Full SDID weight set plus the regulariser computed from ``Y``."""
    reg = compute_zeta(design, sigma_hat_sq(Y, design))
    omega, omega0 = sdid_unit_weights(Y, design, reg, opts)
    lam, lambda0 = sdid_time_weights(Y, design, opts)
    ws = WeightSet(omega=omega, lam=lam, method=Method.SDID, omega0=omega0, lambda0=lambda0)
    return ws, reg


def fit_weights(
    Y, design: BlockDesign, method, opts: SolverOptions | None = None
) -> tuple[WeightSet, Regularizer | None]:
    method = Method.parse(method)
    if method is Method.DID:
        return did_weights(design), None
    if method is Method.SC:
        return sc_unit_weights(Y, design, opts), None
    return sdid_weights(Y, design, opts)
