"""Synthetic panels with a known effect, and brute-force oracles.

The oracles here are deliberately naive so they can check the fast paths
in :mod:`sdidkit.solver` and :mod:`sdidkit.estimator` independently.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .exceptions import InputError
from .panel import BlockDesign, Panel


class TooManyColumns(InputError):
    pass


@dataclass(frozen=True)
class DgpSpec:
    """Latent-factor panel with an additive effect on treated post cells."""

    n0: int = 20
    n1: int = 20
    t0: int = 8
    t1: int = 2
    effect: float = 0.0
    n_factors: int = 0
    factor_scale: float = 1.0
    noise_sd: float = 1.0
    unit_fe_sd: float = 1.0
    time_fe_sd: float = 1.0
    seed: int = 0

    def __post_init__(self):
        for name in ("n0", "n1", "t0", "t1"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")
        if self.n_factors < 0:
            raise ValueError("n_factors must be non-negative")
        for name in ("noise_sd", "unit_fe_sd", "time_fe_sd"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    def to_dict(self) -> dict:
        return asdict(self)


def quarter_labels(n: int, start_year: int = 2020) -> list[str]:
    return [f"{start_year + q // 4}Q{q % 4 + 1}" for q in range(n)]


def generate_panel(spec: DgpSpec) -> tuple[Panel, float]:
    """Draw a panel from ``spec``; controls come first, treated last.

    Y_it = unit_fe_i + time_fe_t + factor_scale * sum_k g_ik f_tk
           + effect * [i treated, t post] + eps_it
    """
    rng = np.random.default_rng(spec.seed)
    N, T = spec.n0 + spec.n1, spec.t0 + spec.t1
    alpha = rng.normal(0.0, 1.0, N) * spec.unit_fe_sd
    beta = rng.normal(0.0, 1.0, T) * spec.time_fe_sd
    Y = alpha[:, None] + beta[None, :]
    if spec.n_factors:
        loadings = rng.normal(size=(N, spec.n_factors))
        factors = rng.normal(size=(T, spec.n_factors))
        Y = Y + spec.factor_scale * loadings @ factors.T
    Y[spec.n0 :, spec.t0 :] += spec.effect
    if spec.noise_sd > 0:
        Y = Y + rng.normal(0.0, spec.noise_sd, size=(N, T))
    units = [f"C{i:03d}" for i in range(spec.n0)] + [f"T{i:03d}" for i in range(spec.n1)]
    periods = quarter_labels(T)
    panel = Panel(Y, tuple(units), tuple(periods), tuple(units[spec.n0 :]), periods[spec.t0])
    return panel, float(spec.effect)


def _simplex_grid(n: int, steps: int) -> np.ndarray:
    # lexicographic enumeration of nonnegative integer vectors summing to steps
    def compositions(k, total):
        if k == 1:
            yield (total,)
            return
        for first in range(total + 1):
            for rest in compositions(k - 1, total - first):
                yield (first,) + rest

    return np.array(list(compositions(n, steps)), dtype=float) / steps


def grid_oracle_weights(A, b, with_intercept: bool = False, resolution: float = 0.01,
                        ridge: float = 0.0) -> tuple[np.ndarray, float]:
    """Best simplex grid point for the ridge least-squares objective.

    Enumerates every point of the simplex grid with spacing
    ``resolution`` (at most 4 columns), profiles a free intercept out in
    closed form when requested, and returns the minimiser with its exact
    objective. Ties go to the lexicographically smallest weight vector.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    m, n = A.shape
    if n > 4:
        raise TooManyColumns(f"grid search supports at most 4 columns, got {n}")
    steps = round(1.0 / resolution)
    if abs(steps * resolution - 1.0) > 1e-9:
        raise ValueError("resolution must divide 1 evenly")
    if n == 1:
        grid = np.ones((1, 1))
    else:
        grid = _simplex_grid(n, steps)
    fitted = grid @ A.T  # one row per grid point
    resid = fitted - b[None, :]
    if with_intercept:
        resid = resid - resid.mean(axis=1, keepdims=True)
    obj = np.einsum("ij,ij->i", resid, resid) + ridge**2 * m * np.einsum("ij,ij->i", grid, grid)
    k = int(np.argmin(obj))
    return grid[k], float(obj[k])


def grid_discretization_bound(A, b, w, with_intercept: bool = False,
                              resolution: float = 0.01, ridge: float = 0.0) -> float:
    """Upper bound on (best grid objective) - (objective at ``w``).

    Some grid point ``g`` lies within ``resolution`` of ``w`` in every
    coordinate, so for the quadratic objective
    ``f(g) - f(w) <= |grad f(w)|_inf |g - w|_1 + L/2 |g - w|_2^2``
    with ``L`` the largest Hessian eigenvalue.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    m, n = A.shape
    if with_intercept:
        Ac, bc = A - A.mean(axis=0), b - b.mean()
    else:
        Ac, bc = A, b
    eta = ridge**2 * m
    grad = 2.0 * (Ac.T @ (Ac @ w - bc) + eta * w)
    hess_max = 2.0 * (np.linalg.norm(Ac, 2) ** 2 + eta)
    d1 = n * resolution
    d2 = n * resolution**2
    return float(np.abs(grad).max() * d1 + 0.5 * hess_max * d2)


def oracle_ate_did(Y, design: BlockDesign) -> float:
    """Four-means difference-in-differences by explicit summation."""
    Y = np.asarray(Y, dtype=float)
    n0, t0 = design.n0, design.t0
    N, T = Y.shape

    def cell_mean(rows, cols):
        total = 0.0
        count = 0
        for i in rows:
            for t in cols:
                total += float(Y[i, t])
                count += 1
        return total / count

    controls, treated = range(n0), range(n0, N)
    pre, post = range(t0), range(t0, T)
    return (
        cell_mean(treated, post)
        - cell_mean(treated, pre)
        - cell_mean(controls, post)
        + cell_mean(controls, pre)
    )
