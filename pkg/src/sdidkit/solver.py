"""Simplex-constrained ridge least squares.

Minimises

    ||c + A w - b||^2 + ridge^2 * rows(A) * ||w||^2

over ``w`` in the probability simplex, with the intercept ``c`` either
fixed at zero or free. A free intercept is profiled out exactly by
centering the columns of ``A`` and ``b``; it is never penalised.

Because ``sum(w) == 1``, the objective is the squared norm of a convex
combination of the points ``p_j = [A_j - b; ridge*sqrt(rows) e_j]``, so
the program is a minimum-norm-point problem over a polytope. It is solved
with Wolfe's fully corrective Frank-Wolfe scheme: each major step adds the
Frank-Wolfe vertex to an active set, and minor steps re-optimise exactly
over the affine hull of that set, dropping vertices whose weight hits zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .exceptions import DidNotConverge, DimensionMismatch

# Gap floor relative to the largest squared point norm; below it the
# iterate sits at rounding level.
_GAP_FLOOR = 1e-14
# Residual matrices smaller than this (relative to the data) count as zero.
FLAT_TOL = 1e-12


@dataclass(frozen=True)
class SolverOptions:
    """Knobs for :func:`solve_simplex_ls`.

    tol : relative duality-gap tolerance; the solver stops once the
        Frank-Wolfe gap (an upper bound on suboptimality) falls below
        ``tol * objective``.
    max_iter : budget of affine re-optimisations before
        :class:`DidNotConverge` is raised.
    lambda_ridge : ridge for the time-weight program (0 keeps it unpenalised).
    check_monotone : assert the objective never increases (test/debug aid).
    """

    tol: float = 1e-10
    max_iter: int = 10000
    lambda_ridge: float = 0.0
    check_monotone: bool = False


class SimplexSolution(NamedTuple):
    intercept: float | None
    weights: np.ndarray
    objective: float
    iterations: int
    gap: float


def simplex_objective(A, b, w, ridge=0.0, intercept=None) -> float:
    """Exact objective value at ``(intercept, w)``."""
    A = np.asarray(A, dtype=float)
    w = np.asarray(w, dtype=float)
    r = A @ w - np.asarray(b, dtype=float)
    if intercept is not None:
        r = r + intercept
    return float(r @ r + ridge**2 * A.shape[0] * (w @ w))


def _affine_minimizer(P: np.ndarray) -> np.ndarray:
    # min ||P a|| subject to sum(a) == 1, parametrised around the first column
    k = P.shape[1]
    if k == 1:
        return np.ones(1)
    base = P[:, 0]
    K = P[:, 1:] - base[:, None]
    beta = np.linalg.lstsq(K, -base, rcond=None)[0]
    return np.concatenate(([1.0 - beta.sum()], beta))


def _min_norm_point(P: np.ndarray, opts: SolverOptions, trace: list | None):
    n = P.shape[1]
    sq = np.einsum("ij,ij->j", P, P)
    floor = _GAP_FLOOR * max(float(sq.max()), np.finfo(float).tiny)

    j0 = int(np.argmin(sq))
    S = [j0]
    lam = np.ones(1)
    x = P[:, j0].copy()
    f = float(x @ x)
    iterations = 0
    gap = 0.0
    if trace is not None:
        trace.append(f)

    while True:
        g = P.T @ x
        j = int(np.argmin(g))
        gap = 2.0 * (f - float(g[j]))
        if gap <= opts.tol * f or gap <= floor or j in S:
            break
        if iterations >= opts.max_iter:
            w = np.zeros(n)
            w[S] = lam
            raise DidNotConverge(w, f, iterations, gap)

        S_prev, lam_prev = list(S), lam
        S.append(j)
        lam = np.append(lam, 0.0)
        while True:
            iterations += 1
            alpha = _affine_minimizer(P[:, S])
            if np.all(alpha > 0):
                lam = alpha
                break
            neg = np.flatnonzero(alpha <= 0)
            ratios = lam[neg] / (lam[neg] - alpha[neg])
            k = int(np.argmin(ratios))
            theta = float(ratios[k])
            lam = theta * alpha + (1.0 - theta) * lam
            lam[neg[k]] = 0.0
            keep = lam > 0
            S = [s for s, kp in zip(S, keep) if kp]
            lam = lam[keep]
            lam = lam / lam.sum()
            if iterations >= opts.max_iter:
                break

        x_new = P[:, S] @ lam
        f_new = float(x_new @ x_new)
        if trace is not None:
            trace.append(f_new)
        if opts.check_monotone:
            assert f_new <= f + 1e-12 * max(f, floor), "objective increased"
        if f_new >= f:
            # no progress: rounding level reached
            S, lam = S_prev, lam_prev
            break
        x, f = x_new, f_new

    w = np.zeros(n)
    w[S] = lam
    return w, iterations, gap


def solve_simplex_ls(
    A,
    b,
    ridge: float = 0.0,
    with_intercept: bool = False,
    opts: SolverOptions | None = None,
    trace: list | None = None,
) -> SimplexSolution:
    """Minimise the ridge least-squares objective over the simplex.

    Parameters
    ----------
    A : (m, n) array
    b : (m,) array
    ridge : float
        Penalty scale; the penalty is ``ridge**2 * m * ||w||^2``.
    with_intercept : bool
        Fit a free, unpenalised level shift.
    opts : SolverOptions, optional
    trace : list, optional
        If given, receives the objective after every major step.

    Returns
    -------
    SimplexSolution
        ``intercept`` is ``None`` unless ``with_intercept``; ``objective``
        is evaluated exactly at the returned point.

    Raises
    ------
    DimensionMismatch
        ``A`` is not a non-empty matrix or ``b`` does not match its rows.
    DidNotConverge
        The gap is still above tolerance after ``opts.max_iter`` steps.
    """
    opts = opts or SolverOptions()
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
        raise DimensionMismatch(f"A must be a non-empty matrix, got shape {A.shape}")
    if b.shape != (A.shape[0],):
        raise DimensionMismatch(f"b has shape {b.shape}, expected ({A.shape[0]},)")
    if ridge < 0:
        raise ValueError("ridge must be non-negative")

    m, n = A.shape
    if n == 1:
        w = np.ones(1)
        iterations, gap = 0, 0.0
    else:
        if with_intercept:
            D = (A - A.mean(axis=0)) - (b - b.mean())[:, None]
        else:
            D = A - b[:, None]
        eta = ridge**2 * m
        P = np.vstack([D, np.sqrt(eta) * np.eye(n)]) if eta > 0 else D
        scale = max(np.abs(A).max(), np.abs(b).max())
        try:
            if np.abs(D).max() <= FLAT_TOL * scale:
                # every simplex point fits equally well (up to rounding), so
                # take the minimum-norm one rather than letting noise decide
                w, iterations, gap = np.full(n, 1.0 / n), 0, 0.0
                if trace is not None:
                    trace.append(float(eta / n))
            else:
                w, iterations, gap = _min_norm_point(P, opts, trace)
        except DidNotConverge as exc:
            c = float(np.mean(b - A @ exc.weights)) if with_intercept else None
            raise DidNotConverge(
                exc.weights,
                simplex_objective(A, b, exc.weights, ridge, c),
                exc.iterations,
                exc.gap,
                c,
            ) from None

    intercept = float(np.mean(b - A @ w)) if with_intercept else None
    return SimplexSolution(
        intercept, w, simplex_objective(A, b, w, ridge, intercept), iterations, gap
    )
