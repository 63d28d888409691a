"""Clustered (unit-level) bootstrap standard errors."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .estimator import AteEstimate, estimate_block, panel_digest, with_se
from .exceptions import DegenerateDesign, ProvenanceMismatch, TooManyRedraws
from .panel import BlockDesign, Panel
from .solver import SolverOptions
from .weights import Method


@dataclass(frozen=True)
class BootstrapResult:
    se: float
    replicates: int
    estimates: np.ndarray
    redraws: int
    seed: int
    method: Method
    panel_digest: str | None = None

    def to_dict(self) -> dict:
        return {
            "se": self.se,
            "replicates": self.replicates,
            "redraws": self.redraws,
            "seed": self.seed,
            "method": self.method.value,
            "panel_digest": self.panel_digest,
        }


def replicate_rng(seed: int, b: int) -> np.random.Generator:
    """Generator for replicate ``b``; depends only on ``(seed, b)``."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(b,)))


def _replicate(Y, treated, t0, method, seed, b, limit, opts):
    rng = replicate_rng(seed, b)
    N = len(treated)
    redraws = 0
    while True:
        idx = rng.integers(0, N, size=N)
        tr = treated[idx]
        n1 = int(tr.sum())
        if 0 < n1 < N:
            break
        redraws += 1
        if redraws > limit:
            raise TooManyRedraws(redraws, limit)
    order = np.concatenate([idx[~tr], idx[tr]])
    T = Y.shape[1]
    design = BlockDesign(n0=N - n1, n1=n1, t0=t0, t1=T - t0, row_order=tuple(range(N)))
    ate, _, _ = estimate_block(Y[order], design, method, opts)
    return ate, redraws


def bootstrap_se(
    panel: Panel,
    method,
    B: int = 1000,
    seed: int = 0,
    opts: SolverOptions | None = None,
    max_redraws: int | None = None,
    n_jobs: int = 1,
) -> BootstrapResult:
    """Unit-resampling bootstrap of the ATE.

    Each replicate draws N units with replacement, keeping each unit's
    whole series and treatment status; resamples lacking treated or
    control units are redrawn and counted. The full estimator, weights
    and regulariser included, is re-run on every resample. The standard
    error uses the ``B - 1`` divisor.

    Parameters
    ----------
    max_redraws : int, optional
        Cap on the total number of degenerate resamples (default ``100 * B``).
    n_jobs : int
        Replicates run through joblib when not 1; results do not depend
        on this setting.
    """
    method = Method.parse(method)
    if B < 2:
        raise ValueError("B must be at least 2")
    treated = panel.treated_mask()
    if not panel.has_treatment or treated.all() or not treated.any():
        raise DegenerateDesign("bootstrap needs both treated and control units")
    limit = 100 * B if max_redraws is None else int(max_redraws)
    Y = np.asarray(panel.outcomes)
    t0 = int(np.argmax(panel.post_mask()))
    args = (Y, treated, t0, method, seed)

    if n_jobs == 1:
        out = [_replicate(*args, b, limit, opts) for b in range(B)]
    else:
        from joblib import Parallel, delayed

        out = Parallel(n_jobs=n_jobs)(
            delayed(_replicate)(*args, b, limit, opts) for b in range(B)
        )
    estimates = np.array([ate for ate, _ in out])
    redraws = sum(r for _, r in out)
    if redraws > limit:
        raise TooManyRedraws(redraws, limit)
    return BootstrapResult(
        se=float(np.std(estimates, ddof=1)),
        replicates=B,
        estimates=estimates,
        redraws=redraws,
        seed=seed,
        method=method,
        panel_digest=panel_digest(panel),
    )


def attach_inference(est: AteEstimate, boot: BootstrapResult) -> AteEstimate:
    """Fill ``se`` and significance stars from a bootstrap run."""
    if est.method is not boot.method:
        raise ProvenanceMismatch(
            f"estimate is {est.method.value} but bootstrap is {boot.method.value}"
        )
    if est.panel_digest and boot.panel_digest and est.panel_digest != boot.panel_digest:
        raise ProvenanceMismatch("estimate and bootstrap come from different panels")
    return with_se(est, boot.se)
