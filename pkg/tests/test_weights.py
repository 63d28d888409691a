from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_panel
from sdidkit.dgp import grid_oracle_weights
from sdidkit.exceptions import InsufficientPrePeriods
from sdidkit.panel import BlockDesign, block_matrix, to_block
from sdidkit.solver import simplex_objective
from sdidkit.weights import (
    Method,
    Regularizer,
    WeightSet,
    compute_zeta,
    did_weights,
    fit_weights,
    sc_unit_weights,
    sdid_time_solution,
    sdid_time_weights,
    sdid_unit_solution,
    sdid_unit_weights,
    sdid_weights,
    sigma_hat_sq,
)


def design(n0, n1, t0, t1):
    return BlockDesign(n0, n1, t0, t1, tuple(range(n0 + n1)))


def fraction_sigma(rows):
    deltas = [Fraction(r[k + 1]) - Fraction(r[k]) for r in rows for k in range(len(r) - 1)]
    mean = sum(deltas) / len(deltas)
    return sum((d - mean) ** 2 for d in deltas) / len(deltas)


def test_did_weights_uniform():
    w = did_weights(design(4, 1, 5, 1))
    assert w.omega.tolist() == [0.25] * 4
    np.testing.assert_allclose(w.lam, 0.2)
    assert w.check() == []
    assert did_weights(design(1, 1, 2, 1)).omega.tolist() == [1.0]
    w = did_weights(design(27, 120, 11, 2))
    assert w.omega[0] == 1 / 27 and w.lam[0] == 1 / 11


def test_sigma_hat_sq_worked_instance():
    Y = np.array([[0, 1, 3, 9], [0, 2, 2, 9], [5, 5, 5, 5]], dtype=float)
    d = design(2, 1, 3, 1)
    assert sigma_hat_sq(Y, d) == 0.6875
    assert fraction_sigma([[0, 1, 3], [0, 2, 2]]) == Fraction(11, 16)


def test_sigma_hat_sq_trivial_cases():
    d = design(3, 1, 4, 1)
    Y = np.full((4, 5), 2.5)
    assert sigma_hat_sq(Y, d) == 0.0
    Y = np.add.outer(np.array([1.0, -4.0, 7.0, 0.0]), 3.0 * np.arange(5))
    assert sigma_hat_sq(Y, d) == pytest.approx(0.0, abs=1e-24)
    with pytest.raises(InsufficientPrePeriods):
        sigma_hat_sq(np.zeros((2, 2)), design(1, 1, 1, 1))


def test_sigma_hat_sq_matches_rational_oracle(rng):
    for _ in range(20):
        ints = rng.integers(-50, 50, size=(5, 7))
        d = design(4, 1, 6, 1)
        exact = fraction_sigma(ints[:4, :6].tolist())
        assert sigma_hat_sq(ints.astype(float), d) == pytest.approx(float(exact), rel=1e-12)


def test_sigma_hat_sq_invariances(rng):
    d = design(5, 2, 6, 2)
    Y = rng.normal(size=(7, 8))
    base = sigma_hat_sq(Y, d)
    assert sigma_hat_sq(Y + 123.4, d) == pytest.approx(base, rel=1e-9)
    trend = Y.copy()
    trend[:5] += 0.7 * np.arange(8)
    assert sigma_hat_sq(trend, d) == pytest.approx(base, rel=1e-9)


def test_compute_zeta():
    reg = compute_zeta(design(27, 120, 11, 2), 4.0)
    assert reg.zeta == pytest.approx(240 ** 0.25 * 2, rel=1e-12)
    assert compute_zeta(design(2, 3, 2, 5), 0.0).zeta == 0.0
    with pytest.raises(ValueError):
        compute_zeta(design(2, 3, 2, 5), -1.0)


def test_sc_exact_single_control():
    Y = np.array([[1, 4, 2, 8], [3, 0, 5, 5], [1, 4, 2, 10]], dtype=float)
    w = sc_unit_weights(Y, design(2, 1, 3, 1))
    np.testing.assert_allclose(w.omega, [1, 0], atol=1e-12)
    assert w.lam.tolist() == [0, 0, 0]
    assert w.omega0 is None and w.check() == []


def test_sc_convex_combination():
    c1 = np.array([1.0, 3.0, 2.0, 6.0, 4.0])
    c2 = np.array([5.0, 1.0, 4.0, 0.0, 2.0])
    treated = 0.5 * (c1 + c2)
    Y = np.vstack([c1, c2, treated - 0.3, treated + 0.3])
    d = design(2, 2, 4, 1)
    w = sc_unit_weights(Y, d)
    np.testing.assert_allclose(w.omega, [0.5, 0.5], atol=1e-6)
    grid_w, grid_obj = grid_oracle_weights(Y[:2, :4].T, Y[2:, :4].mean(axis=0))
    np.testing.assert_allclose(grid_w, [0.5, 0.5])
    assert grid_obj == pytest.approx(0.0, abs=1e-20)


def test_sdid_shifted_controls(rng):
    treated_mean = rng.normal(size=6) * 3
    c = 2.5
    Y = np.vstack([np.tile(treated_mean - c, (4, 1)), treated_mean, treated_mean])
    d = design(4, 2, 5, 1)
    reg = compute_zeta(d, sigma_hat_sq(Y, d))
    omega, omega0 = sdid_unit_weights(Y, d, reg)
    np.testing.assert_allclose(omega, 0.25, atol=1e-8)
    assert omega0 == pytest.approx(c, abs=1e-8)
    sol = sdid_unit_solution(Y, d, reg)
    # only the ridge term remains
    assert sol.objective == pytest.approx(reg.zeta ** 2 * 5 * 0.25, rel=1e-8)


def test_sdid_zeta_zero_exact_fit():
    c1 = np.array([1.0, 3.0, 2.0, 6.0])
    c2 = np.array([5.0, 1.0, 4.0, 0.0])
    Y = np.vstack([c1, c2, 0.3 * c1 + 0.7 * c2 + 4.0])
    d = design(2, 1, 3, 1)
    sol = sdid_unit_solution(Y, d, Regularizer(0.0, 0.0))
    np.testing.assert_allclose(sol.weights, [0.3, 0.7], atol=1e-9)
    assert sol.intercept == pytest.approx(4.0)
    assert sol.objective < 1e-20


def test_huge_zeta_gives_uniform(rng):
    for _ in range(10):
        panel = random_panel(rng)
        d = to_block(panel)
        if d.t0 < 2:
            continue
        Y = block_matrix(panel, d)
        reg = compute_zeta(d, sigma_hat_sq(Y, d))
        big = Regularizer(reg.zeta * 1e6, reg.sigma_hat_sq)
        omega, _ = sdid_unit_weights(Y, d, big)
        assert np.max(np.abs(omega - 1 / d.n0)) <= 1e-4


def test_time_weights_single_pre_period():
    Y = np.array([[1.0, 4.0], [2.0, 2.0], [0.0, 9.0]])
    lam, lambda0 = sdid_time_weights(Y, design(2, 1, 1, 1))
    assert lam.tolist() == [1.0]
    assert lambda0 == pytest.approx(np.mean([3.0, 0.0]))


def test_time_weights_constant_controls():
    Y = np.vstack([np.full((3, 5), 7.0), np.arange(5.0)])
    sol = sdid_time_solution(Y, design(3, 1, 3, 2))
    assert abs(sol.weights.sum() - 1) <= 1e-12 and sol.weights.min() >= 0
    assert sol.objective == pytest.approx(0.0, abs=1e-20)
    assert sol.intercept == pytest.approx(0.0, abs=1e-12)


def test_time_weights_concentrate_on_last_pre_period(rng):
    pre = rng.normal(size=(8, 3)) * 4
    post = np.repeat(pre[:, -1:], 2, axis=1)
    Y = np.vstack([np.hstack([pre, post]), rng.normal(size=(1, 5))])
    d = design(8, 1, 3, 2)
    lam, lambda0 = sdid_time_weights(Y, d)
    np.testing.assert_allclose(lam, [0, 0, 1], atol=1e-4)
    assert lambda0 == pytest.approx(0.0, abs=1e-6)


def test_weight_set_round_trip_and_checks():
    ws = WeightSet(np.array([0.4, 0.6]), np.array([1.0]), Method.SDID, 0.5, -1.0)
    assert WeightSet.from_dict(ws.to_dict()).to_dict() == ws.to_dict()
    assert ws.check() == []
    bad = WeightSet(np.array([0.4, 0.7]), np.array([0.1]), Method.SC)
    problems = bad.check()
    assert len(problems) == 2
    assert WeightSet(np.array([1.0]), np.array([1.0]), Method.DID, omega0=0.0).check()


def test_method_parse():
    assert Method.parse("sdid") is Method.SDID
    assert Method.parse(Method.SC) is Method.SC
    with pytest.raises(ValueError):
        Method.parse("ols")


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-1e3, 1e3), st.floats(0.01, 100))
def test_weights_invariant_to_shift_and_scale(seed, c, k):
    panel = random_panel(np.random.default_rng(seed), max_n=10, max_t=8)
    d = to_block(panel)
    Y = block_matrix(panel, d)
    for method in (Method.SC, Method.SDID):
        if method is Method.SDID and d.t0 < 2:
            continue
        w, _ = fit_weights(Y, d, method)
        for Y2 in (Y + c, Y * k):
            w2, _ = fit_weights(Y2, d, method)
            # minimisers need not be unique, so compare objectives
            _assert_equivalent_fit(Y, Y2, d, w, w2, method)


def _assert_equivalent_fit(Y, Y2, d, w, w2, method):
    if method is Method.SC:
        A = Y[: d.n0, : d.t0].T
        b = Y[d.n0 :, : d.t0].mean(0)
        r1 = np.sum((A @ w.omega - b) ** 2)
        r2 = np.sum((A @ w2.omega - b) ** 2)
        scale = max(1.0, np.sum(b ** 2))
        assert abs(r1 - r2) <= 1e-8 * scale
    else:
        assert w2.check() == []
        reg = compute_zeta(d, sigma_hat_sq(Y, d))
        s1 = sdid_unit_solution(Y, d, reg)
        # the transformed problem's weights must be optimal for the original one
        A = Y[: d.n0, : d.t0].T
        b = Y[d.n0 :, : d.t0].mean(0)
        c2 = float(np.mean(b - A @ w2.omega))
        f2 = simplex_objective(A, b, w2.omega, reg.zeta, c2)
        assert f2 <= s1.objective + 1e-8 * max(1.0, s1.objective, np.sum(b ** 2))


def test_sdid_weights_bundle(rng):
    panel = random_panel(rng)
    d = to_block(panel)
    while d.t0 < 2:
        panel = random_panel(rng)
        d = to_block(panel)
    ws, reg = sdid_weights(block_matrix(panel, d), d)
    assert ws.check() == []
    assert reg.zeta == pytest.approx((d.n1 * d.t1) ** 0.25 * reg.sigma_hat_sq ** 0.5, rel=1e-12)
