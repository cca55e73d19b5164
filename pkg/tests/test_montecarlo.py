import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.optimize import least_squares
from scipy.stats import binomtest

from sweepca.lattices import LatticeSpec
from sweepca.montecarlo import (CurvePoint, FailureCurve, FitError, ansatz, ansatz_jacobian,
                                estimate_curve, find_threshold, fit_sustainable,
                                levenberg_marquardt, threshold_vs_cycles, trial_seed,
                                wilson_interval)


# -- Wilson interval ------------------------------------------------------------------------

def test_wilson_known_values():
    # closed form evaluated by hand for 5 / 20 at z = 1.96
    lo, hi = wilson_interval(5, 20, z=1.96)
    z2, n, q = 1.96 ** 2, 20, 0.25
    centre = (q + z2 / (2 * n)) / (1 + z2 / n)
    half = 1.96 * math.sqrt(q * (1 - q) / n + z2 / (4 * n * n)) / (1 + z2 / n)
    assert lo == pytest.approx(centre - half, abs=1e-15)
    assert hi == pytest.approx(centre + half, abs=1e-15)
    assert wilson_interval(0, 10)[0] == 0.0
    assert wilson_interval(10, 10)[1] == 1.0
    with pytest.raises(ValueError):
        wilson_interval(0, 0)


def test_wilson_matches_scipy():
    for k, n in [(0, 50), (3, 50), (25, 50), (1000, 2000)]:
        ci = binomtest(k, n).proportion_ci(method="wilson")
        lo, hi = wilson_interval(k, n)
        assert lo == pytest.approx(ci.low, abs=1e-12)
        assert hi == pytest.approx(ci.high, abs=1e-12)


def test_wilson_coverage():
    rng = np.random.default_rng(0)
    q, n, reps = 0.07, 400, 2000
    hits = 0
    for k in rng.binomial(n, q, size=reps):
        lo, hi = wilson_interval(int(k), n)
        hits += lo <= q <= hi
    # nominal 95%, allow 3 standard errors of slack from below
    assert hits / reps >= 0.95 - 3 * math.sqrt(0.95 * 0.05 / reps)


@given(st.integers(1, 5000), st.data())
def test_wilson_contains_estimate(n, data):
    k = data.draw(st.integers(0, n))
    lo, hi = wilson_interval(k, n)
    assert 0.0 <= lo <= k / n <= hi <= 1.0


# -- seeds and curves --------------------------------------------------------------------------

def test_trial_seeds_are_distinct_and_stable():
    a = trial_seed(1, 0, 0, 0, 0).generate_state(2).tolist()
    assert a == trial_seed(1, 0, 0, 0, 0).generate_state(2).tolist()
    keys = {tuple(trial_seed(1, *k).generate_state(2)) for k in
            [(0, 0, 0, 0), (0, 0, 0, 1), (0, 1, 0, 0), (1, 0, 0, 0), (0, 0, 1, 0)]}
    assert len(keys) == 5


def test_curve_requires_increasing_p():
    with pytest.raises(ValueError):
        FailureCurve("bcc3d", 4, 1, [CurvePoint(0.02, 10, 1), CurvePoint(0.01, 10, 1)])


def test_estimate_curve_zero_point_and_determinism():
    spec = LatticeSpec("bcc3d", 4)
    a = estimate_curve(spec, [0.0, 0.05], 1, 30, seed=3)
    assert a.points[0].failures == 0
    b = estimate_curve(spec, [0.0, 0.05], 1, 30, seed=3)
    assert a == b
    c = estimate_curve(spec, [0.0, 0.05], 1, 30, seed=3, workers=2)
    assert a == c
    with pytest.raises(ValueError):
        estimate_curve(spec, [0.01], 1, 0, seed=3)


# -- Levenberg-Marquardt -----------------------------------------------------------------------

def test_lm_matches_scipy_on_rosenbrock():
    def r(x):
        return np.array([10 * (x[1] - x[0] ** 2), 1 - x[0]])

    ours = levenberg_marquardt(r, [-1.2, 1.0])
    ref = least_squares(r, [-1.2, 1.0], method="lm", xtol=1e-15, ftol=1e-15)
    assert ours.converged
    np.testing.assert_allclose(ours.x, ref.x, atol=1e-8)


def test_lm_matches_scipy_on_exponential_data():
    rng = np.random.default_rng(1)
    t = np.linspace(0, 4, 40)
    y = 2.5 * np.exp(-1.3 * t) + 0.4 + rng.normal(0, 0.01, t.size)

    def r(q):
        return q[0] * np.exp(-q[1] * t) + q[2] - y

    def J(q):
        e = np.exp(-q[1] * t)
        return np.column_stack([e, -q[0] * t * e, np.ones_like(t)])

    ours = levenberg_marquardt(r, [1.0, 1.0, 0.0], jac=J)
    ref = least_squares(r, [1.0, 1.0, 0.0], jac=J, method="lm", xtol=1e-15, ftol=1e-15)
    np.testing.assert_allclose(ours.x, ref.x, rtol=1e-7)


def test_ansatz_jacobian_matches_finite_differences():
    n = np.array([1.0, 2, 4, 8, 64])
    q = np.array([0.0099, 0.855, 0.0785])
    J = ansatz_jacobian(n, *q)
    h = 1e-7
    for i in range(3):
        dq = q.copy()
        dq[i] += h
        np.testing.assert_allclose(J[:, i], (ansatz(n, *dq) - ansatz(n, *q)) / h, rtol=1e-4, atol=1e-9)


# -- threshold fit -------------------------------------------------------------------------------

def synthetic_curves(pth, nu, coeffs, Ls=(8, 12, 16), ps=None, trials=10**6):
    ps = np.linspace(pth - 0.004, pth + 0.004, 9) if ps is None else ps
    a, b, c = coeffs
    out = []
    for L in Ls:
        x = (ps - pth) * L ** (1 / nu)
        y = a + b * x + c * x * x
        # the fitter reads rates as failures / trials; use exact rationals
        pts = [CurvePoint(float(p), trials, int(round(v * trials))) for p, v in zip(ps, y)]
        out.append(FailureCurve("bcc3d", L, 1, pts))
    return out


def test_threshold_recovered_from_exact_model():
    curves = synthetic_curves(0.02, 1.0, (0.3, 0.4, 0.5), trials=2**40)
    est = find_threshold(curves, n_boot=0, weighted=False)
    assert abs(est.p_th - 0.02) < 1e-6
    assert abs(est.nu - 1.0) < 1e-4
    assert est.residual_norm < 1e-6


def test_threshold_rejects_degenerate_inputs():
    curves = synthetic_curves(0.02, 1.0, (0.3, 0.4, 0.5))
    with pytest.raises(FitError) as err:
        find_threshold([curves[0], curves[0]], n_boot=0)
    assert err.value.code == "NO_CROSSING"
    flat = [FailureCurve("bcc3d", L, 1, [CurvePoint(p, 100, 10) for p in (0.01, 0.02, 0.03)])
            for L in (8, 12)]
    with pytest.raises(FitError):
        find_threshold(flat, n_boot=0)


def test_threshold_bootstrap_error_is_reported():
    rng = np.random.default_rng(2)
    curves = synthetic_curves(0.08, 1.2, (0.35, 0.5, 0.1), trials=4000)
    noisy = [FailureCurve(c.family, c.L, 1, [CurvePoint(pt.p, pt.trials,
                          int(rng.binomial(pt.trials, pt.rate))) for pt in c.points]) for c in curves]
    est = find_threshold(noisy, n_boot=50)
    assert abs(est.p_th - 0.08) < 5 * est.p_th_err + 1e-4
    assert est.p_th_err > 0


# -- sustainable threshold -------------------------------------------------------------------------

N_CYC = [1, 2, 4, 8, 16, 32, 64, 128, 256]


def test_sustainable_exact_recovery():
    truth = (0.0099, 0.855, 0.0785)
    pts = [(n, float(ansatz(n, *truth))) for n in N_CYC]
    fit = fit_sustainable(pts, n_boot=0)
    assert abs(fit.p_sus - truth[0]) < 1e-8
    assert abs(fit.gamma - truth[1]) < 1e-8
    assert fit.residual_norm < 1e-6
    fit = fit_sustainable(pts, cofit_p1=True, n_boot=0)
    assert abs(fit.p_sus - truth[0]) < 1e-8 and abs(fit.p_th_1 - truth[2]) < 1e-8


def test_sustainable_matches_scipy_oracle():
    rng = np.random.default_rng(4)
    n = np.array(N_CYC, dtype=float)
    y = ansatz(n, 0.0198, 0.8, 0.09) + rng.normal(0, 2e-4, n.size)
    y[0] = 0.09
    fit = fit_sustainable(list(zip(n, y)), n_boot=0)
    ref = least_squares(lambda q: ansatz(n, q[0], q[1], 0.09) - y, [0.02, 1.0], method="lm",
                        xtol=1e-15, ftol=1e-15)
    np.testing.assert_allclose([fit.p_sus, fit.gamma], ref.x, rtol=1e-6)


def test_sustainable_input_checks():
    with pytest.raises(ValueError):
        fit_sustainable([(2, 0.02), (4, 0.015), (8, 0.012)])
    with pytest.raises(ValueError):
        fit_sustainable([(1, 0.08), (2, 0.05)])


def test_sustainable_bootstrap_errors():
    n = np.array(N_CYC[:7], dtype=float)
    rng = np.random.default_rng(6)
    sig = np.full(n.size, 3e-4)
    y = ansatz(n, 0.0099, 0.855, 0.0785) + rng.normal(0, sig)
    fit = fit_sustainable(list(zip(n, y)), errors=sig, n_boot=100)
    assert 0 < fit.p_sus_err < 0.005
    assert abs(fit.p_sus - 0.0099) < 5 * fit.p_sus_err


@given(st.floats(0.002, 0.05), st.floats(0.2, 2.0), st.floats(0.0, 0.1))
def test_ansatz_monotone_and_bounded(p_sus, gamma, extra):
    p1 = p_sus + extra + 1e-4
    vals = ansatz(np.array([1, 2, 4, 16, 256, 4096], dtype=float), p_sus, gamma, p1)
    assert vals[0] == pytest.approx(p1)
    assert np.all(np.diff(vals) < 0)
    assert np.all(vals > p_sus)


def test_threshold_vs_cycles_streams_and_errors():
    grids = {1: [0.02, 0.05], 2: [0.01, 0.03]}
    res = threshold_vs_cycles("bcc3d", [4], grids, 10, seed=4, n_boot=0)
    assert [n for n, _, _ in res] == [1, 2]
    # a single size has no crossing: the error is returned, not raised
    assert all(isinstance(est, FitError) for _, est, _ in res)
    n, _, curves = res[1]
    direct = estimate_curve(LatticeSpec("bcc3d", 4), grids[2], 2, 10, 4, n_idx=1, workers=1)
    assert curves[0].points == direct.points and curves[0].n_cyc == 2
