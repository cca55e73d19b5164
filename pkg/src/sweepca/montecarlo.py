"""Failure-rate estimation, finite-size-scaling threshold fits and the
sustainable-threshold ansatz fit.

Seeds: every trial draws from ``SeedSequence(master, spawn_key=(L_idx, p_idx,
n_idx, trial))``, so results do not depend on how trials are distributed over
workers or in which order they run.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .lattices import LatticeSpec, build
from .noise import NoiseParams, run_memory_trial
from .sweep import SweepConfig

Z_95 = 1.959963984540054


class FitError(RuntimeError):
    """Raised when a fit cannot proceed (NO_CROSSING) or fails (DIVERGED)."""

    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code


# -- statistics --------------------------------------------------------------------

def wilson_interval(failures: int, trials: int, z: float = Z_95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        raise ValueError("trials must be positive")
    q = failures / trials
    z2 = z * z
    denom = 1 + z2 / trials
    centre = (q + z2 / (2 * trials)) / denom
    half = z * math.sqrt(q * (1 - q) / trials + z2 / (4 * trials * trials)) / denom
    # the exact endpoints at q = 0 and q = 1 are 0 and 1; avoid rounding residue
    lo = 0.0 if failures == 0 else max(0.0, centre - half)
    hi = 1.0 if failures == trials else min(1.0, centre + half)
    return lo, hi


def trial_seed(master: int, L_idx: int, p_idx: int, n_idx: int, trial: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(int(master), spawn_key=(int(L_idx), int(p_idx), int(n_idx), int(trial)))


def default_workers() -> int:
    return max(1, int(os.environ.get("SWEEPCA_WORKERS", "1")))


# -- failure curves ------------------------------------------------------------------

@dataclass
class CurvePoint:
    p: float
    trials: int
    failures: int
    timeouts: int = 0

    @property
    def rate(self) -> float:
        return self.failures / self.trials

    @property
    def ci(self) -> tuple[float, float]:
        return wilson_interval(self.failures, self.trials)


@dataclass
class FailureCurve:
    family: str
    L: int
    n_cyc: int
    points: list = field(default_factory=list)

    def __post_init__(self):
        ps = [pt.p for pt in self.points]
        if any(b <= a for a, b in zip(ps, ps[1:])):
            raise ValueError("curve points must have strictly increasing p")

    @property
    def p(self) -> np.ndarray:
        return np.array([pt.p for pt in self.points])

    @property
    def rates(self) -> np.ndarray:
        return np.array([pt.rate for pt in self.points])

    def rows(self, seed=None) -> list[dict]:
        out = []
        for pt in self.points:
            lo, hi = pt.ci
            out.append({"lattice": self.family, "L": self.L, "p": pt.p, "N_cyc": self.n_cyc,
                        "trials": pt.trials, "failures": pt.failures,
                        "wilson_low": lo, "wilson_high": hi, "seed": seed})
        return out


def _run_chunk(args):
    spec, noise, cfg, tmax, master, idx, trials = args
    lat = build(spec)
    fails = timeouts = 0
    for t in trials:
        rng = np.random.default_rng(trial_seed(master, *idx, t))
        rec = run_memory_trial(lat, noise, cfg, rng=rng, tmax=tmax)
        fails += rec.failed
        timeouts += rec.outcome == "timeout"
    return fails, timeouts


def _chunks(n: int, parts: int) -> list[range]:
    parts = max(1, min(parts, n))
    bounds = np.linspace(0, n, parts + 1).astype(int)
    return [range(a, b) for a, b in zip(bounds, bounds[1:]) if b > a]


def estimate_curve(spec: LatticeSpec, ps, n_cyc: int, trials: int, seed: int,
                   cfg: SweepConfig = SweepConfig(), *, L_idx: int = 0, n_idx: int = 0,
                   p_meas_factor: float = 1.0, sweeps_per_cycle: int = 1,
                   tmax: int | None = None, workers: int | None = None) -> FailureCurve:
    """Failure rates of the memory experiment over a grid of error rates."""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    ps = [float(p) for p in ps]
    workers = default_workers() if workers is None else int(workers)
    jobs = []
    for p_idx, p in enumerate(ps):
        noise = NoiseParams(p_data=p, p_meas=min(1.0, p * p_meas_factor), n_cyc=n_cyc,
                            sweeps_per_cycle=sweeps_per_cycle)
        for rng_part in _chunks(trials, workers):
            jobs.append((p_idx, (spec, noise, cfg, tmax, seed, (L_idx, p_idx, n_idx), rng_part)))
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_run_chunk, [j for _, j in jobs]))
    else:
        results = [_run_chunk(j) for _, j in jobs]
    fails = np.zeros(len(ps), dtype=int)
    touts = np.zeros(len(ps), dtype=int)
    for (p_idx, _), (f, t) in zip(jobs, results):
        fails[p_idx] += f
        touts[p_idx] += t
    pts = [CurvePoint(p, trials, int(f), int(t)) for p, f, t in zip(ps, fails, touts)]
    return FailureCurve(spec.family, spec.size, n_cyc, pts)


# -- nonlinear least squares -------------------------------------------------------------

@dataclass
class LMResult:
    x: np.ndarray
    cost: float
    iterations: int
    converged: bool
    jac: np.ndarray


def levenberg_marquardt(residual, x0, jac=None, *, max_iter: int = 500, xtol: float = 1e-15,
                        gtol: float = 1e-20, lam0: float = 1e-3) -> LMResult:
    """Minimise 0.5*|r(x)|^2 by damped Gauss-Newton with Marquardt scaling.

    ``jac`` returns the Jacobian dr/dx; a forward-difference Jacobian is used
    when omitted."""
    x = np.asarray(x0, dtype=float).copy()

    def jacobian(x):
        if jac is not None:
            return np.asarray(jac(x), dtype=float)
        r0 = residual(x)
        J = np.empty((r0.size, x.size))
        for i in range(x.size):
            h = 1e-7 * max(1.0, abs(x[i]))
            xp = x.copy()
            xp[i] += h
            J[:, i] = (residual(xp) - r0) / h
        return J

    r = residual(x)
    cost = 0.5 * float(r @ r)
    lam = lam0
    J = jacobian(x)
    for it in range(1, max_iter + 1):
        g = J.T @ r
        if np.max(np.abs(g)) <= gtol:
            return LMResult(x, cost, it, True, J)
        A = J.T @ J
        diag = np.diag(A).copy()
        diag[diag == 0] = 1.0
        improved = False
        while lam < 1e16:
            try:
                step = np.linalg.solve(A + lam * np.diag(diag), -g)
            except np.linalg.LinAlgError:
                lam *= 10
                continue
            x_new = x + step
            r_new = residual(x_new)
            cost_new = 0.5 * float(r_new @ r_new)
            if np.isfinite(cost_new) and cost_new <= cost:
                small = np.linalg.norm(step) <= xtol * (np.linalg.norm(x) + xtol)
                x, r, cost = x_new, r_new, cost_new
                lam = max(lam / 10, 1e-12)
                improved = True
                break
            lam *= 10
        if not improved:
            # no descent possible: at a (numerical) minimum
            return LMResult(x, cost, it, True, J)
        J = jacobian(x)
        if small:
            return LMResult(x, cost, it, True, J)
    return LMResult(x, cost, max_iter, False, J)


# -- threshold from crossing curves -------------------------------------------------------

@dataclass
class ThresholdEstimate:
    p_th: float
    p_th_err: float
    nu: float
    nu_err: float
    coefficients: tuple
    residual_norm: float
    window: tuple
    n_points: int

    def to_dict(self) -> dict:
        d = asdict(self)
        d["coefficients"] = list(self.coefficients)
        d["window"] = list(self.window)
        return d


def _scaling_residual(params, p, L, y, w):
    pth, nu, a, b, c = params
    x = (p - pth) * L ** (1.0 / nu)
    return w * (a + b * x + c * x * x - y)


def _scaling_jac(params, p, L, y, w):
    pth, nu, a, b, c = params
    s = L ** (1.0 / nu)
    x = (p - pth) * s
    dfdx = b + 2 * c * x
    dx_dpth = -s
    dx_dnu = (p - pth) * s * np.log(L) * (-1.0 / nu ** 2)
    return w[:, None] * np.column_stack([dfdx * dx_dpth, dfdx * dx_dnu, np.ones_like(x), x, x * x])


def _crossing_guess(curves):
    lo = min(curves, key=lambda c: c.L)
    hi = max(curves, key=lambda c: c.L)
    grid = np.union1d(lo.p, hi.p)
    diff = np.interp(grid, hi.p, hi.rates) - np.interp(grid, lo.p, lo.rates)
    d0, d1 = diff[:-1], diff[1:]
    # larger systems fail less below threshold and more above it
    idx = np.flatnonzero(((d0 <= 0) & (d1 > 0)) | ((d0 < 0) & (d1 >= 0)))
    if len(idx) == 0:
        return None
    i = idx[0]
    return float(grid[i] - diff[i] * (grid[i + 1] - grid[i]) / (diff[i + 1] - diff[i]))


def _fit_scaling(curves, window, weighted=True):
    p = np.concatenate([c.p for c in curves])
    L = np.concatenate([np.full(len(c.points), float(c.L)) for c in curves])
    y = np.concatenate([c.rates for c in curves])
    n = np.concatenate([[pt.trials for pt in c.points] for c in curves]).astype(float)
    if window is not None:
        keep = (p >= window[0]) & (p <= window[1])
        p, L, y, n = p[keep], L[keep], y[keep], n[keep]
    if len(p) < 5:
        raise FitError("NO_CROSSING", "fewer than 5 points inside the fit window")
    if weighted:
        # binomial weights, regularised so zero-failure points keep finite weight
        q = (y * n + 0.5) / (n + 1)
        w = 1.0 / np.sqrt(q * (1 - q) / n)
    else:
        w = np.ones_like(p)
    guess = _crossing_guess(curves)
    if guess is None:
        raise FitError("NO_CROSSING", "curves do not intersect")
    x = (p - guess) * L
    a, b, c = np.polynomial.polynomial.polyfit(x, y, 2, w=w)
    x0 = np.array([guess, 1.0, a, b, c])
    res = levenberg_marquardt(lambda q_: _scaling_residual(q_, p, L, y, w), x0,
                              jac=lambda q_: _scaling_jac(q_, p, L, y, w))
    if not res.converged or res.x[1] <= 0:
        raise FitError("DIVERGED", "scaling fit did not converge")
    return res, (p, L, y, n, w)


def find_threshold(curves, window: tuple | None = None, n_boot: int = 200, seed: int = 0,
                   weighted: bool = True) -> ThresholdEstimate:
    """Crossing point from the quadratic finite-size-scaling form
    f = A + B x + C x^2 with x = (p - p_th) L^(1/nu)."""
    curves = list(curves)
    Ls = [c.L for c in curves]
    if len(curves) < 2 or len(set(Ls)) < 2:
        raise FitError("NO_CROSSING", "need curves for at least two distinct sizes")
    if len(set(Ls)) != len(Ls):
        raise FitError("NO_CROSSING", "duplicate system sizes")
    res, (p, L, y, n, w) = _fit_scaling(curves, window, weighted)
    lo_p, hi_p = (window if window is not None else (p.min(), p.max()))
    if not lo_p <= res.x[0] <= hi_p:
        raise FitError("NO_CROSSING", f"fitted crossing {res.x[0]:.5g} lies outside the data window")
    pth_s, nu_s = [], []
    if n_boot > 0:
        rng = np.random.default_rng(seed)
        for _ in range(n_boot):
            boot = [FailureCurve(c.family, c.L, c.n_cyc,
                                 [CurvePoint(pt.p, pt.trials, int(rng.binomial(pt.trials, pt.rate)))
                                  for pt in c.points]) for c in curves]
            try:
                r, _ = _fit_scaling(boot, window, weighted)
            except FitError:
                continue
            pth_s.append(r.x[0])
            nu_s.append(r.x[1])
    pth_err = float(np.std(pth_s, ddof=1)) if len(pth_s) > 1 else float("nan")
    nu_err = float(np.std(nu_s, ddof=1)) if len(nu_s) > 1 else float("nan")
    return ThresholdEstimate(float(res.x[0]), pth_err, float(res.x[1]), nu_err,
                             tuple(float(v) for v in res.x[2:]), float(math.sqrt(2 * res.cost)),
                             (float(lo_p), float(hi_p)), int(len(p)))


def threshold_vs_cycles(family: str, sizes, grids: dict, trials: int, seed: int,
                        cfg: SweepConfig = SweepConfig(), *, n_boot: int = 200,
                        workers: int | None = None, tmax: int | None = None) -> list:
    """Threshold estimate for each cycle count, each on its own p grid.

    ``grids`` maps N_cyc to the list of error rates scanned for it.  Returns
    ``(n_cyc, estimate or FitError, curves)`` triples in increasing N_cyc."""
    out = []
    for n_idx, n in enumerate(sorted(grids)):
        curves = [estimate_curve(LatticeSpec(family, L), grids[n], n, trials, seed, cfg,
                                 L_idx=L_idx, n_idx=n_idx, tmax=tmax, workers=workers)
                  for L_idx, L in enumerate(sizes)]
        try:
            est = find_threshold(curves, n_boot=n_boot, seed=seed)
        except FitError as exc:
            est = exc
        out.append((n, est, curves))
    return out


# -- sustainable threshold ansatz ------------------------------------------------------------

def ansatz(n_cyc, p_sus, gamma, p1):
    """p_th(N) = p_sus - (p_sus - p1) N^(-gamma)."""
    n = np.asarray(n_cyc, dtype=float)
    return p_sus - (p_sus - p1) * n ** (-gamma)


def ansatz_jacobian(n_cyc, p_sus, gamma, p1):
    """Columns d/dp_sus, d/dgamma, d/dp1."""
    n = np.asarray(n_cyc, dtype=float)
    s = n ** (-gamma)
    return np.column_stack([1 - s, (p_sus - p1) * np.log(n) * s, s])


@dataclass
class SustainableFit:
    p_sus: float
    gamma: float
    p_th_1: float
    p_sus_err: float
    gamma_err: float
    covariance: list
    residual_norm: float
    cofit_p1: bool

    def predict(self, n_cyc):
        return ansatz(n_cyc, self.p_sus, self.gamma, self.p_th_1)

    def to_dict(self) -> dict:
        return asdict(self)


def _sustainable_lm(n, y, w, p1, cofit, x0):
    if cofit:
        def r(q):
            return w * (ansatz(n, *q) - y)

        def J(q):
            return w[:, None] * ansatz_jacobian(n, *q)
    else:
        def r(q):
            return w * (ansatz(n, q[0], q[1], p1) - y)

        def J(q):
            return w[:, None] * ansatz_jacobian(n, q[0], q[1], p1)[:, :2]
    return levenberg_marquardt(r, x0, jac=J)


def _sustainable_start(n, y, p1):
    """Coarse grid over gamma with the closed-form best p_sus for each."""
    best = None
    for g in np.linspace(0.05, 3.0, 60):
        s = n ** (-g)
        a = 1 - s
        denom = float(a @ a)
        if denom == 0:
            continue
        ps = float(a @ (y - p1 * s)) / denom
        err = float(np.sum((ansatz(n, ps, g, p1) - y) ** 2))
        if best is None or err < best[0]:
            best = (err, ps, g)
    return best[1], best[2]


def fit_sustainable(points, errors=None, *, p1: float | None = None, cofit_p1: bool = False,
                    n_boot: int = 200, seed: int = 0) -> SustainableFit:
    """Fit (p_sus, gamma) of the ansatz to measured (N_cyc, p_th) pairs.

    ``p1`` defaults to the measured value at N_cyc = 1, held fixed unless
    ``cofit_p1``.  ``errors`` (standard errors of p_th) weight the fit and
    drive the parametric bootstrap."""
    pts = sorted((float(a), float(b)) for a, b in points)
    n = np.array([a for a, _ in pts])
    y = np.array([b for _, b in pts])
    if len(set(n)) < 3 or 1.0 not in n:
        raise ValueError("need at least three distinct N_cyc values including N_cyc = 1")
    if errors is None:
        sig = np.ones_like(y)
    else:
        emap = dict(zip((float(a) for a, _ in points), (float(e) for e in errors)))
        sig = np.array([emap[a] for a in n])
        if np.any(sig <= 0):
            raise ValueError("point errors must be positive")
    w = 1.0 / sig
    p1_val = float(y[n == 1.0][0]) if p1 is None else float(p1)

    def solve(yy, p1_here):
        ps0, g0 = _sustainable_start(n, yy, p1_here)
        x0 = np.array([ps0, g0, p1_here]) if cofit_p1 else np.array([ps0, g0])
        res = _sustainable_lm(n, yy, w, p1_here, cofit_p1, x0)
        if not res.converged:
            raise FitError("DIVERGED", "ansatz fit did not converge within the iteration budget")
        return res

    res = solve(y, p1_val)
    p_sus, gamma = float(res.x[0]), float(res.x[1])
    p1_fit = float(res.x[2]) if cofit_p1 else p1_val
    # covariance from the Jacobian at the optimum, scaled by the residual variance
    dof = max(1, len(y) - len(res.x))
    scale = 1.0 if errors is not None else 2 * res.cost / dof
    try:
        cov = np.linalg.inv(res.jac.T @ res.jac) * scale
    except np.linalg.LinAlgError:
        cov = np.full((len(res.x), len(res.x)), np.nan)
    ps_err, g_err = float(math.sqrt(max(cov[0, 0], 0))), float(math.sqrt(max(cov[1, 1], 0)))
    if errors is not None and n_boot > 0:
        rng = np.random.default_rng(seed)
        samples = []
        fitted = ansatz(n, p_sus, gamma, p1_fit)
        for _ in range(n_boot):
            yb = fitted + rng.normal(0.0, sig)
            p1_b = p1_fit if (p1 is not None) else float(yb[n == 1.0][0])
            try:
                rb = solve(yb, p1_b)
            except FitError:
                continue
            samples.append(rb.x[:2])
        if len(samples) > 1:
            samples = np.array(samples)
            ps_err, g_err = (float(s) for s in samples.std(axis=0, ddof=1))
    return SustainableFit(p_sus, gamma, p1_fit, ps_err, g_err, cov.tolist(),
                          float(math.sqrt(2 * res.cost)), bool(cofit_p1))
