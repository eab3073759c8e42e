"""Shared derivative-free optimisation helpers.

The threshold-process likelihoods are non-smooth at support boundaries, so
fits use Nelder-Mead with jittered restarts; curvature comes from central
finite differences afterwards.
"""

from __future__ import annotations

import numpy as np
from scipy import optimize as sp_optimize

from .errors import BracketFailure

# Simplex convergence: function-value spread below FATOL (and vertex spread
# below XATOL) terminates a run successfully.
FATOL = 1e-9
XATOL = 1e-7
MAXITER_PER_DIM = 400


def minimize_restarts(objective, theta0, jitter, *, restarts: int = 5, seed: int = 0):
    """Best converged Nelder-Mead run from ``theta0`` plus jittered copies.

    The first run starts exactly at ``theta0``; the rest perturb it by
    centred normals scaled per-coordinate by ``jitter``.  Returns the best
    converged `OptimizeResult`, or None when every restart hit its
    iteration cap.
    """
    theta0 = np.asarray(theta0, dtype=float)
    jitter = np.asarray(jitter, dtype=float)
    rng = np.random.Generator(np.random.Philox(key=seed))
    best = None
    for k in range(max(restarts, 1)):
        start = theta0 if k == 0 else theta0 + jitter * rng.standard_normal(theta0.size)
        with np.errstate(invalid="ignore"):  # inf NLL sentinels trip scipy's spread check
            res = sp_optimize.minimize(
                objective,
                start,
                method="Nelder-Mead",
                options={
                    "xatol": XATOL,
                    "fatol": FATOL,
                    "maxiter": MAXITER_PER_DIM * theta0.size,
                    "maxfev": 2 * MAXITER_PER_DIM * theta0.size,
                },
            )
        if res.success and np.isfinite(res.fun):
            if best is None or res.fun < best.fun:
                best = res
    return best


def find_increasing_root(f, x0: float, step0: float, *, max_doublings: int = 120) -> float:
    """Root of a monotone increasing scalar function.

    Grows a bracket geometrically outward from ``x0`` and polishes with
    Brent's method (the usual bisection/secant hybrid).  Raises
    `BracketFailure` if no sign change appears within the doubling budget.
    """
    lo = hi = float(x0)
    flo = fhi = f(x0)
    step = max(abs(step0), 1e-12)
    for _ in range(max_doublings):
        if flo <= 0.0:
            break
        lo -= step
        step *= 2.0
        flo = f(lo)
    else:
        raise BracketFailure(f"no sign change below x0={x0!r} (f(lo)={flo!r})")
    step = max(abs(step0), 1e-12)
    for _ in range(max_doublings):
        if fhi >= 0.0:
            break
        hi += step
        step *= 2.0
        fhi = f(hi)
    else:
        raise BracketFailure(f"no sign change above x0={x0!r} (f(hi)={fhi!r})")
    if lo == hi:
        return lo
    return float(sp_optimize.brentq(f, lo, hi, xtol=1e-12, rtol=8.9e-16, maxiter=200))


def numerical_hessian(objective, theta, rel_step: float = 1e-4) -> np.ndarray:
    """Central-difference Hessian with per-coordinate step rel_step*(1+|theta_i|)."""
    theta = np.asarray(theta, dtype=float)
    n = theta.size
    h = rel_step * (1.0 + np.abs(theta))
    hess = np.empty((n, n))
    f0 = objective(theta)
    for i in range(n):
        ei = np.zeros(n)
        ei[i] = h[i]
        hess[i, i] = (objective(theta + ei) - 2.0 * f0 + objective(theta - ei)) / h[i] ** 2
        for j in range(i + 1, n):
            ej = np.zeros(n)
            ej[j] = h[j]
            fpp = objective(theta + ei + ej)
            fpm = objective(theta + ei - ej)
            fmp = objective(theta - ei + ej)
            fmm = objective(theta - ei - ej)
            hess[i, j] = hess[j, i] = (fpp - fpm - fmp + fmm) / (4.0 * h[i] * h[j])
    return hess
