"""Brute-force nested grid search for T(t), independent of the refined solver.

No golden section, Newton step or bracket logic is used here.  Every shift
on a uniform tau grid gets an exhaustive u-grid pass.  Running the fine
u step on every shift is too slow for the constrained family (10^4 shifts
times 10^6 u values), so the search runs at two resolutions:

1. a coarse u grid (step ``coarse_step``) on every shift gives a lower
   bound  G_c(tau) <= G(tau) <= G_c(tau) + e(tau),  where e is the
   quadratic interpolation error bound kappa * h^2 / 4 from the discrete
   curvature kappa at the coarse minimizer;
2. every shift with G_c(tau) <= min(G_c + e) may still hold the infimum,
   and is re-solved on the fine u grid inside the two coarse cells around
   its coarse minimizer (convexity puts the true minimizer there).
"""

from __future__ import annotations

import numpy as np

from .phi import SurrogateSpec
from .transform import DEFAULT_TRUNCATION, PointwiseObjective


def _grid(lo, hi, step):
    n = int(np.ceil((hi - lo) / step - 1e-9)) + 1
    return np.linspace(lo, hi, max(n, 2))


def _setup(spec: SurrogateSpec, t: float, tau_step: float, truncation_A: float):
    if spec.family == "margin":
        return (1 - t) / 2, (1 + t) / 2, np.zeros(1), False
    if spec.family == "comp-sum":
        n = spec.n_classes
        taus = _grid(1.0 / n, 0.5, tau_step) if n > 2 else np.array([0.5])
        return (1 - t) / 2, (1 + t) / 2, taus, True
    c = spec.constant_c
    return (c - t) / 2, (c + t) / 2, _grid(0.0, truncation_A, tau_step), False


def brute_force_transform(spec: SurrogateSpec, t: float, tau_step: float = 1e-3, u_step: float = 1e-5,
                          u_max: float = None, coarse_step: float = None,
                          truncation_A: float = DEFAULT_TRUNCATION, chunk: int = 64):
    """Return (T, tau_star, u_star) from nested grid search.

    For unboxed families u ranges over [-u_max, u_max], by default 8 for
    margin losses and A + 8 for constrained ones (the hinge minimizer sits
    at u = 1 + tau).  A coarse minimizer on that boundary raises ValueError
    since the grid then cannot bracket it.  The coarse step defaults to
    1e-3 on the comp-sum box and 1e-2 on the unbounded ranges.
    """
    if t == 0.0:
        return 0.0, None, 0.0
    wa, wb, taus, boxed = _setup(spec, t, tau_step, truncation_A)
    if coarse_step is None:
        coarse_step = 1e-3 if boxed else 1e-2
    if u_max is None:
        u_max = truncation_A + 8.0 if spec.family == "constrained" else 8.0
    phi = spec.phi

    # unboxed families share one u grid built from integer multiples of the
    # step, so kinks at integers land on grid points
    if not boxed:
        k = int(round(u_max / coarse_step))
        shared = np.arange(-k, k + 1) * coarse_step

    g_c = np.empty(taus.size)
    err = np.empty(taus.size)
    u_c = np.empty(taus.size)
    h_c = np.empty(taus.size)
    for s in range(0, taus.size, chunk):
        tt = taus[s:s + chunk]
        if boxed:
            m = int(np.ceil(tt.max() / coarse_step))
            U = tt[:, None] * np.linspace(-1.0, 1.0, 2 * m + 1)[None, :]
            h = tt / m
        else:
            U = np.broadcast_to(shared, (tt.size, shared.size))
            h = np.full(tt.size, coarse_step)
        obj = PointwiseObjective(phi, wa, wb, tt[:, None], boxed)
        with np.errstate(invalid="ignore", over="ignore"):
            F = obj.value(U)
        F = np.where(np.isnan(F), np.inf, F)
        j = np.argmin(F, axis=1)
        if not boxed and np.any((j == 0) | (j == U.shape[1] - 1)):
            raise ValueError("coarse minimizer sits on the u boundary, raise u_max")
        rows = np.arange(tt.size)
        jl = np.clip(j - 1, 0, U.shape[1] - 1)
        jr = np.clip(j + 1, 0, U.shape[1] - 1)
        f0, fl, fr = F[rows, j], F[rows, jl], F[rows, jr]
        with np.errstate(invalid="ignore"):
            kappa = np.where(np.isfinite(fl) & np.isfinite(fr), (fl - 2 * f0 + fr) / h ** 2, 0.0)
            # a kink inside the cell breaks the curvature estimate; fall back
            # to the larger one-sided drop
            kink_bound = np.maximum(np.nan_to_num(fl - f0, posinf=0.0), np.nan_to_num(fr - f0, posinf=0.0))
        err[s:s + chunk] = np.maximum(np.abs(kappa) * h ** 2 / 4, 0.0) if phi.smoothness == "C2-smooth" else kink_bound
        u_c[s:s + chunk] = U[rows, j]
        h_c[s:s + chunk] = h
        gain = PointwiseObjective(phi, wa, wb, tt, boxed).gain(U[rows, j])
        g_c[s:s + chunk] = gain

    upper = np.min(g_c + err)
    cand = np.flatnonzero(g_c <= upper + 1e-15 * max(1.0, abs(upper)))

    best = (np.inf, None, None)
    for i in cand:
        tau = taus[i]
        lo, hi = u_c[i] - h_c[i], u_c[i] + h_c[i]
        if boxed:
            lo, hi = max(lo, -tau), min(hi, tau)
        U = _grid(lo, hi, u_step)
        obj = PointwiseObjective(phi, wa, wb, np.array([tau]), boxed)
        with np.errstate(invalid="ignore", over="ignore"):
            F = obj.value(U)
        F = np.where(np.isnan(F), np.inf, F)
        j = int(np.argmin(F))
        g = float(obj.gain(U[j])[0])
        if g < best[0]:
            best = (g, float(tau), float(U[j]))
    T, tau_star, u_star = best
    return T, (None if spec.family == "margin" else tau_star), u_star
