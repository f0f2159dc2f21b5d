"""Transformation functions T(t) for margin, comp-sum and constrained losses.

All three families reduce to the same one-dimensional shape.  For a shift
``tau`` and weights ``w_a``, ``w_b`` the gain

    G(tau) = sup_u  w_a [Phi(tau) - Phi(tau + u)] + w_b [Phi(tau) - Phi(tau - u)]

is a concave maximization in u, and T(t) is G itself (margin, tau = 0) or
its infimum over a compact range of shifts (comp-sum and constrained).

======================  ======================  ==========  ===========
family                  weights (w_a, w_b)      u range     tau range
======================  ======================  ==========  ===========
margin                  ((1-t)/2, (1+t)/2)      R           {0}
comp-sum                ((1-t)/2, (1+t)/2)      |u| <= tau  [1/n, 1/2]
constrained             ((c-t)/2, (c+t)/2)      R           [0, A]
======================  ======================  ==========  ===========

with c = 2 - 1/(n-1).  The gain is evaluated in the difference form above
rather than as f(0) - f(a*), since both of those are O(1) while T is O(t^2).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import HCGrowthError, ParameterError
from .optimize import bisect_root, bracket_by_doubling, golden_section, golden_section_vec, safeguarded_newton
from .phi import PhiFunction, SurrogateSpec

DEFAULT_TRUNCATION = 10.0
GOLDEN_TOL = 1e-8
STATIONARY_TOL = 1e-12
N_TAU_GRID = 512
BRACKET_LIMIT = 64.0


@dataclass
class PointwiseObjective:
    """f(u) = w_a Phi(tau + u) + w_b Phi(tau - u), elementwise over tau.

    ``boxed`` restricts u to |u| <= tau as in the comp-sum problem.
    """

    phi: PhiFunction
    w_a: float
    w_b: float
    tau: np.ndarray
    boxed: bool = False

    def __post_init__(self):
        self.tau = np.atleast_1d(np.asarray(self.tau, dtype=float))

    def _terms(self, fn, u, sign_b):
        out = 0.0
        if self.w_a:
            out = out + self.w_a * fn(self.tau + u)
        if self.w_b:
            out = out + sign_b * self.w_b * fn(self.tau - u)
        return np.broadcast_to(out, np.broadcast_shapes(np.shape(u), self.tau.shape))

    def value(self, u):
        return self._terms(self.phi.value, u, 1.0)

    def deriv(self, u):
        return self._terms(self.phi.d1, u, -1.0)

    def curvature(self, u):
        return self._terms(self.phi.d2, u, 1.0)

    def gain(self, u):
        """w_a [Phi(tau) - Phi(tau+u)] + w_b [Phi(tau) - Phi(tau-u)]."""
        out = np.zeros(np.broadcast_shapes(np.shape(u), self.tau.shape))
        if self.w_a:
            out = out - self.w_a * self.phi.increment(self.tau, u)
        if self.w_b:
            out = out - self.w_b * self.phi.increment(self.tau, -u)
        return out


@dataclass
class InnerSolution:
    u: np.ndarray
    gain: np.ndarray
    limit: np.ndarray
    residual: np.ndarray
    iterations: int


def _polyhedral_candidates(obj: PointwiseObjective):
    tau = obj.tau
    cands = [np.zeros_like(tau)]
    for k in obj.phi.kinks:
        cands += [k - tau, tau - k]
    if obj.boxed:
        cands += [-tau, tau]
    C = np.stack(cands, axis=0)
    if obj.boxed:
        C = np.clip(C, -tau, tau)
    return C


def solve_inner(obj: PointwiseObjective, golden_tol=GOLDEN_TOL, stationary_tol=STATIONARY_TOL) -> InnerSolution:
    """Minimize f over u for every shift in ``obj.tau`` at once."""
    tau = obj.tau
    shape = tau.shape
    no_limit = np.zeros(shape, dtype=bool)

    if obj.phi.is_polyhedral:
        C = _polyhedral_candidates(obj)
        vals = obj.value(C)
        j = np.argmin(vals, axis=0)
        u = np.take_along_axis(C, j[None], axis=0)[0]
        return InnerSolution(u, obj.gain(u), no_limit, np.zeros(shape), 0)

    if obj.boxed:
        lo, hi = -tau.copy(), tau.copy()
        limit = no_limit
    else:
        B, lower_ok, upper_ok = bracket_by_doubling(obj.deriv, shape, 1.0, BRACKET_LIMIT)
        lo, hi = -B, B
        limit = ~(lower_ok & upper_ok)

    u, fu, a, b = golden_section_vec(obj.value, lo, hi, tol=golden_tol)
    interior = (u > lo) & (u < hi)

    # Newton polish on the golden bracket, widened to the full bracket if
    # the derivative does not change sign on the small one
    a = np.maximum(lo, a - golden_tol)
    b = np.minimum(hi, b + golden_tol)
    sign_ok = (obj.deriv(a) <= 0) & (obj.deriv(b) >= 0)
    a = np.where(sign_ok, a, lo)
    b = np.where(sign_ok, b, hi)
    x, res, it = safeguarded_newton(obj.deriv, obj.curvature, u, a, b, tol=stationary_tol)
    fx = obj.value(x)
    use = interior & np.isfinite(fx) & (fx <= fu + 1e-15 * np.abs(fu))
    u = np.where(use, x, u)

    resid = np.abs(obj.deriv(u))
    stuck = interior & (resid > stationary_tol) & (obj.deriv(a) < 0) & (obj.deriv(b) > 0)
    if np.any(stuck):
        ub = bisect_root(obj.deriv, a, b)
        better = stuck & (obj.value(ub) <= obj.value(u))
        u = np.where(better, ub, u)
        resid = np.abs(obj.deriv(u))
    resid = np.where(interior, resid, 0.0)
    return InnerSolution(u, obj.gain(u), limit, resid, it)


@dataclass(frozen=True)
class TransformPoint:
    """One value of T with its minimizers and solver flags."""

    t: float
    T: float
    a_star: Optional[float]
    tau_star: Optional[float] = None
    flags: tuple = ()
    residual: float = 0.0

    @property
    def ok(self) -> bool:
        return not any(f.startswith("error") for f in self.flags)


def _check_t(t):
    t = float(t)
    if not 0.0 <= t <= 1.0 or np.isnan(t):
        raise ParameterError(f"t must lie in [0, 1], got {t}")
    return t


def _check_family(spec, family):
    if spec.family != family:
        raise ParameterError(f"expected a {family} spec, got {spec.family}")


def _outer_inf(make_obj, lo, hi, n_grid=N_TAU_GRID, tol=GOLDEN_TOL):
    """inf over tau in [lo, hi] of G(tau): grid pass, then golden refinement.

    Among grid ties (within 1e-14 relative) the smallest shift is kept.
    """
    taus = np.linspace(lo, hi, n_grid) if hi > lo else np.array([lo])
    sol = solve_inner(make_obj(taus))
    g = sol.gain
    gmin = np.min(g)
    tie = 1e-14 * abs(gmin)
    i = int(np.flatnonzero(g <= gmin + tie)[0])
    best = (float(g[i]), float(taus[i]), float(sol.u[i]), bool(sol.limit[i]), float(sol.residual[i]))
    if taus.size > 1:
        a = taus[max(i - 1, 0)]
        b = taus[min(i + 1, taus.size - 1)]

        def G(s):
            return float(solve_inner(make_obj(np.array([s]))).gain[0])

        s, gs, _ = golden_section(G, a, b, tol=tol)
        if gs < best[0] - tie:
            one = solve_inner(make_obj(np.array([s])))
            best = (float(one.gain[0]), float(s), float(one.u[0]), bool(one.limit[0]), float(one.residual[0]))
    return best, taus


def transform_binary(spec: SurrogateSpec, t: float) -> TransformPoint:
    """T(t) = f_t(0) - inf_u f_t(u) with f_t(u) = (1-t)/2 Phi(u) + (1+t)/2 Phi(-u)."""
    _check_family(spec, "margin")
    t = _check_t(t)
    if t == 0.0:
        return TransformPoint(0.0, 0.0, 0.0)
    obj = PointwiseObjective(spec.phi, (1 - t) / 2, (1 + t) / 2, np.zeros(1))
    sol = solve_inner(obj)
    flags = ("limit",) if sol.limit[0] else ()
    return TransformPoint(t, float(sol.gain[0]), float(sol.u[0]), None, flags, float(sol.residual[0]))


def transform_compsum(spec: SurrogateSpec, t: float, n_grid: int = N_TAU_GRID) -> TransformPoint:
    """inf over tau in [1/n, 1/2] of sup over |u| <= tau of the comp-sum gain."""
    _check_family(spec, "comp-sum")
    t = _check_t(t)
    n = spec.n_classes
    if t == 0.0:
        return TransformPoint(0.0, 0.0, 0.0, 1.0 / n)

    def make(taus):
        return PointwiseObjective(spec.phi, (1 - t) / 2, (1 + t) / 2, taus, boxed=True)

    (T, s, u, lim, res), _ = _outer_inf(make, 1.0 / n, 0.5, n_grid)
    return TransformPoint(t, T, u, s, ("limit",) if lim else (), res)


def _constrained(phi, t, c, A, n_grid):
    def make(taus):
        return PointwiseObjective(phi, (c - t) / 2, (c + t) / 2, taus)

    (T, s, u, lim, res), taus = _outer_inf(make, 0.0, A, n_grid)
    flags = []
    if lim:
        flags.append("limit")
    if s >= taus[-2]:
        flags.append("truncation-suspect")
    return TransformPoint(t, T, u, s, tuple(flags), res)


def transform_constrained(spec: SurrogateSpec, t: float, truncation_A: float = DEFAULT_TRUNCATION,
                          n_grid: int = N_TAU_GRID) -> TransformPoint:
    """inf over tau in [0, A] of sup_u c Phi(tau) - (c-t)/2 Phi(tau+u) - (c+t)/2 Phi(tau-u)."""
    _check_family(spec, "constrained")
    t = _check_t(t)
    if not truncation_A > 0:
        raise ParameterError("truncation_A must be positive")
    if t == 0.0:
        return TransformPoint(0.0, 0.0, 0.0, 0.0)
    return _constrained(spec.phi, t, spec.constant_c, float(truncation_A), n_grid)


def inner_constrained(spec: SurrogateSpec, s: float, truncation_A: float = DEFAULT_TRUNCATION,
                      n_grid: int = N_TAU_GRID) -> TransformPoint:
    """The rescaled constrained problem with weights (1 -+ s)/2.

    T(c s) = c * inner_constrained(s).T holds for s <= 1/c.
    """
    _check_family(spec, "constrained")
    s = _check_t(s)
    if s == 0.0:
        return TransformPoint(0.0, 0.0, 0.0, 0.0)
    return _constrained(spec.phi, s, 1.0, float(truncation_A), n_grid)


def transform(spec: SurrogateSpec, t: float, truncation_A: float = DEFAULT_TRUNCATION,
              n_grid: int = N_TAU_GRID) -> TransformPoint:
    """Dispatch on ``spec.family``."""
    if spec.family == "margin":
        return transform_binary(spec, t)
    if spec.family == "comp-sum":
        return transform_compsum(spec, t, n_grid)
    return transform_constrained(spec, t, truncation_A, n_grid)


# curves

@dataclass
class TransformCurve:
    spec: SurrogateSpec
    samples: list
    grid: dict
    solver_meta: dict = field(default_factory=dict)

    @property
    def t(self) -> np.ndarray:
        return np.array([p.t for p in self.samples])

    @property
    def T(self) -> np.ndarray:
        return np.array([p.T for p in self.samples])

    def valid(self) -> list:
        return [p for p in self.samples if p.ok and np.isfinite(p.T)]

    def is_monotone(self, slack: float = 1e-10) -> bool:
        T = np.array([p.T for p in self.valid()])
        return bool(np.all(np.diff(T) >= -slack))


def parse_t_grid(text: str) -> tuple:
    """Parse ``log:a:b:n``, ``lin:a:b:n`` or a comma list into (array, description)."""
    text = text.strip()
    if text.startswith(("log:", "lin:")):
        parts = text.split(":")
        if len(parts) != 4:
            raise ParameterError(f"grid must look like log:a:b:n, got {text!r}")
        kind, a, b, n = parts[0], float(parts[1]), float(parts[2]), int(parts[3])
        if n < 1 or not 0 < a <= b <= 1:
            raise ParameterError(f"bad grid {text!r}")
        arr = np.geomspace(a, b, n) if kind == "log" else np.linspace(a, b, n)
        return arr, {"kind": kind, "t_min": a, "t_max": b, "count": n}
    arr = np.array([float(v) for v in text.split(",") if v.strip()])
    return arr, {"kind": "list", "count": int(arr.size)}


def sample_curve(spec: SurrogateSpec, t_grid, truncation_A: float = DEFAULT_TRUNCATION,
                 n_grid: int = N_TAU_GRID) -> TransformCurve:
    """Evaluate T on a strictly increasing grid in (0, 1].

    A point that fails is kept as a flagged sample with T = nan.
    """
    if isinstance(t_grid, str):
        ts, desc = parse_t_grid(t_grid)
    else:
        ts = np.asarray(t_grid, dtype=float)
        desc = {"kind": "list", "count": int(ts.size)}
    if ts.size and (np.any(np.diff(ts) <= 0) or ts[0] <= 0 or ts[-1] > 1):
        raise ParameterError("t grid must be strictly increasing in (0, 1]")
    samples = []
    for t in ts:
        try:
            samples.append(transform(spec, float(t), truncation_A, n_grid))
        except HCGrowthError as exc:
            samples.append(TransformPoint(float(t), float("nan"), None, None, (f"error:{exc.kind}",)))
    meta = {
        "golden_tol": GOLDEN_TOL,
        "stationary_tol": STATIONARY_TOL,
        "tau_grid": n_grid,
        "bracket_limit": BRACKET_LIMIT,
        "path": "breakpoints" if spec.phi.is_polyhedral else "golden+newton",
    }
    if spec.family == "constrained":
        meta["truncation_A"] = float(truncation_A)
    return TransformCurve(spec, samples, desc, meta)
