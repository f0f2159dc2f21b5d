"""Exact minimizability gaps on finite discrete instances.

Every expectation here is a weighted sum over the support points and every
infimum over a finite hypothesis list is a finite min, so the quantities

    M = E*(H) - E_x[C*(H, x)],   A = E*(H) - E*(H_all),   I = E_x[C*(H, x) - C*(H_all, x)]

are exact up to rounding.  The pointwise infimum C*(H, x) runs over a
*closure* set attached to the hypothesis set:

* ``list``: the values the listed hypotheses take at x (the default);
* ``box``: all score vectors in [-lambda, lambda]^d (zero-sum for constrained);
* ``complete``: all score vectors, i.e. the Bayes conditional error.

The last two model a class whose projection at each point is the box or
everything, while its best-in-class element is one of the listed tables.

Margin instances store conditionals as [P(y=+1), P(y=-1)], so eta is the
first column; multi-class labels are 0-based.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import entr

from .errors import ParameterError, PreconditionError, ResolutionError, SchemaError
from .optimize import golden_section
from .phi import SurrogateSpec, loss_matrix, make_spec, predict

DETERMINISTIC_TOL = 1e-12
CLOSURES = ("list", "box", "complete")


@dataclass(frozen=True)
class DiscreteInstance:
    weights: np.ndarray
    conditionals: np.ndarray
    name: str = "instance"

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        p = np.atleast_2d(np.asarray(self.conditionals, dtype=float))
        if w.ndim != 1 or p.shape[0] != w.size:
            raise SchemaError("need one conditional row per weight")
        if p.shape[1] < 2:
            raise SchemaError("conditionals need at least 2 classes")
        if np.any(w <= 0) or abs(w.sum() - 1) > 1e-12:
            raise SchemaError("weights must be positive and sum to 1")
        if np.any(p < 0) or np.any(np.abs(p.sum(axis=1) - 1) > 1e-12):
            raise SchemaError("each conditional must be a probability vector")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "conditionals", p)

    @property
    def m(self) -> int:
        return self.weights.size

    @property
    def n_classes(self) -> int:
        return self.conditionals.shape[1]

    @property
    def eta(self) -> np.ndarray:
        return self.conditionals[:, 0]

    @property
    def is_deterministic(self) -> bool:
        return bool(np.all(self.conditionals.max(axis=1) >= 1 - DETERMINISTIC_TOL))

    @property
    def labels(self) -> np.ndarray:
        """Most likely label per point (highest index on ties)."""
        p = self.conditionals
        return p.shape[1] - 1 - np.argmax(p[:, ::-1], axis=1)

    def to_dict(self) -> dict:
        return {
            "n": self.n_classes,
            "points": [{"weight": float(w), "conditional": [float(v) for v in row]}
                       for w, row in zip(self.weights, self.conditionals)],
        }


def instance_from_dict(d: dict) -> DiscreteInstance:
    if not isinstance(d, dict) or "points" not in d:
        raise SchemaError("instance needs a 'points' list")
    extra = set(d) - {"points", "n", "schema", "name"}
    if extra:
        raise SchemaError(f"unknown instance keys: {sorted(extra)}")
    pts = d["points"]
    if not isinstance(pts, list) or not pts:
        raise SchemaError("'points' must be a non-empty list")
    w, p = [], []
    for i, pt in enumerate(pts):
        if not isinstance(pt, dict) or "weight" not in pt or "conditional" not in pt:
            raise SchemaError(f"points[{i}] needs 'weight' and 'conditional'")
        w.append(pt["weight"])
        p.append(pt["conditional"])
    try:
        p = np.array(p, dtype=float)
        w = np.array(w, dtype=float)
    except (TypeError, ValueError):
        raise SchemaError("points[].weight and points[].conditional must be numeric") from None
    if "n" in d and (p.ndim != 2 or p.shape[1] != d["n"]):
        raise SchemaError(f"points[].conditional must have length n={d['n']}")
    return DiscreteInstance(w, p, d.get("name", "instance"))


@dataclass(frozen=True)
class HypothesisSet:
    """Either an explicit list of score tables or the pointwise box class.

    ``tables`` has shape (K, m, d) with d = 1 for margin losses and d = n
    otherwise.  ``closure`` selects the pointwise infimum set for an
    explicit list (see the module docstring).
    """

    kind: str
    tables: Optional[np.ndarray] = None
    lam: Optional[float] = None
    grid_step: Optional[float] = None
    closure: str = "list"

    def __post_init__(self):
        if self.kind not in ("explicit-list", "pointwise-box"):
            raise SchemaError(f"unknown hypothesis kind {self.kind!r}")
        if self.closure not in CLOSURES:
            raise SchemaError(f"unknown closure {self.closure!r}")
        if self.lam is not None and not self.lam > 0:
            raise SchemaError("lambda must be positive")
        if self.kind == "pointwise-box" and self.lam is None:
            raise SchemaError("pointwise-box needs lambda")
        if self.kind == "explicit-list":
            if self.tables is None:
                raise SchemaError("explicit-list needs tables")
            T = np.asarray(self.tables, dtype=float)
            if T.ndim == 2:
                T = T[..., None]
            if T.ndim != 3 or T.shape[0] < 1:
                raise SchemaError("tables must have shape (K, m, d)")
            object.__setattr__(self, "tables", T)
            if self.lam is not None and np.any(np.abs(T) > self.lam + 1e-12):
                raise SchemaError("table entries exceed lambda")
            if self.closure == "box" and self.lam is None:
                raise SchemaError("box closure needs lambda")

    @property
    def K(self) -> int:
        return 0 if self.tables is None else self.tables.shape[0]

    def with_closure(self, closure: str) -> "HypothesisSet":
        return HypothesisSet(self.kind, self.tables, self.lam, self.grid_step, closure)

    def validate_for(self, spec: SurrogateSpec, instance: DiscreteInstance):
        if instance.n_classes != spec.n_classes:
            raise ParameterError(f"instance has {instance.n_classes} classes, spec has {spec.n_classes}")
        if self.kind != "explicit-list":
            return
        d = 1 if spec.family == "margin" else spec.n_classes
        if self.tables.shape[1:] != (instance.m, d):
            raise SchemaError(f"tables must have shape (K, {instance.m}, {d}), got {self.tables.shape}")
        if spec.family == "constrained" and np.any(np.abs(self.tables.sum(axis=2)) > 1e-9):
            raise SchemaError("constrained tables must sum to 0 in every row")

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "lambda": self.lam, "closure": self.closure}
        if self.grid_step is not None:
            d["grid_step"] = self.grid_step
        if self.tables is not None:
            d["tables"] = self.tables.tolist()
        return d


def hset_from_dict(d: dict) -> HypothesisSet:
    if not isinstance(d, dict) or "kind" not in d:
        raise SchemaError("hypothesis set needs a 'kind'")
    extra = set(d) - {"kind", "lambda", "grid_step", "tables", "closure", "schema"}
    if extra:
        raise SchemaError(f"unknown hypothesis-set keys: {sorted(extra)}")
    tables = d.get("tables")
    if tables is not None:
        try:
            tables = np.array(tables, dtype=float)
        except (TypeError, ValueError):
            raise SchemaError("tables must be a numeric (K, m, d) array") from None
    return HypothesisSet(d["kind"], tables, d.get("lambda"), d.get("grid_step"), d.get("closure", "list"))


# conditional errors

def _scores(spec, tables):
    return tables[..., 0] if spec.family == "margin" else tables


def conditional_errors(spec: SurrogateSpec, instance: DiscreteInstance, tables) -> np.ndarray:
    """C(h_k, x_i) for every table k and point i, shape (K, m)."""
    L = loss_matrix(spec, _scores(spec, np.asarray(tables, dtype=float)))
    with np.errstate(invalid="ignore"):
        # 0 * inf terms come from impossible labels and contribute nothing
        out = np.where(instance.conditionals > 0, L * instance.conditionals, 0.0)
    return out.sum(axis=-1)


def zero_one_errors(spec: SurrogateSpec, instance: DiscreteInstance, tables) -> np.ndarray:
    """Zero-one conditional error 1 - p(x_i, h_k(x_i)), shape (K, m)."""
    pred = predict(spec, _scores(spec, np.asarray(tables, dtype=float)))
    p = instance.conditionals
    return 1.0 - np.take_along_axis(np.broadcast_to(p, pred.shape + (p.shape[1],)), pred[..., None], -1)[..., 0]


def bayes_zero_one(instance: DiscreteInstance) -> np.ndarray:
    return 1.0 - instance.conditionals.max(axis=1)


def bayes_conditional(spec: SurrogateSpec, conditionals) -> np.ndarray:
    """Unconstrained pointwise infimum C*(H_all, x) in closed form, per row."""
    p = np.atleast_2d(np.asarray(conditionals, dtype=float))
    pid = spec.phi.id
    if spec.family == "margin":
        eta = p[:, 0]
        if pid == "exponential":
            return 2.0 * np.sqrt(eta * (1.0 - eta))
        if pid == "logistic":
            return entr(eta) + entr(1.0 - eta)
        if pid == "squared-hinge":
            return 4.0 * eta * (1.0 - eta)
        return 2.0 * np.minimum(eta, 1.0 - eta)
    n = p.shape[1]
    if spec.family == "comp-sum":
        if pid == "mae-linear":
            return 1.0 - p.max(axis=1)
        tau = 1.0 if pid == "neg-log" else (0.0 if pid == "sum-exp-ratio" else spec.phi.tau)
        if tau == 1.0:
            return entr(p).sum(axis=1)
        # minimizer q proportional to p^(1/(2-tau)); value (Z^(2-tau) - 1)/(1 - tau)
        Z = (p ** (1.0 / (2.0 - tau))).sum(axis=1)
        return (Z ** (2.0 - tau) - 1.0) / (1.0 - tau)
    w = 1.0 - p
    if pid == "constrained-exp":
        return n * np.prod(w, axis=1) ** (1.0 / n)
    if pid in ("constrained-square", "constrained-squared-hinge"):
        with np.errstate(divide="ignore"):
            s = (1.0 / w).sum(axis=1)
        return np.where(np.any(w == 0, axis=1), 0.0, n * n / s)
    return n * w.min(axis=1)


# bounded pointwise minimization

def _line_search(g, lo, hi, step, tol):
    """Minimize g on [lo, hi]: grid bracket of spacing ``step``, then golden section."""
    if hi - lo <= 0:
        return lo, float(g(np.array([lo]))[0])
    npts = int(math.floor((hi - lo) / step + 1e-9)) + 1
    grid = np.linspace(lo, hi, max(npts, 3))
    vals = g(grid)
    j = int(np.argmin(vals))
    a, b = grid[max(j - 1, 0)], grid[min(j + 1, grid.size - 1)]
    x, fx, _ = golden_section(lambda s: float(g(np.array([s]))[0]), a, b, tol)
    if vals[j] < fx:
        x, fx = float(grid[j]), float(vals[j])
    return x, fx


def _objective(spec, p):
    def F(V):
        L = loss_matrix(spec, V)
        with np.errstate(invalid="ignore"):
            return np.where(p > 0, L * p, 0.0).sum(axis=-1)

    return F


def box_minimize(spec: SurrogateSpec, p, lam: float, grid_step: Optional[float] = None,
                 tol: float = 1e-10, max_sweeps: int = 500):
    """Minimize the conditional error at one point over the score box.

    Margin losses are a single bounded 1-D search.  Comp-sum losses use
    cyclic coordinate descent from the origin and from the two best corners
    of the box (corners are screened for n <= 6); constrained losses move along pair directions e_i - e_j,
    which keeps the zero-sum constraint and is exact for separable convex
    objectives.  Returns (value, argmin vector).
    """
    p = np.asarray(p, dtype=float)
    step = lam / 50 if grid_step is None else float(grid_step)
    if step > lam:
        raise ResolutionError(f"grid_step {step} cannot bracket optima on [-{lam}, {lam}]")
    F = _objective(spec, p)
    if spec.family == "margin":
        x, fx = _line_search(lambda s: F(s), -lam, lam, step, tol)
        if spec.phi.is_polyhedral:
            for c in (-1.0, 1.0):
                if -lam <= c <= lam and F(np.array([c]))[0] < fx:
                    x, fx = c, float(F(np.array([c]))[0])
        return float(fx), np.array([x])

    n = spec.n_classes
    if spec.family == "constrained":
        starts = [np.zeros(n)]
        moves = list(itertools.combinations(range(n), 2))
    else:
        starts = [np.zeros(n)]
        if n <= 6:
            starts += [np.array(c, dtype=float) * lam for c in itertools.product((-1.0, 1.0), repeat=n)]
        moves = [(j,) for j in range(n)]

    # full descent only from the origin and the two best corners
    if len(starts) > 3:
        vals = F(np.array(starts[1:]))
        order = np.argsort(vals, kind="stable")[:2]
        starts = [starts[0]] + [starts[1 + i] for i in order]
    best_val, best_v = math.inf, None
    for v0 in starts:
        v = v0.copy()
        fv = float(F(v[None])[0])
        for _ in range(max_sweeps):
            f_start, v_start = fv, v.copy()
            for mv in moves:
                if len(mv) == 1:
                    j = mv[0]

                    def g(s, j=j):
                        V = np.repeat(v[None], np.size(s), axis=0)
                        V[:, j] = s
                        return F(V)

                    x, fx = _line_search(g, -lam, lam, step, tol)
                    if fx <= fv:
                        v[j], fv = x, fx
                else:
                    i, j = mv
                    lo = max(-lam - v[i], v[j] - lam)
                    hi = min(lam - v[i], v[j] + lam)

                    def g(d, i=i, j=j):
                        V = np.repeat(v[None], np.size(d), axis=0)
                        V[:, i] += d
                        V[:, j] -= d
                        return F(V)

                    x, fx = _line_search(g, lo, hi, step, tol)
                    if fx <= fv:
                        v[i] += x
                        v[j] -= x
                        fv = fx
            if f_start - fv <= 1e-16 * max(1.0, abs(fv)) and np.max(np.abs(v - v_start)) <= tol:
                break
        if fv < best_val:
            best_val, best_v = fv, v
    return float(best_val), best_v


def pointwise_inf(spec: SurrogateSpec, instance: DiscreteInstance, hset: HypothesisSet,
                  C: Optional[np.ndarray] = None) -> np.ndarray:
    """C*(H, x_i) for each point under the hypothesis set's closure."""
    if hset.kind == "pointwise-box" or hset.closure == "box":
        return np.array([box_minimize(spec, p, hset.lam, hset.grid_step)[0] for p in instance.conditionals])
    if hset.closure == "complete":
        return bayes_conditional(spec, instance.conditionals)
    return C.min(axis=0)


@dataclass(frozen=True)
class GapReport:
    best_in_class: float
    expected_pointwise_inf: float
    mingap: float
    approx_error: Optional[float] = None
    pointwise_diff: Optional[float] = None
    bayes_error: Optional[float] = None
    best_index: Optional[int] = None
    closure: str = "list"
    spec_id: str = ""

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in (
            "spec_id", "closure", "best_in_class", "expected_pointwise_inf", "mingap",
            "approx_error", "pointwise_diff", "bayes_error", "best_index")}


def compute_gap(instance: DiscreteInstance, hset: HypothesisSet, spec: SurrogateSpec) -> GapReport:
    """M, A and I of a hypothesis set for one surrogate loss."""
    hset.validate_for(spec, instance)
    w = instance.weights
    bayes = float(w @ bayes_conditional(spec, instance.conditionals))
    if hset.kind == "pointwise-box":
        pw = pointwise_inf(spec, instance, hset)
        best = epi = float(w @ pw)
        idx = None
        closure = "box"
    else:
        C = conditional_errors(spec, instance, hset.tables)
        E = C @ w
        idx = int(np.argmin(E))
        best = float(E[idx])
        epi = float(w @ pointwise_inf(spec, instance, hset, C))
        closure = hset.closure
    return GapReport(best, epi, best - epi, best - bayes, epi - bayes, bayes, idx, closure, spec.spec_id)


# gap upper bound for the comp-sum power family on deterministic instances

def f_tau(u, tau: float):
    """log(1 + u) at tau = 1, else ((1 + u)^(1 - tau) - 1)/(1 - tau)."""
    u = np.asarray(u, dtype=float)
    if tau == 1.0:
        return np.log1p(u)
    return np.expm1((1.0 - tau) * np.log1p(u)) / (1.0 - tau)


@dataclass(frozen=True)
class TauBound:
    tau: float
    bound: float
    mingap: float

    @property
    def dominates(self) -> bool:
        return self.mingap <= self.bound + 1e-9


def gap_upper_bound_tau(instance: DiscreteInstance, lam: float, tau_grid, hset: Optional[HypothesisSet] = None):
    """Bound f_tau(R*_0) - f_tau(e^(-2 lam)(n - 1)) on the gap of each power loss.

    R*_0 is the best-in-class error of the tau = 0 member.  ``hset`` defaults
    to the pointwise box class; an explicit list is evaluated with the box
    closure, matching the hypothesis that every point sees the full box.
    Returns one :class:`TauBound` per tau with the exactly computed gap.
    """
    if not instance.is_deterministic:
        raise PreconditionError("the bound needs deterministic conditionals")
    n = instance.n_classes
    if hset is None:
        hset = HypothesisSet("pointwise-box", lam=lam)
    elif hset.kind == "explicit-list":
        hset = HypothesisSet("explicit-list", hset.tables, lam, hset.grid_step, "box")
    c_star = math.exp(-2 * lam) * (n - 1)
    r0 = compute_gap(instance, hset, make_spec("comp-sum", "sum-exp-ratio", n)).best_in_class
    out = []
    for tau in tau_grid:
        tau = float(tau)
        spec = make_spec("comp-sum", "comp-sum-power", n, tau=tau)
        M = compute_gap(instance, hset, spec).mingap
        out.append(TauBound(tau, float(f_tau(r0, tau) - f_tau(c_star, tau)), M))
    return out


# zero-gap characterization

@dataclass(frozen=True)
class ZeroGapReport:
    best_index: int
    mingap: float
    deterministic: bool
    residuals: np.ndarray
    conditions_hold: bool
    class_terms: dict = field(default_factory=dict)
    decomposition_error: float = 0.0

    def to_dict(self) -> dict:
        return {
            "best_index": self.best_index,
            "mingap": self.mingap,
            "deterministic": self.deterministic,
            "residuals": [float(r) for r in self.residuals],
            "conditions_hold": self.conditions_hold,
            "class_terms": {str(k): v for k, v in self.class_terms.items()},
            "decomposition_error": self.decomposition_error,
        }


def label_infima(spec: SurrogateSpec, hset: HypothesisSet) -> np.ndarray:
    """inf over the closure set of l(alpha, k) for each label k.

    Margin losses on the box use monotonicity: l(alpha, +1) = Phi(-alpha)
    is smallest at alpha = lam and l(alpha, -1) at alpha = -lam.
    """
    if spec.family == "margin" and hset.lam is not None and hset.closure != "complete":
        phi, lam = spec.phi, hset.lam
        return np.array([float(phi.value(-lam)), float(phi.value(-lam))])
    n = spec.n_classes
    eye = np.eye(n)
    if hset.closure == "complete":
        return bayes_conditional(spec, eye)
    return np.array([box_minimize(spec, eye[k], hset.lam, hset.grid_step)[0] for k in range(n)])


def check_zero_gap_conditions(instance: DiscreteInstance, hset: HypothesisSet, spec: SurrogateSpec,
                              tol: float = 1e-10) -> ZeroGapReport:
    """Check the zero-gap characterization on the best-in-class table.

    The residual at x is C(h*, x) - C*(H, x), so M = sum_x P(x) residual(x)
    and M = 0 exactly when every residual vanishes.  For deterministic
    instances the report also splits M by label: with p_k the mass of
    points labeled k and e_k = E[l(h*(x), k) | y = k] - l_k, M = sum_k p_k e_k,
    so M <= eps forces e_k <= eps / p_k.
    """
    if hset.kind != "explicit-list":
        raise ParameterError("the characterization needs an explicit list")
    hset.validate_for(spec, instance)
    rep = compute_gap(instance, hset, spec)
    k = rep.best_index
    C = conditional_errors(spec, instance, hset.tables)
    pw = pointwise_inf(spec, instance, hset, C)
    resid = C[k] - pw
    det = instance.is_deterministic
    terms, decomp = {}, 0.0
    if det and hset.closure != "list":
        linf = label_infima(spec, hset)
        L = loss_matrix(spec, _scores(spec, hset.tables[k]))
        lab = instance.labels
        total = 0.0
        for y in range(instance.n_classes):
            sel = lab == y
            if not np.any(sel):
                continue
            pk = float(instance.weights[sel].sum())
            excess = float(instance.weights[sel] @ L[sel, y]) / pk - float(linf[y])
            terms[y] = {"mass": pk, "excess": excess, "label_inf": float(linf[y])}
            total += pk * excess
        decomp = abs(rep.mingap - total)
    return ZeroGapReport(k, rep.mingap, det, resid, bool(np.all(resid <= tol)), terms, decomp)


# discrete target loss

@dataclass(frozen=True)
class DiscreteTargetReport:
    mingap: float
    approx_error: float
    pointwise_diff: float
    coverage_ok: bool
    missing: list
    holds: bool

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def min_discrete_target(instance: DiscreteInstance, hset: HypothesisSet,
                        spec: Optional[SurrogateSpec] = None) -> DiscreteTargetReport:
    """Zero-one M, A and I of an explicit list, with the label-coverage check.

    When every label is predicted by some table at every point, the
    pointwise best-in-class zero-one error equals the Bayes one, so I = 0
    and M = A.
    """
    if hset.kind != "explicit-list":
        raise ParameterError("the zero-one gaps need an explicit list")
    if spec is None:
        if hset.tables.shape[2] == 1:
            spec = make_spec("margin", "hinge")
        else:
            spec = make_spec("comp-sum", "neg-log", instance.n_classes)
    w = instance.weights
    Z = zero_one_errors(spec, instance, hset.tables)
    pred = predict(spec, _scores(spec, hset.tables))
    E = Z @ w
    best = float(E.min())
    pw = 1.0 - np.max(np.where(_covered(pred, instance.n_classes), instance.conditionals, -np.inf), axis=1)
    bayes = bayes_zero_one(instance)
    epi = float(w @ pw)
    bay = float(w @ bayes)
    cov = _covered(pred, instance.n_classes)
    missing = [(int(i), int(y)) for i, y in zip(*np.nonzero(~cov))]
    M, A, I = best - epi, best - bay, epi - bay
    holds = bool(not missing and abs(I) <= 1e-12 and abs(M - A) <= 1e-12)
    return DiscreteTargetReport(M, A, I, not missing, missing, holds)


def _covered(pred, n):
    """cov[i, y] is True when some table predicts y at point i."""
    return np.stack([(pred == y).any(axis=0) for y in range(n)], axis=1)
