"""Auxiliary functions Phi for margin, comp-sum and constrained losses.

Each catalog entry carries its value, first and second derivative and a
small amount of regularity metadata (smoothness class, monotonicity, kink
locations) that the solvers consult to pick a derivative-based or a
breakpoint-enumeration path.

All value/derivative maps accept scalars or numpy arrays.  Outside the
domain they return ``inf`` instead of raising, which lets the minimizers
treat infeasible points as arbitrarily bad; :func:`eval_loss` is the
checked entry point that raises :class:`DomainError`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.special import expit, logsumexp

from .errors import ConstraintError, DomainError, NotFoundError, ParameterError, SchemaError

FAMILIES = ("margin", "comp-sum", "constrained")
SMOOTHNESS = ("C2-smooth", "polyhedral", "piecewise-C2")

ArrayFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class PhiFunction:
    """A convex scalar function with analytic derivatives.

    ``d1`` returns the right derivative at kinks and ``d2`` the right second
    derivative; ``kinks`` lists where those one-sided values apply.
    ``from_log`` evaluates Phi(exp(s)) without forming exp(s), which keeps
    comp-sum losses accurate when the softmax probability underflows.
    ``diff(x, d)`` returns Phi(x + d) - Phi(x) from x and d without forming
    x + d, which keeps T(t) accurate to full relative precision as t -> 0.
    """

    id: str
    family: str
    value: ArrayFn = field(repr=False)
    d1: ArrayFn = field(repr=False)
    d2: ArrayFn = field(repr=False)
    domain: tuple = (-math.inf, math.inf)
    domain_open: tuple = (True, True)
    smoothness: str = "C2-smooth"
    monotonicity: str = "non-decreasing"
    kinks: tuple = ()
    monotone_on: Optional[tuple] = None
    tau: Optional[float] = None
    from_log: Optional[ArrayFn] = field(default=None, repr=False)
    diff: Optional[Callable] = field(default=None, repr=False)

    def __call__(self, u):
        return self.value(u)

    @property
    def label(self) -> str:
        if self.tau is None:
            return self.id
        return f"{self.id}(tau={self.tau:g})"

    @property
    def is_polyhedral(self) -> bool:
        return self.smoothness == "polyhedral"

    def increment(self, x, d):
        """Phi(x + d) - Phi(x), elementwise."""
        x, d = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(d, dtype=float))
        with np.errstate(invalid="ignore"):
            plain = self.value(x + d) - self.value(x)
        if self.diff is None:
            return plain
        with np.errstate(invalid="ignore", over="ignore", divide="ignore"):
            near = np.isfinite(plain) & (np.abs(d) <= 0.5 * np.maximum(1.0, np.abs(x)))
            fine = self.diff(x, np.where(near, d, 0.0))
        out = np.where(near, fine, plain)
        return out[()] if out.ndim == 0 else out

    def in_domain(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        lo, hi = self.domain
        lo_open, hi_open = self.domain_open
        ok = (u > lo) if lo_open else (u >= lo)
        ok &= (u < hi) if hi_open else (u <= hi)
        return ok


def _guard(fn, phi_domain_lo):
    """Wrap ``fn`` so arguments at or below ``phi_domain_lo`` map to inf."""

    def wrapped(u):
        u = np.asarray(u, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            out = fn(np.where(u > phi_domain_lo, u, 1.0))
        out = np.where(u > phi_domain_lo, out, np.inf)
        return out[()] if out.ndim == 0 else out

    return wrapped


def _arr(fn):
    def wrapped(u):
        with np.errstate(over="ignore"):
            out = fn(np.asarray(u, dtype=float))
        out = np.asarray(out, dtype=float)
        return out[()] if out.ndim == 0 else out

    return wrapped


# margin-based entries, loss Phi(-y h)

def _exp_diff(x, d):
    return np.exp(x) * np.expm1(d)


def _square_diff(x, d):
    # (1 + x + d)^2 - (1 + x)^2 factored
    return d * (2.0 + 2.0 * x + d)


def _sq_hinge_diff(x, d):
    both = (x >= -1.0) & (x + d >= -1.0)
    return np.where(both, _square_diff(x, d), np.maximum(0.0, 1.0 + x + d) ** 2 - np.maximum(0.0, 1.0 + x) ** 2)


def _hinge_diff(x, d):
    both = (x >= -1.0) & (x + d >= -1.0)
    return np.where(both, d, np.maximum(0.0, 1.0 + x + d) - np.maximum(0.0, 1.0 + x))


def exponential() -> PhiFunction:
    return PhiFunction("exponential", "margin", _arr(np.exp), _arr(np.exp), _arr(np.exp), diff=_exp_diff)


def logistic() -> PhiFunction:
    def d2(u):
        s = expit(u)
        return s * (1.0 - s)

    return PhiFunction(
        "logistic", "margin", _arr(lambda u: np.logaddexp(0.0, u)), _arr(expit), _arr(d2),
        diff=lambda x, d: np.log1p(expit(x) * np.expm1(d)),
    )


def _sq_hinge(pid, family):
    return PhiFunction(
        pid,
        family,
        _arr(lambda u: np.maximum(0.0, 1.0 + u) ** 2),
        _arr(lambda u: 2.0 * np.maximum(0.0, 1.0 + u)),
        _arr(lambda u: np.where(u >= -1.0, 2.0, 0.0)),
        smoothness="piecewise-C2",
        kinks=(-1.0,),
        diff=_sq_hinge_diff,
    )


def _hinge(pid, family):
    return PhiFunction(
        pid,
        family,
        _arr(lambda u: np.maximum(0.0, 1.0 + u)),
        _arr(lambda u: np.where(u >= -1.0, 1.0, 0.0)),
        _arr(lambda u: np.zeros_like(u)),
        smoothness="polyhedral",
        kinks=(-1.0,),
        diff=_hinge_diff,
    )


def squared_hinge() -> PhiFunction:
    return _sq_hinge("squared-hinge", "margin")


def hinge() -> PhiFunction:
    return _hinge("hinge", "margin")


# comp-sum entries, loss Phi(softmax_y(h)) on (0, 1]

def comp_sum_power(tau: float, pid: str = "comp-sum-power") -> PhiFunction:
    """The one-parameter family (u^(tau-1) - 1)/(1 - tau), -log u at tau = 1."""
    tau = float(tau)
    if not 0.0 <= tau < 2.0:
        raise ParameterError(f"comp-sum exponent tau must lie in [0, 2), got {tau}")
    if tau == 1.0:
        value = lambda u: -np.log(u)
        from_log = lambda s: -np.asarray(s, dtype=float)
        diff = lambda x, d: -np.log1p(d / x)
    else:
        value = lambda u: (u ** (tau - 1.0) - 1.0) / (1.0 - tau)
        from_log = lambda s: np.expm1((tau - 1.0) * np.asarray(s, dtype=float)) / (1.0 - tau)
        diff = lambda x, d: x ** (tau - 1.0) * np.expm1((tau - 1.0) * np.log1p(d / x)) / (1.0 - tau)
    return PhiFunction(
        pid,
        "comp-sum",
        _guard(value, 0.0),
        _guard(lambda u: -(u ** (tau - 2.0)), 0.0),
        _guard(lambda u: (2.0 - tau) * u ** (tau - 3.0), 0.0),
        domain=(0.0, 1.0),
        domain_open=(True, False),
        monotonicity="non-increasing",
        tau=None if pid != "comp-sum-power" else tau,
        from_log=_arr(from_log),
        diff=diff,
    )


def neg_log() -> PhiFunction:
    return comp_sum_power(1.0, pid="neg-log")


def sum_exp_ratio() -> PhiFunction:
    return comp_sum_power(0.0, pid="sum-exp-ratio")


def mae_linear() -> PhiFunction:
    return PhiFunction(
        "mae-linear",
        "comp-sum",
        _arr(lambda u: 1.0 - u),
        _arr(lambda u: -np.ones_like(u)),
        _arr(lambda u: np.zeros_like(u)),
        domain=(0.0, 1.0),
        domain_open=(False, False),
        smoothness="polyhedral",
        monotonicity="non-increasing",
        from_log=_arr(lambda s: -np.expm1(s)),
        diff=lambda x, d: -d,
    )


# constrained entries, loss sum_{y' != y} Phi(h_y') with sum_y h_y = 0

def constrained_exp() -> PhiFunction:
    return PhiFunction("constrained-exp", "constrained", _arr(np.exp), _arr(np.exp), _arr(np.exp), diff=_exp_diff)


def constrained_squared_hinge() -> PhiFunction:
    return _sq_hinge("constrained-squared-hinge", "constrained")


def constrained_square() -> PhiFunction:
    # (1 + u)^2 is analytic but only non-decreasing on (-1, inf)
    return PhiFunction(
        "constrained-square",
        "constrained",
        _arr(lambda u: (1.0 + u) ** 2),
        _arr(lambda u: 2.0 * (1.0 + u)),
        _arr(lambda u: np.full_like(u, 2.0)),
        monotone_on=(-1.0, math.inf),
        diff=_square_diff,
    )


def constrained_hinge() -> PhiFunction:
    return _hinge("constrained-hinge", "constrained")


_CATALOG = {
    "exponential": exponential,
    "logistic": logistic,
    "squared-hinge": squared_hinge,
    "hinge": hinge,
    "neg-log": neg_log,
    "sum-exp-ratio": sum_exp_ratio,
    "mae-linear": mae_linear,
    "constrained-exp": constrained_exp,
    "constrained-squared-hinge": constrained_squared_hinge,
    "constrained-square": constrained_square,
    "constrained-hinge": constrained_hinge,
}

PHI_IDS = tuple(_CATALOG) + ("comp-sum-power",)


def get_phi(phi_id: str, tau: Optional[float] = None) -> PhiFunction:
    """Look up a catalog entry by string id."""
    if phi_id == "comp-sum-power":
        if tau is None:
            raise ParameterError("comp-sum-power needs a tau exponent")
        return comp_sum_power(tau)
    try:
        return _CATALOG[phi_id]()
    except KeyError:
        raise NotFoundError(f"unknown phi id {phi_id!r}") from None


@dataclass(frozen=True)
class SurrogateSpec:
    """A loss family instance: family tag, Phi, class count and parameters."""

    family: str
    phi: PhiFunction
    n_classes: int = 2
    tau_exponent: Optional[float] = None
    score_bound: Optional[float] = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ParameterError(f"unknown family {self.family!r}")
        if self.phi.family != self.family:
            raise ParameterError(f"{self.phi.id} belongs to the {self.phi.family} family")
        if int(self.n_classes) != self.n_classes or self.n_classes < 2:
            raise ParameterError(f"n_classes must be an integer >= 2, got {self.n_classes}")
        if self.family == "margin" and self.n_classes != 2:
            raise ParameterError("margin losses are binary: n_classes must be 2")
        if self.score_bound is not None and not self.score_bound > 0:
            raise ParameterError("score_bound must be positive")

    @property
    def spec_id(self) -> str:
        return f"{self.family}/{self.phi.label}/n={self.n_classes}"

    @property
    def constant_c(self) -> float:
        """The constrained-family factor 2 - 1/(n - 1)."""
        return 2.0 - 1.0 / (self.n_classes - 1)

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "phi_id": self.phi.id,
            "n": self.n_classes,
            "tau": self.tau_exponent,
            "lambda": self.score_bound,
        }


def make_spec(family, phi_id, n=2, tau=None, lam=None) -> SurrogateSpec:
    phi = get_phi(phi_id, tau)
    if phi_id in ("neg-log", "sum-exp-ratio") and tau is None:
        tau = 1.0 if phi_id == "neg-log" else 0.0
    return SurrogateSpec(family, phi, int(n), None if tau is None else float(tau), lam)


def gce_spec(n: int, alpha: float) -> SurrogateSpec:
    """Generalized cross-entropy (1 - u^alpha)/alpha as the power member tau = 1 + alpha."""
    if not 0.0 < alpha < 1.0:
        raise ParameterError("alpha must lie in (0, 1) for the power family")
    return make_spec("comp-sum", "comp-sum-power", n, tau=1.0 + alpha)


_SPEC_KEYS = {"family", "phi_id", "n", "tau", "lambda", "schema"}


def spec_from_dict(d: dict) -> SurrogateSpec:
    """Build a spec from its JSON form, rejecting unknown keys."""
    if not isinstance(d, dict):
        raise SchemaError("spec must be a JSON object")
    extra = set(d) - _SPEC_KEYS
    if extra:
        raise SchemaError(f"unknown spec keys: {sorted(extra)}")
    for key in ("family", "phi_id"):
        if key not in d:
            raise SchemaError(f"spec is missing field {key!r}")
    n = d.get("n", 2)
    if not isinstance(n, int) or isinstance(n, bool):
        raise SchemaError("spec field 'n' must be an integer")
    return make_spec(d["family"], d["phi_id"], n, d.get("tau"), d.get("lambda"))


# losses

def _log_softmax(scores):
    scores = np.asarray(scores, dtype=float)
    return scores - logsumexp(scores, axis=-1, keepdims=True)


def loss_matrix(spec: SurrogateSpec, scores) -> np.ndarray:
    """Loss for every label at once.

    Margin scores have shape (...,), one real score per entry, and the result
    has shape (..., 2) with label order (+1, -1).  Multi-class scores have shape (..., n) and the
    result has shape (..., n).  No zero-sum check is made here.
    """
    phi = spec.phi
    scores = np.asarray(scores, dtype=float)
    if spec.family == "margin":
        return np.stack([phi.value(-scores), phi.value(scores)], axis=-1)
    if scores.shape[-1] != spec.n_classes:
        raise ParameterError(f"scores need {spec.n_classes} columns, got {scores.shape[-1]}")
    if spec.family == "comp-sum":
        logp = _log_softmax(scores)
        with np.errstate(over="ignore"):
            return phi.from_log(logp)
    per_class = phi.value(scores)
    n = spec.n_classes
    mask = 1.0 - np.eye(n)
    return per_class @ mask


def eval_loss(spec: SurrogateSpec, scores, label) -> float:
    """Checked evaluation of one loss value.

    Margin labels are -1 or +1; multi-class labels are 0-based indices.
    """
    scores = np.atleast_1d(np.asarray(scores, dtype=float))
    if not np.all(np.isfinite(scores)):
        raise DomainError("scores must be finite")
    if spec.family == "margin":
        if scores.shape != (1,):
            raise ParameterError("margin scores must have length 1")
        if label not in (-1, 1):
            raise ParameterError("margin labels are -1 or +1")
        return float(spec.phi.value(-label * scores[0]))
    n = spec.n_classes
    if scores.shape != (n,):
        raise ParameterError(f"scores must have length {n}")
    if not (isinstance(label, (int, np.integer)) and 0 <= label < n):
        raise ParameterError(f"label must be an index in [0, {n})")
    if spec.family == "constrained":
        if abs(math.fsum(scores)) > 1e-9:
            raise ConstraintError(f"constrained scores must sum to 0, got {math.fsum(scores):.3e}")
        return math.fsum(float(spec.phi.value(scores[j])) for j in range(n) if j != label)
    logp = _log_softmax(scores)[label]
    with np.errstate(over="ignore"):
        val = float(spec.phi.from_log(logp))
    if not math.isfinite(val):
        raise DomainError("softmax probability is 0, outside the domain of Phi")
    return val


def predict(spec: SurrogateSpec, scores) -> np.ndarray:
    """Predicted label index; ties go to the highest index.

    Margin scores predict index 0 (label +1) when h >= 0, index 1 otherwise,
    matching the label order of :func:`loss_matrix`.
    """
    scores = np.asarray(scores, dtype=float)
    if spec.family == "margin":
        return np.where(scores >= 0.0, 0, 1)
    n = scores.shape[-1]
    return n - 1 - np.argmax(scores[..., ::-1], axis=-1)


# regularity

@dataclass(frozen=True)
class RegularityReport:
    phi_id: str
    family: str
    checks: dict
    smooth_hypotheses_hold: bool
    consistent_with_flag: bool

    def failing(self) -> list:
        return sorted(k for k, v in self.checks.items() if not v)


def _sample_range(phi: PhiFunction):
    lo, hi = phi.domain
    if phi.family == "comp-sum":
        return 0.05, 1.0
    if phi.monotone_on is not None:
        return max(phi.monotone_on[0], -5.0), 5.0
    return max(lo, -5.0), min(hi, 5.0)


def verify_regularity(phi: PhiFunction, family: Optional[str] = None, n_grid: int = 2001) -> RegularityReport:
    """Check convexity, derivative consistency and the sign hypotheses.

    The sign hypotheses depend on the family: margin needs Phi'(0) > 0 and
    Phi''(0) > 0; comp-sum needs Phi' < 0 and Phi'' > 0 on (0, 1/2];
    constrained needs Phi' > 0 and Phi'' > 0 on [0, inf) (sampled on [0, 10]).
    """
    family = family or phi.family
    rng = np.random.default_rng(0)
    lo, hi = _sample_range(phi)
    checks = {}

    u1 = rng.uniform(lo, hi, 4000)
    u2 = rng.uniform(lo, hi, 4000)
    lam = rng.uniform(0.0, 1.0, 4000)
    mid = phi.value(lam * u1 + (1 - lam) * u2)
    chord = lam * phi.value(u1) + (1 - lam) * phi.value(u2)
    checks["convexity"] = bool(np.all(mid <= chord + 1e-12 * (1 + np.abs(chord))))

    grid = np.linspace(lo, hi, n_grid)
    h = 1e-5 * (1 + np.abs(grid))
    away = np.ones_like(grid, dtype=bool)
    for k in phi.kinks:
        away &= np.abs(grid - k) > 10 * h
    if phi.family == "comp-sum":
        away &= grid + h <= 1.0
    g = grid[away]
    hg = h[away]
    fd1 = (phi.value(g + hg) - phi.value(g - hg)) / (2 * hg)
    fd2 = (phi.d1(g + hg) - phi.d1(g - hg)) / (2 * hg)
    d1 = phi.d1(g)
    d2 = phi.d2(g)
    checks["d1_consistent"] = bool(np.all(np.abs(fd1 - d1) <= 1e-6 * np.maximum(1.0, np.abs(d1))))
    checks["d2_consistent"] = bool(np.all(np.abs(fd2 - d2) <= 1e-6 * np.maximum(1.0, np.abs(d2))))

    if family == "margin":
        checks["d1_positive_at_0"] = bool(phi.d1(0.0) > 0)
        checks["d2_positive_at_0"] = bool(phi.d2(0.0) > 0)
        sign_keys = ("d1_positive_at_0", "d2_positive_at_0")
    elif family == "comp-sum":
        s = np.linspace(1e-3, 0.5, n_grid)
        checks["d1_negative_on_half_interval"] = bool(np.all(phi.d1(s) < 0))
        checks["d2_positive_on_half_interval"] = bool(np.all(phi.d2(s) > 0))
        sign_keys = ("d1_negative_on_half_interval", "d2_positive_on_half_interval")
    elif family == "constrained":
        s = np.linspace(0.0, 10.0, n_grid)
        checks["d1_positive_on_nonnegatives"] = bool(np.all(phi.d1(s) > 0))
        checks["d2_positive_on_nonnegatives"] = bool(np.all(phi.d2(s) > 0))
        sign_keys = ("d1_positive_on_nonnegatives", "d2_positive_on_nonnegatives")
    else:
        raise ParameterError(f"unknown family {family!r}")

    smooth_ok = all(checks[k] for k in sign_keys) and checks["convexity"]
    curvature_ok = checks[sign_keys[1]]
    consistent = (not curvature_ok) if phi.is_polyhedral else smooth_ok
    return RegularityReport(phi.id, family, checks, smooth_ok, consistent)
