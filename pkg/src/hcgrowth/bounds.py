"""End-to-end checks of H-consistency and generalization bounds.

A bound check compares, for one table h of an explicit list,

    lhs = E_01(h) - E*_01(H) + M_01(H)
    rhs = Gamma(E_l(h) - E*_l(H) + M_l(H))

where every term is an exact finite sum.  The pointwise infima inside the
two gaps use the closure of the hypothesis set.  The default ``complete``
closure treats the listed tables as members of a class that can reach any
score at any single point, which is the setting in which the inequality
is a theorem.  Under the ``list`` closure the point-wise infima only see
the listed values, and the inequality can fail (see the tests).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ParameterError
from .gamma import GammaForm, gamma_of
from .mingap import (
    DiscreteInstance,
    HypothesisSet,
    bayes_zero_one,
    conditional_errors,
    pointwise_inf,
    zero_one_errors,
)
from .phi import SurrogateSpec, loss_matrix, make_spec


@dataclass(frozen=True)
class BoundCheck:
    lhs: float
    rhs: float
    rhs_split: float
    slack: float
    epsilon: float
    mingap_surrogate: float
    mingap_target: float
    hypothesis_id: int
    spec_id: str
    instance_id: str
    closure: str

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _terms(instance, hset, spec, closure):
    hs = hset.with_closure(closure)
    hs.validate_for(spec, instance)
    w = instance.weights
    C = conditional_errors(spec, instance, hs.tables)
    E = C @ w
    M_l = float(E.min() - w @ pointwise_inf(spec, instance, hs, C))
    Z = zero_one_errors(spec, instance, hs.tables)
    E01 = Z @ w
    pw01 = Z.min(axis=0) if closure == "list" else bayes_zero_one(instance)
    M_01 = float(E01.min() - w @ pw01)
    return E, E01, M_l, M_01


def check_all(instance: DiscreteInstance, hset: HypothesisSet, spec: SurrogateSpec,
              gamma: Optional[GammaForm] = None, closure: str = "complete"):
    """Bound terms for every table at once.

    Returns (lhs, rhs, rhs_split, eps, M_l, M_01) with arrays of length K.
    """
    gamma = gamma_of(spec) if gamma is None else gamma
    E, E01, M_l, M_01 = _terms(instance, hset, spec, closure)
    eps = E - E.min()
    lhs = E01 - E01.min() + M_01
    rhs = gamma(eps + M_l)
    split = gamma(eps) + gamma(M_l)
    return lhs, rhs, split, eps, M_l, M_01


def check_bound(instance: DiscreteInstance, hset: HypothesisSet, h_index: int, spec: SurrogateSpec,
                gamma: Optional[GammaForm] = None, closure: str = "complete") -> BoundCheck:
    """One bound check with both the joint and the split right-hand side."""
    if hset.kind != "explicit-list":
        raise ParameterError("bound checks need an explicit list")
    if not 0 <= h_index < hset.K:
        raise ParameterError(f"h_index must lie in [0, {hset.K})")
    gamma = gamma_of(spec) if gamma is None else gamma
    lhs, rhs, split, eps, M_l, M_01 = check_all(instance, hset, spec, gamma, closure)
    k = h_index
    return BoundCheck(float(lhs[k]), float(rhs[k]), float(split[k]), float(rhs[k] - lhs[k]), float(eps[k]),
                      M_l, M_01, k, spec.spec_id, instance.name, closure)


# fuzzing

FUZZ_CATALOG = {
    "margin": [("exponential", None), ("logistic", None), ("squared-hinge", None), ("hinge", None)],
    "comp-sum": [("neg-log", None), ("sum-exp-ratio", None), ("comp-sum-power", 1.5), ("mae-linear", None)],
    "constrained": [("constrained-exp", None), ("constrained-squared-hinge", None),
                    ("constrained-square", None), ("constrained-hinge", None)],
}
FUZZ_LAMBDA = 2.0
TIGHTNESS_BINS = np.linspace(0.0, 1.0, 11)


def random_instance(rng: np.random.Generator, spec: SurrogateSpec, m: int, K: int, lam: float = FUZZ_LAMBDA):
    """Equal weights, Dirichlet(1,...,1) conditionals, scores uniform in [-lam, lam].

    Constrained tables are projected onto the zero-sum subspace.
    """
    n = spec.n_classes
    weights = np.full(m, 1.0 / m)
    p = rng.dirichlet(np.ones(n), size=m)
    d = 1 if spec.family == "margin" else n
    tables = rng.uniform(-lam, lam, size=(K, m, d))
    if spec.family == "constrained":
        tables = tables - tables.mean(axis=2, keepdims=True)
    return DiscreteInstance(weights, p), HypothesisSet("explicit-list", tables)


def _draw_spec(rng, families):
    fam = families[int(rng.integers(len(families)))]
    pid, tau = FUZZ_CATALOG[fam][int(rng.integers(len(FUZZ_CATALOG[fam])))]
    n = 2 if fam == "margin" else int(rng.integers(2, 6))
    return make_spec(fam, pid, n, tau)


def fuzz_bounds(seed: int, draws: int, families=("margin", "comp-sum", "constrained"),
                closure: str = "complete", gamma_variant: str = "table", tol: float = 1e-9) -> dict:
    """Randomized check of the bound on every table of random instances.

    Each draw uses its own generator spawned from ``seed``, so results do
    not depend on evaluation order.  Violations are returned with the full
    instance and tables needed to reproduce them.
    """
    if isinstance(families, str):
        families = tuple(FUZZ_CATALOG) if families == "all" else tuple(families.split(","))
    for f in families:
        if f not in FUZZ_CATALOG:
            raise ParameterError(f"unknown family {f!r}")
    summary = {
        "seed": int(seed), "draws": int(draws), "families": list(families), "closure": closure,
        "gamma_variant": gamma_variant, "checks": 0, "violations": 0, "min_slack": None,
        "monotone_gamma_failures": 0, "split_below_joint": 0,
        "tightness_bins": [float(b) for b in TIGHTNESS_BINS], "tightness_counts": [0] * (len(TIGHTNESS_BINS) - 1),
        "per_spec": {}, "violation_records": [],
    }
    if draws <= 0:
        return summary
    children = np.random.SeedSequence(seed).spawn(draws)
    min_slack = math.inf
    ratios = []
    for i, child in enumerate(children):
        rng = np.random.default_rng(child)
        spec = _draw_spec(rng, families)
        m = int(rng.integers(1, 7))
        K = int(rng.integers(1, 11))
        inst, hs = random_instance(rng, spec, m, K)
        gamma = gamma_of(spec, gamma_variant)
        lhs, rhs, split, eps, M_l, _ = check_all(inst, hs, spec, gamma, closure)
        slack = rhs - lhs
        rec = summary["per_spec"].setdefault(spec.spec_id, {"checks": 0, "violations": 0, "min_slack": math.inf})
        rec["checks"] += K
        rec["min_slack"] = min(rec["min_slack"], float(slack.min()))
        summary["checks"] += K
        min_slack = min(min_slack, float(slack.min()))
        summary["split_below_joint"] += int(np.sum(split < rhs - 1e-12))
        order = np.argsort(eps, kind="stable")
        summary["monotone_gamma_failures"] += int(np.sum(np.diff(rhs[order]) < -1e-12))
        pos = rhs > 0
        ratios.extend((lhs[pos] / rhs[pos]).tolist())
        bad = np.flatnonzero(slack < -tol)
        rec["violations"] += int(bad.size)
        summary["violations"] += int(bad.size)
        for k in bad:
            summary["violation_records"].append({
                "draw": i, "spec": spec.to_dict(), "h_index": int(k), "lhs": float(lhs[k]),
                "rhs": float(rhs[k]), "instance": inst.to_dict(), "tables": hs.tables.tolist(),
            })
    r = np.clip(np.array(ratios), 0.0, 1.0) if ratios else np.zeros(0)
    summary["tightness_counts"] = [int(c) for c in np.histogram(r, bins=TIGHTNESS_BINS)[0]]
    summary["min_slack"] = min_slack
    summary["per_spec"] = dict(sorted(summary["per_spec"].items()))
    return summary


# Rademacher complexity and the generalization bound

@dataclass(frozen=True)
class LabeledSample:
    """m draws (point index, label index) from a discrete instance."""

    points: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "points", np.asarray(self.points, dtype=int))
        object.__setattr__(self, "labels", np.asarray(self.labels, dtype=int))
        if self.points.shape != self.labels.shape or self.points.ndim != 1:
            raise ParameterError("points and labels must be 1-D arrays of equal length")

    @property
    def m(self) -> int:
        return self.points.size


def draw_sample(instance: DiscreteInstance, m: int, rng: np.random.Generator) -> LabeledSample:
    pts = rng.choice(instance.m, size=m, p=instance.weights)
    u = rng.random(m)
    cdf = np.cumsum(instance.conditionals[pts], axis=1)
    labels = np.minimum((u[:, None] > cdf).sum(axis=1), instance.n_classes - 1)
    return LabeledSample(pts, labels)


def sample_losses(spec: SurrogateSpec, hset: HypothesisSet, sample: LabeledSample) -> np.ndarray:
    """l(h_k, x_i, y_i), shape (K, m)."""
    tables = hset.tables[:, sample.points]
    scores = tables[..., 0] if spec.family == "margin" else tables
    L = loss_matrix(spec, scores)
    return np.take_along_axis(L, np.broadcast_to(sample.labels[None, :, None], L.shape[:2] + (1,)), -1)[..., 0]


@dataclass(frozen=True)
class RademacherEstimate:
    value: float
    method: str
    std_error: Optional[float]
    B_loss: float
    trials: Optional[int] = None

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def rademacher_exact(L: np.ndarray, chunk: int = 1 << 14) -> float:
    """E_sigma max_k (1/m) sum_i sigma_i L[k, i] over all 2^m sign vectors.

    Sign vectors are paired with their negation, so a single row gives
    max(s) + max(-s) = 0 exactly.
    """
    L = np.asarray(L, dtype=float)
    K, m = L.shape
    if m == 0:
        return 0.0
    total = 0.0
    half = 1 << (m - 1)
    bits = np.arange(m - 1)
    for start in range(0, half, chunk):
        idx = np.arange(start, min(start + chunk, half))
        S = np.ones((idx.size, m))
        S[:, 1:] = 1 - 2 * ((idx[:, None] >> bits[None, :]) & 1)
        s = S @ L.T
        total += math.fsum(s.max(axis=1) + (-s).max(axis=1))
    return total / (2 * half) / m


def rademacher_monte_carlo(L: np.ndarray, trials: int, rng: np.random.Generator, chunk: int = 1 << 14):
    """Monte Carlo estimate and its standard error."""
    L = np.asarray(L, dtype=float)
    K, m = L.shape
    vals = []
    done = 0
    while done < trials:
        b = min(chunk, trials - done)
        S = rng.choice((-1.0, 1.0), size=(b, m))
        vals.append((S @ L.T).max(axis=1) / m)
        done += b
    v = np.concatenate(vals)
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(trials))


def loss_bound(spec: SurrogateSpec, hset: HypothesisSet, instance: Optional[DiscreteInstance] = None,
               sample: Optional[LabeledSample] = None) -> float:
    """max over tables, support points and labels of the loss."""
    tables = hset.tables
    if instance is None and sample is not None:
        tables = tables[:, np.unique(sample.points)]
    scores = tables[..., 0] if spec.family == "margin" else tables
    return float(np.max(loss_matrix(spec, scores)))


def rademacher_complexity(L: np.ndarray, method: str = "auto", trials: int = 10 ** 5, seed: int = 0,
                          B_loss: float = float("nan")) -> RademacherEstimate:
    m = L.shape[1]
    if method == "auto":
        method = "exact" if m <= 20 else "monte-carlo"
    if method == "exact":
        if m > 20:
            raise ParameterError("exact enumeration is limited to m <= 20")
        return RademacherEstimate(rademacher_exact(L), "exact-enumeration", None, B_loss)
    if trials < 10 ** 4:
        raise ParameterError("Monte Carlo needs at least 10^4 trials")
    v, se = rademacher_monte_carlo(L, trials, np.random.default_rng(seed))
    return RademacherEstimate(v, "monte-carlo", se, B_loss, trials)


def _check_delta(delta):
    if not 0.0 < delta < 1.0:
        raise ParameterError(f"delta must lie in (0, 1), got {delta}")


def estimation_term(R: float, B: float, m: int, delta: float) -> float:
    """4 R + 2 B sqrt(log(2/delta) / (2 m))."""
    return 4.0 * R + 2.0 * B * math.sqrt(math.log(2.0 / delta) / (2.0 * m))


def rademacher_bound(sample: LabeledSample, hset: HypothesisSet, spec: SurrogateSpec, gamma: Optional[GammaForm],
                     delta: float, instance: DiscreteInstance, method: str = "auto", trials: int = 10 ** 5,
                     seed: int = 0, closure: str = "complete"):
    """Empirical Rademacher complexity of the loss class and the zero-one bound

        Gamma(4 R + 2 B sqrt(log(2/delta)/(2m)) + M_l(H)) - M_01(H).
    """
    _check_delta(delta)
    gamma = gamma_of(spec) if gamma is None else gamma
    B = loss_bound(spec, hset, instance)
    est = rademacher_complexity(sample_losses(spec, hset, sample), method, trials, seed, B)
    _, _, M_l, M_01 = _terms(instance, hset, spec, closure)
    value = float(gamma(estimation_term(est.value, B, sample.m, delta) + M_l)) - M_01
    return est, value


def estimation_failure_rate(instance: DiscreteInstance, hset: HypothesisSet, spec: SurrogateSpec, m: int,
                            delta: float, resamples: int = 1000, seed: int = 0,
                            gamma: Optional[GammaForm] = None, closure: str = "complete") -> dict:
    """How often the empirical minimizer breaks the estimation bound.

    Each resample draws m labeled points, picks the table with the smallest
    empirical surrogate loss and compares its excess surrogate error with
    4 R + 2 B sqrt(log(2/delta)/(2m)), and its excess zero-one error with
    the assembled zero-one bound.
    """
    _check_delta(delta)
    gamma = gamma_of(spec) if gamma is None else gamma
    rng = np.random.default_rng(seed)
    B = loss_bound(spec, hset, instance)
    E, E01, M_l, M_01 = _terms(instance, hset, spec, closure)
    fail_l = fail_01 = 0
    for _ in range(resamples):
        S = draw_sample(instance, m, rng)
        L = sample_losses(spec, hset, S)
        k = int(np.argmin(L.mean(axis=1)))
        if m <= 12:
            R = rademacher_exact(L)
        else:
            R = rademacher_monte_carlo(L, 10 ** 4, rng)[0]
        term = estimation_term(R, B, m, delta)
        fail_l += int(E[k] - E.min() > term)
        fail_01 += int(E01[k] - E01.min() > float(gamma(term + M_l)) - M_01)
    return {"resamples": resamples, "m": m, "delta": delta, "B_loss": B,
            "surrogate_failures": fail_l, "surrogate_rate": fail_l / resamples,
            "target_failures": fail_01, "target_rate": fail_01 / resamples}
