"""Closed-form bound functions Gamma for the cataloged surrogate losses.

A form is valid for a curve when Gamma(T(t)) >= t at every sample, since
then the surrogate gap T(t) forces the target gap below Gamma of it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NotFoundError, ParameterError
from .phi import SurrogateSpec
from .transform import TransformCurve


@dataclass(frozen=True)
class GammaForm:
    """Gamma(s) = sqrt(k s) for shape 'sqrt-scaled', k s for 'linear-scaled'.

    Negative arguments (rounding noise in a computed gap) are clipped to 0.
    """

    spec_id: str
    shape: str
    k: float
    source: str = "table"

    def __call__(self, s):
        s = np.maximum(np.asarray(s, dtype=float), 0.0)
        out = np.sqrt(self.k * s) if self.shape == "sqrt-scaled" else self.k * s
        return out[()] if out.ndim == 0 else out

    def describe(self) -> str:
        if self.shape == "sqrt-scaled":
            return f"sqrt({self.k:g} s)"
        return f"{self.k:g} s"


_MARGIN = {"exponential": ("sqrt-scaled", 2.0), "logistic": ("sqrt-scaled", 2.0),
           "squared-hinge": ("sqrt-scaled", 1.0), "hinge": ("linear-scaled", 1.0)}
_CONSTRAINED = {"constrained-exp": ("sqrt-scaled", 2.0), "constrained-squared-hinge": ("sqrt-scaled", 1.0),
                "constrained-square": ("sqrt-scaled", 1.0), "constrained-hinge": ("linear-scaled", 1.0)}


def gamma_of(spec: SurrogateSpec, variant: str = "table") -> GammaForm:
    """The cataloged Gamma for a spec.

    ``variant='rescaled'`` multiplies the constant of the smooth constrained
    entries by c = 2 - 1/(n-1); this is the inverse implied by the
    constrained characterization and differs from the table entry for n >= 3.
    Other specs ignore the variant.
    """
    if variant not in ("table", "rescaled"):
        raise ParameterError(f"unknown variant {variant!r}")
    pid, n = spec.phi.id, spec.n_classes
    if spec.family == "margin":
        shape, k = _MARGIN[pid]
    elif spec.family == "constrained":
        shape, k = _CONSTRAINED[pid]
        if variant == "rescaled" and shape == "sqrt-scaled":
            return GammaForm(spec.spec_id, shape, k * spec.constant_c, "rescaled")
    elif pid in ("neg-log", "sum-exp-ratio"):
        shape, k = "sqrt-scaled", 2.0
    elif pid == "mae-linear":
        shape, k = "linear-scaled", float(n)
    else:
        tau = spec.phi.tau
        if tau in (0.0, 1.0):
            shape, k = "sqrt-scaled", 2.0
        elif 1.0 < tau < 2.0:
            shape, k = "sqrt-scaled", 2.0 * n ** (tau - 1.0)
        else:
            raise NotFoundError(f"no cataloged Gamma for {spec.spec_id}")
    return GammaForm(spec.spec_id, shape, k)


@dataclass(frozen=True)
class GammaValidation:
    spec_id: str
    gamma: str
    valid: bool
    min_margin: float
    violations: list
    tightness: list

    def to_dict(self) -> dict:
        return {
            "spec_id": self.spec_id,
            "gamma": self.gamma,
            "valid": self.valid,
            "min_margin": self.min_margin,
            "violations": self.violations,
            "tightness": self.tightness,
        }


def validate_bound_shape(curve: TransformCurve, form: GammaForm, tol: float = 1e-9) -> GammaValidation:
    """Check Gamma(T(t)) >= t - tol on every valid sample and report Gamma(T(t))/t."""
    if curve.spec.spec_id != form.spec_id:
        raise ParameterError(f"curve is {curve.spec.spec_id}, Gamma is for {form.spec_id}")
    pts = curve.valid()
    t = np.array([p.t for p in pts])
    g = form(np.array([p.T for p in pts]))
    margin = g - t
    bad = margin < -tol
    violations = [{"t": float(a), "gamma_T": float(b)} for a, b, m in zip(t, g, bad) if m]
    return GammaValidation(
        form.spec_id,
        form.describe(),
        not bool(bad.any()),
        float(margin.min()) if margin.size else float("nan"),
        violations,
        [float(v) for v in g / t],
    )


def is_subadditive(form: GammaForm, rng: np.random.Generator, draws: int = 1000, scale: float = 10.0) -> bool:
    """Gamma(a + b) <= Gamma(a) + Gamma(b) + 1e-12 on random nonnegative pairs."""
    a = rng.uniform(0, scale, draws)
    b = rng.uniform(0, scale, draws)
    return bool(np.all(form(a + b) <= form(a) + form(b) + 1e-12))


def is_concave_nondecreasing(form: GammaForm, grid=None) -> bool:
    s = np.linspace(0.0, 10.0, 2001) if grid is None else np.asarray(grid)
    g = form(s)
    d = np.diff(g)
    return bool(g[0] == 0.0 and np.all(d >= -1e-15) and np.all(np.diff(d) <= 1e-12))
