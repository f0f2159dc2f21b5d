"""Growth-rate estimation of T(t) near zero.

A log-log least-squares fit over a window gives the exponent; smooth
losses land near 2 and polyhedral ones near 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import linregress

from .errors import InsufficientSamplesError, NonPositiveError
from .transform import TransformCurve

DEFAULT_WINDOW = (1e-3, 1e-1)
QUADRATIC_BAND = (1.95, 2.05)
LINEAR_BAND = (0.97, 1.03)
MIN_SAMPLES = 8


@dataclass(frozen=True)
class GrowthReport:
    spec_id: str
    exponent: float
    exponent_ci: tuple
    c_lower: float
    C_upper: float
    fit_window: tuple
    verdict: str
    n_samples: int

    def to_dict(self) -> dict:
        return {
            "spec_id": self.spec_id,
            "exponent": self.exponent,
            "exponent_ci": list(self.exponent_ci),
            "c_lower": self.c_lower,
            "C_upper": self.C_upper,
            "fit_window": list(self.fit_window),
            "verdict": self.verdict,
            "n_samples": self.n_samples,
        }


def classify_exponent(p: float) -> str:
    if QUADRATIC_BAND[0] <= p <= QUADRATIC_BAND[1]:
        return "quadratic"
    if LINEAR_BAND[0] <= p <= LINEAR_BAND[1]:
        return "linear"
    return "other"


def fit_growth(curve: TransformCurve, window: tuple = DEFAULT_WINDOW) -> GrowthReport:
    """Fit log T = p log t + b on the samples inside ``window``.

    The sandwich constants are the extreme ratios T(t)/t^k at the rounded
    exponent k.
    """
    lo, hi = window
    pts = [p for p in curve.valid() if lo <= p.t <= hi]
    if len(pts) < MIN_SAMPLES:
        raise InsufficientSamplesError(f"{len(pts)} samples in window {window}, need {MIN_SAMPLES}")
    t = np.array([p.t for p in pts])
    T = np.array([p.T for p in pts])
    if np.any(T <= 0):
        raise NonPositiveError(f"T <= 0 at t = {t[T <= 0][0]:.3e}; raise the window's lower end")
    fit = linregress(np.log(t), np.log(T))
    p = float(fit.slope)
    k = max(1, int(round(p)))
    ratio = T / t ** k
    return GrowthReport(
        curve.spec.spec_id,
        p,
        (p - float(fit.stderr), p + float(fit.stderr)),
        float(ratio.min()),
        float(ratio.max()),
        (float(lo), float(hi)),
        classify_exponent(p),
        len(pts),
    )
