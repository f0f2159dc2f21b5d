"""The default spec catalog and the smooth-versus-polyhedral growth table."""

from __future__ import annotations

import numpy as np

from .growth import DEFAULT_WINDOW, fit_growth
from .phi import make_spec
from .transform import DEFAULT_TRUNCATION, sample_curve

COMPSUM_N = (2, 3, 5, 10)
CONSTRAINED_N = (2, 3, 5)


def dichotomy_catalog():
    """(spec, expected verdict) pairs: smooth losses grow quadratically, polyhedral ones linearly."""
    rows = [(make_spec("margin", pid), "quadratic") for pid in ("exponential", "logistic", "squared-hinge")]
    rows.append((make_spec("margin", "hinge"), "linear"))
    for n in COMPSUM_N:
        rows += [(make_spec("comp-sum", "neg-log", n), "quadratic"),
                 (make_spec("comp-sum", "sum-exp-ratio", n), "quadratic")]
        rows += [(make_spec("comp-sum", "comp-sum-power", n, tau), "quadratic") for tau in (0.5, 1.0, 1.5)]
        rows.append((make_spec("comp-sum", "mae-linear", n), "linear"))
    for n in CONSTRAINED_N:
        rows += [(make_spec("constrained", pid, n), "quadratic")
                 for pid in ("constrained-exp", "constrained-square", "constrained-squared-hinge")]
        rows.append((make_spec("constrained", "constrained-hinge", n), "linear"))
    return rows


def table_specs():
    """Every spec with a cataloged Gamma, for the bound-validity sweep."""
    specs = [make_spec("margin", pid) for pid in ("exponential", "logistic", "squared-hinge", "hinge")]
    for n in (2, 3, 5):
        specs += [make_spec("comp-sum", "neg-log", n), make_spec("comp-sum", "sum-exp-ratio", n),
                  make_spec("comp-sum", "comp-sum-power", n, 1.5), make_spec("comp-sum", "mae-linear", n)]
        specs += [make_spec("constrained", pid, n) for pid in
                  ("constrained-exp", "constrained-squared-hinge", "constrained-square", "constrained-hinge")]
    return specs


def run_dichotomy(window=DEFAULT_WINDOW, points: int = 24, truncation_A: float = DEFAULT_TRUNCATION):
    """Fit the growth exponent of every catalog spec on a log grid spanning ``window``."""
    grid = np.geomspace(window[0], window[1], points)
    out = []
    for spec, expected in dichotomy_catalog():
        rep = fit_growth(sample_curve(spec, grid, truncation_A), window)
        row = rep.to_dict()
        row["expected"] = expected
        row["ok"] = rep.verdict == expected
        out.append(row)
    return out
