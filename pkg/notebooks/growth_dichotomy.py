# %% [markdown]
# # Smooth versus polyhedral surrogates
#
# Sample T(t) for a few surrogates, fit the log-log slope near zero and
# compare with the closed forms.

# %%
import math

import numpy as np

from hcgrowth import make_spec
from hcgrowth.growth import fit_growth
from hcgrowth.transform import sample_curve

grid = np.geomspace(1e-3, 1e-1, 24)
specs = [make_spec("margin", "exponential"), make_spec("margin", "logistic"), make_spec("margin", "hinge"),
         make_spec("comp-sum", "neg-log", 5), make_spec("comp-sum", "mae-linear", 5),
         make_spec("constrained", "constrained-exp", 3), make_spec("constrained", "constrained-hinge", 3)]

# %%
for spec in specs:
    rep = fit_growth(sample_curve(spec, grid))
    print(f"{spec.spec_id:40s} slope {rep.exponent:.4f}  {rep.verdict:9s} c={rep.c_lower:.4f} C={rep.C_upper:.4f}")

# %% [markdown]
# The exponential margin loss has T(t) = 1 - sqrt(1 - t^2), so T(t)/t^2
# tends to 1/2.  Check the sampled ratio.

# %%
curve = sample_curve(make_spec("margin", "exponential"), grid)
print(np.c_[curve.t[::6], curve.T[::6] / curve.t[::6] ** 2])
print(max(abs(curve.T - (1 - np.sqrt(1 - curve.t ** 2)))))

# %% [markdown]
# Multi-class cross-entropy has the same transformation as binary logistic
# for every n.

# %%
t = 0.3
logistic = (1 - t) / 2 * math.log1p(-t) + (1 + t) / 2 * math.log1p(t)
for n in (2, 3, 10):
    print(n, sample_curve(make_spec("comp-sum", "neg-log", n), [t]).T[0] - logistic)
