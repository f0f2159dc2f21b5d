# %% [markdown]
# # The cataloged Gamma for constrained losses
#
# For constrained losses with n >= 3 the sampled T(t) sits below t^2, so
# Gamma(s) = sqrt(s) does not invert it.  Rescaling by c = 2 - 1/(n-1)
# restores validity.  This script measures the gap and shows one fuzz
# counterexample.

# %%
import numpy as np

from hcgrowth import make_spec
from hcgrowth.bounds import fuzz_bounds
from hcgrowth.gamma import gamma_of, validate_bound_shape
from hcgrowth.transform import sample_curve

grid = np.linspace(0.05, 0.95, 19)
for n in (2, 3, 5):
    spec = make_spec("constrained", "constrained-square", n)
    curve = sample_curve(spec, grid)
    table = validate_bound_shape(curve, gamma_of(spec, "table"))
    rescaled = validate_bound_shape(curve, gamma_of(spec, "rescaled"))
    ratio = np.sqrt(curve.T) / curve.t
    print(n, spec.constant_c, table.valid, rescaled.valid, ratio.min(), 1 / np.sqrt(spec.constant_c))

# %% [markdown]
# The fuzz run usually does not reach this gap, since
# random tables rarely make the surrogate gap small while the zero-one gap
# is large.  With seed 42 it finds exactly one case.

# %%
summary = fuzz_bounds(42, 10_000)
print(summary["violations"])
for rec in summary["violation_records"]:
    print(rec["spec"], rec.get("draw"), rec["h_index"], rec["lhs"], rec["rhs"])

# %%
print(fuzz_bounds(42, 10_000, gamma_variant="rescaled")["violations"])
