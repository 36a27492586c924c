# %% [markdown]
# # How tight is the separation bound?
#
# After rotation, two player vectors are split by a random hyperplane with
# probability angle / pi.  The solver relies on that probability staying
# below a linear expression in the three inner products.  Here we look at
# the gap on a grid and along the diagonal where it closes.

# %%
import numpy as np

from cutnash.oracles import diagonal_trace, scan_xor_bound_gap
from cutnash.params import RHO

scan = scan_xor_bound_gap(step=0.02)
print("largest gap:", scan.max_value, "at", scan.argmax)

# %% [markdown]
# The gap only reaches zero in the corner where both vectors point away
# from the reference.  Just below it the stationary branch dominates.

# %%
theta, gap = diagonal_trace(3.0, np.pi, 12)
for t, g in zip(theta, gap):
    print(f"{t:.4f}  {g: .3e}")

# %% [markdown]
# Lowering rho breaks the inequality on a large part of the square.

# %%
for rho in (2.5, 2.7, RHO):
    r = scan_xor_bound_gap(step=0.02, rho=rho)
    print(f"rho={rho:.4f}  violations={r.violations}  max={r.max_value:.4f}")
