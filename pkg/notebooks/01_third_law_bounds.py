"""
How cold can a finite bath make a qubit?
========================================

A tour of the resource-theory side: vacancies, Renyi conditions and the
error bounds that follow from a finite worst-case work.
"""

# %%
import math

import numpy as np

from coldlimits import bounds, qstat

# %% [markdown]
# Start with a qubit at unit temperature. The vacancy of a state is its
# relative-entropy distance from the thermal state, seen from the thermal side.
# It diverges as the ground-state error goes to zero, and only logarithmically.

# %%
H = np.diag([0.0, 1.0])
for eps in (1e-1, 1e-3, 1e-6, 1e-9):
    v = qstat.vacancy(np.diag([1 - eps, eps]), H, 1.0)
    print(f"eps={eps:8.0e}  vacancy={v:8.4f}")

# %% [markdown]
# A resource of n copies carries n times the vacancy of one copy, so the
# reachable error falls exponentially in n but never reaches zero.

# %%
resource = qstat.SpectrumPair([0.95, 0.05], [0.0, 2.0])
target_v = lambda eps: qstat.vacancy(np.diag([1 - eps, eps]), H, 1.0)  # noqa: E731
v1 = qstat.vacancy(np.diag(resource.probs), np.diag(resource.energies), 1.0)
for n in (1, 4, 16, 64):
    lo, hi = 1e-300, 0.5
    for _ in range(200):
        mid = math.sqrt(lo * hi)
        lo, hi = (mid, hi) if target_v(mid) > n * v1 else (lo, mid)
    print(f"n={n}  smallest error compatible with the vacancy budget ~ {hi:.3e}")

# %% [markdown]
# Worst-case work bounds the cooling error through the bath density of
# states. For the power-law entropy family the error falls like a stretched
# exponential in W.

# %%
dos = bounds.DoSModel(a=1.0, nu=0.5)
for W in (1.0, 2.0, 4.0, 8.0):
    task = bounds.CoolingTask(2, 1, 1.0, 1.0, W)
    mb = bounds.masanes_error_bound(task, dos)
    print(f"W={W:4.1f}  E0={mb.E0:9.4f}  ln eps_min={mb.log_epsilon:10.4f}  "
          f"closed form exponent={-bounds.bath_family_exponent(task, 1.0, 0.5, 1.0):10.4f}")

# %% [markdown]
# The closed form keeps only -E0/T. The full bound also carries ln Omega(E0)
# and ln Z_B, which explains the remaining gap at small W.

# %%
task = bounds.CoolingTask(2, 1, 1.0, 1.0, 10.0)
print("radiation bath:", bounds.radiation_temperature_bound(task, 1.0))
print("Landauer oracle:", bounds.landauer_brute_force_oracle(2, 3, 1.0, 500, seed=1))
