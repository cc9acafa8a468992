"""
Cooling a mechanical mode: sideband versus Doppler
==================================================

A driven oscillator at omega_0 couples a cold mode at omega_m to a broadband
zero-temperature dump. Scanning the drive frequency finds the lowest
occupation the pumping/heating balance allows.
"""

# %%
from coldlimits import cooling
from coldlimits.network import SpectralDensity

# %% [markdown]
# Narrow line, gamma = 0.01 omega_m: the optimum sits one mode frequency below
# omega_0 and the floor is (gamma / 2 omega_m)^2.

# %%
narrow = cooling.CoolingSetup(1.0, 100.0, 0.01, I_B=SpectralDensity.flat(1.0, [[1.0]], (0.0, 1010.0)))
r = cooling.optimize_drive_frequency(narrow)
print(f"omega_d_opt={r.omega_d_opt:.5f}  n_bar={r.n_bar_min:.4e}  "
      f"limit={cooling.sideband_limit(0.01, 1.0).value:.4e}  T_min={r.T_min:.4f}")

# %% [markdown]
# Broad line, gamma = 50 omega_m: the optimum moves to omega_0 - gamma and the
# floor rises to roughly gamma / 2 omega_m.

# %%
broad = cooling.CoolingSetup(1.0, 1000.0, 50.0)
r = cooling.optimize_drive_frequency(broad)
print(f"omega_d_opt={r.omega_d_opt:.3f}  n_bar={r.n_bar_min:.4f}  "
      f"limit={cooling.doppler_limit(50.0, 1.0, 1000.0).value:.4f}")

# %% [markdown]
# In between, the floor crosses over smoothly.

# %%
for gamma in (0.01, 0.1, 1.0, 10.0, 50.0):
    s = cooling.CoolingSetup(1.0, 1000.0, gamma)
    r = cooling.optimize_drive_frequency(s, (500.0, 1100.0), 600)
    print(f"gamma={gamma:6.2f}  regime={r.regime:12s}  n_bar={r.n_bar_min:.4e}")
