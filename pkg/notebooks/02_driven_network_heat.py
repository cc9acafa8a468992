"""
Heat flow through a driven two-oscillator network
==================================================

Two coupled oscillators, each attached to its own ohmic reservoir, with the
first one's spring constant modulated periodically.
"""

# %%
import numpy as np

from coldlimits import currents, validation

sol, res = validation.two_node_fixture()
print("harmonics kept:", sol.K, " stable:", sol.stable)

# %% [markdown]
# The heat leaving each reservoir splits into resonant pumping (transport
# between reservoirs helped by the drive), resonant heating inside one
# reservoir and non-resonant heating from pair creation.

# %%
rep = currents.heat_currents(sol, res)
for i, lab in enumerate(rep.labels):
    print(f"{lab}: RP={rep.q_rp[i]: .4e} RH={rep.q_rh[i]: .4e} NRH={rep.q_nrh[i]: .4e} "
          f"direct={rep.q_direct[i]: .4e}")
print("drive power", rep.power, " covariance estimate", rep.power_covariance)

# %% [markdown]
# At zero temperature only pair creation is left. It stays negative: the
# drive heats both reservoirs however cold they are.

# %%
sol0, res0 = validation.two_node_fixture(T=(0.0, 0.0))
d0 = currents.decompose(sol0, res0)
print("T=0  RP", d0.rp, " RH", d0.rh, " NRH", d0.nrh)

# %% [markdown]
# Weak coupling: resonant channels scale like gamma, pair creation like gamma^2.

# %%
g0 = np.array([0.05, 0.08])
for s in (1.0, 0.5, 0.25):
    sol_s, res_s = validation.two_node_fixture(gamma=tuple(s * g0), drive=0.005)
    d = currents.decompose(sol_s, res_s)
    print(f"scale {s:4.2f}  RP+RH={d.rp[0] + d.rh[0]: .4e}  NRH={d.nrh[0]: .4e}")
