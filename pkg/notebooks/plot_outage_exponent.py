"""
=========================================
Outage exponent against bandwidth
=========================================

The number of resolvable paths grows as ``(tau_m W)^delta``, so the
Chernoff exponent of the outage probability grows with bandwidth at a
rate fixed by the sparsity exponent.
"""

# %%
# Exponent curves
# ---------------

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from sparsekey.core_model import ChannelConfig
from sparsekey.outage import exponent_curve, outage_report

w = np.linspace(20e6, 1e9, 50)
fig, ax = plt.subplots()
for delta in (0.5, 0.75, 1.0):
    cfg = ChannelConfig(1e8, 100e-9, delta, 0.5, 0.9)
    pts = exponent_curve(cfg, 0.9, w)
    ax.plot(w, [p.exponent for p in pts], label=f"delta={delta}")
ax.set_xlabel("bandwidth (Hz)")
ax.set_ylabel("outage exponent (bits)")
ax.legend()

# %%
# Exact tail against the bound
# ----------------------------
#
# For a handful of paths the Chernoff bound is loose but always above
# the exact binomial tail.

for L in (4, 16, 64):
    r = outage_report(L, 0.5, 0.75)
    print(f"L={L:3d}  exact={r.p_exact:.3e}  bound={r.p_bound:.3e}  gauss={r.p_gauss:.3e}")
plt.show()
