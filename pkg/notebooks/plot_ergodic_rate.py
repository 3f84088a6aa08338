"""
=========================================
Ergodic key rate of a sparse channel
=========================================

Rate against SNR for continuous and on-off sounding, and rate against
bandwidth at fixed SNR, where the sparsity of the channel makes the
curve peak at a finite bandwidth.
"""

# %%
# Rate against SNR
# ----------------

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from sparsekey.core_model import ChannelConfig
from sparsekey.ergodic import sweep, wideband_approx

cfg = ChannelConfig(bandwidth_hz=100e6, max_delay_s=10e-6, delta=0.5, theta=0.5, eta=0.1)
snrs = np.geomspace(1e-2, 1e2, 15)
cont = sweep(cfg, "snr", snrs, samples=20_000, seed=1)
onoff = sweep(cfg, "snr", snrs, use_onoff=True, samples=20_000, seed=1)

fig, ax = plt.subplots()
ax.loglog(snrs, [p.rate_bits for p in cont], "o-", label="continuous")
ax.loglog(snrs, [p.rate_bits for p in onoff], "s--", label="on-off")
ax.loglog(snrs, [wideband_approx(cfg, g) for g in snrs], ":", label="wideband")
ax.set_xlabel("SNR")
ax.set_ylabel("bits per coherence block")
ax.legend()

# %%
# At low SNR the on-off scheme sounds on a fraction of blocks and beats
# the quadratic wideband regime.

for p, q in zip(cont[:3], onoff[:3]):
    print(f"snr={p.snr:.3g}  continuous={p.rate_bits:.3e}  on-off={q.rate_bits:.3e}  lambda={q.lambda_star:.3g}")

# %%
# Rate against bandwidth
# ----------------------

cfg = ChannelConfig(bandwidth_hz=1e6, max_delay_s=10e-6, delta=0.5, theta=0.5, eta=0.5)
w = np.geomspace(4e5, 1e10, 30)
pts = sweep(cfg, "bandwidth", w, snr=10.0, samples=20_000, seed=2)
rate = np.array([p.rate_bits for p in pts])
print(f"peak at W = {w[np.argmax(rate)]:.3g} Hz")

fig, ax = plt.subplots()
ax.semilogx(w, rate, "o-")
ax.set_xlabel("bandwidth (Hz)")
ax.set_ylabel("bits per coherence block")
plt.show()
