"""Statistical validation of the two noise generators.

Left: the empirical autocorrelation of the complex Ornstein-Uhlenbeck
ensemble against its target (gamma/2) exp(-gamma tau).  Right: the
empirical distribution of kick amplitudes of the Poissonian shot trains
against the exponential law, plus the headline moments.
"""

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

import shotqsd as sq

out_dir = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(out_dir, exist_ok=True)

# --- Ornstein-Uhlenbeck side -------------------------------------------------
gamma = 0.2
ou_params = sq.OUParams(gamma=gamma, dt=0.01, n_steps=2000)
lags = np.arange(0, 1501, 50)
ou = sq.ou_statistics(ou_params, 4000, sq.RngStream(7), lag_steps=lags)
print(f"OU autocorrelation relative L2 error: {ou.autocorr_rel_l2_error:.3%}")
print(f"OU mean consistent with zero at 3 sigma: {ou.mean_consistent_with_zero()}")

# --- shot-noise side ----------------------------------------------------------
J, W = 3.0, 40.0
shot = sq.ShotNoiseParams(J=J, W=W)
stream = sq.RngStream(8)
trains = [sq.sample_shot_train(shot, 50.0, stream.child(i)) for i in range(800)]
moments = sq.shot_train_moments(trains, shot)
print(f"empirical rate  {moments.rate_empirical:.3f}  (target {moments.rate_expected:g})")
print(f"empirical M[x]  {moments.amp_mean_empirical:.3f}  (target {moments.amp_mean_expected:g})")
print(f"empirical M[c]  {moments.c_mean_empirical:.2f}  (target J*W = {moments.c_mean_expected:g})")

fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
ax1.plot(ou.lag_times, ou.autocorr_empirical, "o", ms=3, label="ensemble estimate")
ax1.plot(ou.lag_times, ou.autocorr_target, "-", label=r"$(\gamma/2)e^{-\gamma\tau}$")
ax1.set_xlabel("lag")
ax1.set_ylabel("autocorrelation")
ax1.legend()
ax1.set_title("Ornstein-Uhlenbeck memory")

amps = np.concatenate([t.amplitudes for t in trains])
ax2.hist(amps, bins=80, density=True, alpha=0.6, label="sampled kicks")
x = np.linspace(0, amps.max(), 300)
ax2.plot(x, np.exp(-x / J) / J, "r-", label=f"exponential, mean {J:g}")
ax2.set_xlabel("kick amplitude")
ax2.set_ylabel("density")
ax2.set_yscale("log")
ax2.legend()
ax2.set_title("Shot-noise amplitude law")
fig.tight_layout()
fig.savefig(os.path.join(out_dir, "noise_validation.png"), dpi=150)
print("wrote", os.path.join(out_dir, "noise_validation.png"))
