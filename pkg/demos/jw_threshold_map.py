"""Map of the fidelity over the noise-parameter plane (J, W).

Sweeps the noise strength J and arrival rate W on a small grid, probes the
fidelity at t = 50T, and marks the high-fidelity region.  The map shows
both trends: fidelity keeps improving with J, and grows with W toward a
plateau whose onset the grid reports per J row.
"""

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

import shotqsd as sq

out_dir = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(out_dir, exist_ok=True)

system = sq.SystemParams(omega=1.0, g=0.4, gamma=0.2, T=5.0)
T = system.T

J_values = np.array([1.0, 2.0, 4.0, 8.0, 16.0])
W_figure = np.array([100.0, 200.0, 400.0, 800.0, 1600.0])  # units of 1/T
probe = 50 * T

grid = sq.sweep_jw(
    system,
    J_values,
    W_figure / T,
    [probe],
    n_traj=48,
    dt=1e-3,
    stream=sq.RngStream(3001),
    n_workers=4,
)

fig, ax = plt.subplots(figsize=(6.5, 4.8))
im = ax.pcolormesh(W_figure, J_values, grid.fidelity[:, :, 0], shading="nearest",
                   vmin=0.5, vmax=1.0, cmap="viridis")
fig.colorbar(im, ax=ax, label=f"F(t = 50T)")
ax.contour(W_figure, J_values, grid.fidelity[:, :, 0], levels=[0.9, 0.95],
           colors="w", linewidths=1)
ax.set_xscale("log")
ax.set_xlabel("W  (units of 1/T)")
ax.set_ylabel("J  (units of omega)")
ax.set_title("Suppression quality over the noise-parameter plane")
fig.tight_layout()
fig.savefig(os.path.join(out_dir, "jw_threshold_map.png"), dpi=150)

print("F(50T) grid (rows J, columns W):")
for j, J in enumerate(J_values):
    row = "  ".join(f"{v:.3f}" for v in grid.fidelity[j, :, 0])
    print(f"  J={J:>4g}: {row}")
onset = grid.plateau_onset(0)
print("plateau onset per J (W within 0.005 of the largest-W value):")
for J, W in zip(J_values, onset * T):
    print(f"  J={J:>4g}: W >= {W:g}/T")
print("wrote", os.path.join(out_dir, "jw_threshold_map.png"))
