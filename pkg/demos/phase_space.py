"""Entanglement entropy over phase space, next to the classical stroboscopic map.

Run from the repository root:  python demos/phase_space.py  (writes phase_space.png)
"""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from kickedtop.classical_map import stroboscopic_map
from kickedtop.experiments import GridSpec, entropy_map_scan
from kickedtop.floquet import FloquetParameters

grid = GridSpec(31, 61)
fig, axes = plt.subplots(2, 2, figsize=(10, 6), sharex=True, sharey=True)

for col, kappa in enumerate([0.5, 2.5]):
    # time-averaged single-qubit entropy of three qubits, one cell per initial coherent state
    m = entropy_map_scan(FloquetParameters(kappa), 3, 20, grid)
    extent = [grid.phis[0], grid.phis[-1], grid.thetas[-1], grid.thetas[0]]
    im = axes[0, col].imshow(m.values, extent=extent, aspect="auto", vmin=0, vmax=1, cmap="viridis")
    axes[0, col].set_title(f"kappa = {kappa}: mean entropy {m.values.mean():.2f}")
    theta, phi = m.argmin()
    axes[0, col].plot(phi, theta, "r+", ms=12)

    # the classical kicked top from 300 random starting points
    cloud = stroboscopic_map(kappa, n_traj=300, n_steps=150, seed=1)
    axes[1, col].scatter(cloud.phi, cloud.theta, s=0.2, c=cloud.traj, cmap="tab20")
    axes[1, col].set_xlabel("phi")

axes[0, 0].set_ylabel("theta")
axes[1, 0].set_ylabel("theta")
axes[1, 0].invert_yaxis()
fig.colorbar(im, ax=axes[0, :], label="entropy (bits)")
fig.savefig("phase_space.png", dpi=120)
print("wrote phase_space.png")
