"""Decoherence of the three-qubit top, and reconstructing a state from simulated counts.

Run from the repository root:  python demos/noise_and_tomography.py  (writes noise.png)
"""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from kickedtop.experiments import DEVICE_NOISE, purity_experiment
from kickedtop.floquet import FloquetParameters, step_register_array
from kickedtop.metrics import fidelity, pauli_correlations
from kickedtop.open_system import mle_reconstruct, simulate_counts, tomography_settings
from kickedtop.spin_core import SphericalDirection, coherent_state_register

# purity falls at the same rate whether or not the state thermalizes
fig, ax = plt.subplots(figsize=(5, 4))
for kappa, style in [(0.5, "-"), (2.5, "--")]:
    for s in purity_experiment(FloquetParameters(kappa), DEVICE_NOISE, 10):
        ax.plot(s.values, style, label=f"kappa={kappa}, theta={s.initial.theta:.2f}")
ax.set_xlabel("step")
ax.set_ylabel("purity")
ax.legend(fontsize=7)
fig.tight_layout()
fig.savefig("noise.png", dpi=120)
print("wrote noise.png")

# evolve a coherent state for five periods, then pretend we only have counts
amps = coherent_state_register(3, SphericalDirection(1.2, 0.6)).amplitudes
for _ in range(5):
    amps = step_register_array(amps, 3, FloquetParameters(2.5))
truth = np.outer(amps, amps.conj())

records = simulate_counts(truth, tomography_settings(3), shots=10_000, seed=0)
fitted = mle_reconstruct(records)
print(f"{len(records)} settings, fidelity of the reconstruction: {fidelity(fitted, truth):.4f}")

strongest = sorted(pauli_correlations(fitted).items(), key=lambda kv: -abs(kv[1]))[1:6]
print("largest Pauli correlations:", ", ".join(f"{k} {v:+.3f}" for k, v in strongest))
