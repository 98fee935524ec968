"""How close the running time average gets to the microcanonical ensemble.

Run from the repository root:  python demos/ergodicity.py  (writes ergodicity.png)
"""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from kickedtop.experiments import ERGODICITY_INITIALS, ergodicity_experiment, trajectory_experiment
from kickedtop.floquet import FloquetParameters

p = FloquetParameters(2.5)
series = ergodicity_experiment(p, 3, ERGODICITY_INITIALS, 10)

fig, (left, right) = plt.subplots(1, 2, figsize=(10, 4))
for s in series:
    label = f"theta={s.initial.theta:.2f}, phi={s.initial.phi:.2f}"
    left.plot(s.steps, s.overlaps, "o-", label=label)
    print(label, " ".join(f"{v:.3f}" for v in s.overlaps))
left.axhline(0.9, color="gray", ls=":")
left.set_xlabel("N (periods averaged)")
left.set_ylabel("fidelity with microcanonical state")
left.legend(fontsize=8)

# a shrinking Bloch vector means the qubit becomes entangled with the others
for d in ERGODICITY_INITIALS:
    rec = trajectory_experiment(d, p, 3, 20)
    right.plot(rec.lengths, ".-")
right.set_xlabel("step")
right.set_ylabel("|Bloch vector|")

fig.tight_layout()
fig.savefig("ergodicity.png", dpi=120)
print("wrote ergodicity.png")
