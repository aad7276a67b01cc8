"""Three-site chain just above the one/two-particle level crossing.

At mu = 1.1 mu_c the two-level truncation between the one- and two-particle
ground states has a single minimum of U_e at weak disentangling and two
once gamma_D / (beta t gamma_H) passes a threshold near 1.85.

    python3 demos/chain_bistability.py
"""

import numpy as np

from disentangle import experiments as ex
from disentangle.bloch import find_extrema

print(f"level crossing mu_c / t = {ex.level_crossing():.12f} (sqrt 2 - 1 = {np.sqrt(2) - 1:.12f})")

for ratio in (0.5, 1.5, 2.5):
    m = ex.chain_truncation(ratio)
    found = find_extrema(m)
    desc = ", ".join(f"{e.kind} at k3={e.k[2]:+.4f}" for e in found)
    print(f"ratio {ratio}: {desc}")

print(f"\nbistability sets in at ratio {ex.bistability_boundary():.3f}")
