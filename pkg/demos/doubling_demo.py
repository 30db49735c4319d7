"""Step-size halving without knowing the noise level in advance.

Runs OMD with a tuned rate, with doubling, and with a deliberately bad
fixed rate, then shows where the doubling phases ended in one replica.
"""

import numpy as np

from predseq.harness import run_experiment

base = dict(algo="omd", geometry="simplex", dim=8, horizon=5000, sigma="const:0.3",
            sequence="noisy:ewma:0.9", predictor="ewma:0.9", replicas=10, seed=3)

for eta in ("auto", "doubling", "5.0"):
    res = run_experiment({**base, "eta": eta})
    print(f"eta={eta:>9}: mean regret {np.mean(res.regret):8.2f}")

res = run_experiment({**base, "eta": "doubling", "replicas": 1})
print("phase slices of replica 0:", res.ledger.phase_slices(0))
