"""How much a good hint buys.

Outcomes cycle through four fixed points with noise of size sigma on top.
Optimistic mirror descent with the matching periodic predictor is compared
with the zero hint, which reduces it to plain mirror descent.  Both share
one fixed step size.
"""

import numpy as np

from predseq.harness import run_experiment

base = dict(algo="omd", geometry="l2", dim=5, horizon=4000, replicas=20, keep_trace=False,
            sequence="phased:4", eta="0.05")

print(f"{'sigma':>6} {'hint=phase:4':>14} {'hint=zero':>12}")
for sigma in (0.0, 0.05, 0.1, 0.2, 0.4):
    row = []
    for pred in ("phase:4", "zero"):
        res = run_experiment({**base, "sigma": f"const:{sigma}", "predictor": pred})
        row.append(np.mean(res.regret))
    print(f"{sigma:6.2f} {row[0]:14.2f} {row[1]:12.2f}")
