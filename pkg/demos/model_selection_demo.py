"""Learning which predictor to trust.

The outcomes drift around their running mean.  Four candidate predictors
are offered.  Seeing every hint, Hedge puts nearly all weight on ``mean``
within a few hundred rounds.  Seeing one hint per round, the bandit over
models runs with a much smaller step and only leans toward ``mean`` here.
"""

import numpy as np

from predseq.harness import run_experiment

models = "last,mean,zero,flip"
for algo in ("omd-learnM", "omd-learnM-partial"):
    res = run_experiment(dict(algo=algo, geometry="l2", dim=5, horizon=3000, sequence="noisy:mean",
                              sigma="const:0.3", models=models, replicas=10, seed=1))
    w = np.asarray(res.info["weights"]).mean(axis=0)
    print(algo)
    for name, wi in zip(models.split(","), w):
        print(f"  {name:>5}: {wi:.3f}")
    print(f"  mean regret {np.mean(res.regret):.2f}, model reads per round "
          f"{np.mean(res.info['model_reads_per_round']):.1f}")
