"""A confidence interval for a covariate effect by inverting corrected p-values.

Each simulated dataset is a binary matrix from a logistic model with row and
column effects and one covariate with coefficient 2. Conditioning on the
margins removes the nuisance effects. One mixture sample serves every
candidate coefficient on the grid; the interval is the set of coefficients
whose two-sided corrected p-value exceeds 0.05.
Run with ``python demos/confidence_interval.py`` (about half a minute).
"""

from dataclasses import replace

from ispvalues.experiments.rasch import RaschSimConfig, run_rasch_ci

cfg = replace(RaschSimConfig(), n_grid=(50,), replications=12)
res = run_rasch_ci(cfg, seed=3)
for kind in ("corrected", "uncorrected"):
    print(
        f"{kind:<12} coverage {res.coverage(50, kind):.2f} over {cfg.replications - res.skipped} datasets, "
        f"median interval length {res.median_length(50, kind):.2f}"
    )
print("The corrected intervals are never shorter, since each corrected p-value is at least as large.")
