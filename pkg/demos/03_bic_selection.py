"""Choose the number of tactics with BIC on a planted five-tactic corpus.

Uses a lighter training configuration than the defaults so the sweep
finishes in well under a minute.
"""
# %%
from tactichmm import PlantedSpec, TrainConfig, paper_planted_model, sample, sweep

corpus, _ = sample(PlantedSpec(paper_planted_model(), 200, 100, seed=1))

# %%
curve = sweep(corpus, range(2, 9), TrainConfig(restarts=5, max_iters=300, seed=0), sample_size_mode="events")
for p in curve.points:
    print(f"M={p.M}  logL={p.log_likelihood:10.1f}  NP={p.n_params:3d}  BIC={p.bic:10.1f}")
print("best M:", curve.best_M)

# %%
# The same curve as the two-column table written by ``tactichmm select --table``.
print(curve.as_table())
