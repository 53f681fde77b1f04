"""Sample sessions from the five-tactic planted model and recover it with Baum-Welch.

The planted model embeds the published emission cells; transition values
are artifact constants.  Takes roughly 15 seconds.
"""
# %%
import numpy as np

from tactichmm import PlantedSpec, TrainConfig, align, paper_planted_model, sample, train

planted = paper_planted_model()
corpus, hidden = sample(PlantedSpec(planted, n_sequences=200, length=100, seed=1))
print(f"{len(corpus)} sessions, {corpus.total_events} actions")

# %%
fit = train(corpus, 5, TrainConfig(restarts=10, seed=0))
print("final log-likelihood:", round(fit.log_likelihood, 2), "after", fit.n_iter, "iterations")

# %%
# Hidden states come back in arbitrary order; match them to the planted ones.
perm, residual, tdist = align(planted, fit.model)
recovered = fit.model.permuted(perm)
np.set_printoptions(precision=3, suppress=True)
print("planted emission\n", planted.emission)
print("recovered emission\n", recovered.emission)
print("largest emission error:", np.abs(recovered.emission - planted.emission).max().round(4))
print("transition L1 distance:", round(tdist, 3))

# %%
# S2 and S3 both emit View almost exclusively, so emissions alone barely
# distinguish the two possible labelings.  Adding a transition term to the
# matching objective picks the labeling that also agrees on transitions.
perm2, residual2, tdist2 = align(planted, fit.model, transition_weight=0.1)
print("joint alignment:", perm2, "emission L1", round(residual2, 3), "transition L1", round(tdist2, 3))
print("recovered transition\n", fit.model.permuted(perm2).transition)
