"""Likelihood, posteriors and Viterbi decoding on a toy search session.

Run with ``python demos/01_likelihood_and_decoding.py``.
"""
# %%
import numpy as np

from tactichmm import ActionAlphabet, HmmModel, forward, posteriors, viterbi

# Two tactics over the five logged actions: a "querying" tactic and a
# "reading" tactic.
alphabet = ActionAlphabet.paper()
model = HmmModel(
    alphabet,
    prior=[0.8, 0.2],
    transition=[[0.3, 0.7], [0.4, 0.6]],
    emission=[[0.85, 0.05, 0.02, 0.02, 0.06], [0.05, 0.60, 0.20, 0.10, 0.05]],
)

# %%
# One session, written with action letters and encoded against the alphabet.
session = alphabet.encode("QVVSQVW")
tr = forward(model, session)
print("log-likelihood:", round(tr.log_likelihood, 4))
print("scaling coefficients:", np.round(tr.scales, 3))

# %%
# Posterior probability of each tactic at every step.
gamma, xi = posteriors(model, session)
for action, row in zip("QVVSQVW", gamma):
    print(action, np.round(row, 3))

# %%
# Single most probable tactic sequence.
path, logp = viterbi(model, session)
print("Viterbi tactics:", [f"S{i + 1}" for i in path], "log-prob", round(logp, 4))
