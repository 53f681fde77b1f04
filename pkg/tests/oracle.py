"""Brute-force references that enumerate every hidden path.

Deliberately naive: products of probabilities over all M**N paths, no
scaling, no dynamic programming.
"""

from itertools import product

import numpy as np


def path_probability(prior, transition, emission, path, obs):
    p = prior[path[0]] * emission[path[0], obs[0]]
    for t in range(1, len(obs)):
        p *= transition[path[t - 1], path[t]] * emission[path[t], obs[t]]
    return p


def enumerate_paths(model, obs):
    obs = list(obs)
    M = model.prior.shape[0]
    paths = list(product(range(M), repeat=len(obs)))
    probs = np.array([path_probability(model.prior, model.transition, model.emission, p, obs) for p in paths])
    return paths, probs


def brute_force(model, obs):
    """Return ``(log_likelihood, gamma, xi, best_path, best_log_prob)``."""
    obs = list(obs)
    N, M = len(obs), model.prior.shape[0]
    paths, probs = enumerate_paths(model, obs)
    total = probs.sum()
    gamma = np.zeros((N, M))
    xi = np.zeros((max(N - 1, 0), M, M))
    for path, p in zip(paths, probs):
        for t, s in enumerate(path):
            gamma[t, s] += p
        for t in range(N - 1):
            xi[t, path[t], path[t + 1]] += p
    gamma /= total
    xi /= total
    # equal-probability paths: prefer lower states from the end of the
    # sequence backwards, i.e. the reversed path that sorts first
    top = probs.max()
    tied = [i for i in range(len(paths)) if probs[i] >= top * (1 - 1e-10)]
    best = min(tied, key=lambda i: paths[i][::-1])
    return np.log(total), gamma, xi, np.array(paths[best]), np.log(top)


def naive_forward_probability(model, obs):
    """Unscaled forward recursion (underflows for long sequences)."""
    alpha = model.prior * model.emission[:, obs[0]]
    for o in obs[1:]:
        alpha = (alpha @ model.transition) * model.emission[:, o]
    return alpha.sum()
