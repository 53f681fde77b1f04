"""Sampling synthetic session corpora from a known (planted) model."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .model import ActionAlphabet, EncodedCorpus, HmmModel, Sequence

# Emission values reported for the five tactics S1..S5 over (Q, V, S, W, T).
# Entries below 0.05 were not reported; the leftover mass of each row is
# spread evenly over its unreported actions.
REPORTED_EMISSIONS = {
    0: {"Q": 0.92, "T": 0.06},
    1: {"V": 0.97},
    2: {"V": 0.98},
    3: {"W": 0.97},
    4: {"W": 0.67, "T": 0.32},
}

# Transition magnitudes are free choices: only the argmax structure
# S5 -> S1 -> S2 -> S3 -> S4 (S4 mostly staying put) is constrained.
# S2 and S3 emit View almost identically and are told apart by their
# successors, so their self-loops are kept small.
PLANTED_TRANSITION = (
    (0.20, 0.60, 0.05, 0.05, 0.10),
    (0.05, 0.10, 0.70, 0.10, 0.05),
    (0.10, 0.05, 0.10, 0.70, 0.05),
    (0.10, 0.05, 0.05, 0.60, 0.20),
    (0.60, 0.05, 0.05, 0.10, 0.20),
)
PLANTED_PRIOR = (0.10, 0.05, 0.05, 0.10, 0.70)

PLANTED_NOTES = {
    "emission": "reported cells >= 0.05 taken as given; residual row mass spread uniformly over unreported actions",
    "transition": "artifact constants (not reported values); chosen so the greedy argmax walk is S5->S1->S2->S3->S4",
    "prior": "artifact constants; maximum on S5",
}


def paper_planted_model() -> HmmModel:
    """Five-tactic model over ``Q, V, S, W, T`` embedding the reported emission cells."""
    alphabet = ActionAlphabet.paper()
    emission = np.zeros((5, alphabet.size))
    for state, cells in REPORTED_EMISSIONS.items():
        reported = [alphabet.index(a) for a in cells]
        for a, p in cells.items():
            emission[state, alphabet.index(a)] = p
        rest = [k for k in range(alphabet.size) if k not in reported]
        emission[state, rest] = (1.0 - sum(cells.values())) / len(rest)
    return HmmModel(alphabet, PLANTED_PRIOR, PLANTED_TRANSITION, emission)


@dataclass(frozen=True)
class PlantedSpec:
    """What to sample: ``length`` is a fixed int or an inclusive ``(low, high)`` range."""

    model: HmmModel
    n_sequences: int
    length: Union[int, tuple] = 100
    seed: int = 0

    def __post_init__(self):
        if int(self.n_sequences) < 1:
            raise ValueError("n_sequences must be >= 1")
        if isinstance(self.length, (tuple, list)):
            lo, hi = (int(x) for x in self.length)
            if lo < 1 or hi < lo:
                raise ValueError(f"invalid length range {self.length!r}")
            object.__setattr__(self, "length", (lo, hi))
        elif int(self.length) < 1:
            raise ValueError("length must be >= 1")
        if int(self.seed) < 0:
            raise ValueError("seed must be non-negative")


def _draw(cdf_rows, u):
    # inverse-CDF draw of one category per row; clip guards cdf[-1] < 1 by rounding
    idx = (u[:, None] >= cdf_rows).sum(axis=1)
    return np.minimum(idx, cdf_rows.shape[1] - 1)


def sample(spec: PlantedSpec):
    """Draw ``spec.n_sequences`` sessions.  Returns ``(corpus, hidden_paths)``."""
    model = spec.model
    rng = np.random.default_rng(spec.seed)
    n = int(spec.n_sequences)
    if isinstance(spec.length, tuple):
        lengths = rng.integers(spec.length[0], spec.length[1] + 1, size=n)
    else:
        lengths = np.full(n, int(spec.length))
    n_max = int(lengths.max())

    prior_cdf = np.cumsum(model.prior)[None, :]
    trans_cdf = np.cumsum(model.transition, axis=1)
    emit_cdf = np.cumsum(model.emission, axis=1)

    states = np.empty((n, n_max), dtype=np.intp)
    symbols = np.empty((n, n_max), dtype=np.intp)
    states[:, 0] = _draw(np.repeat(prior_cdf, n, axis=0), rng.random(n))
    for t in range(1, n_max):
        states[:, t] = _draw(trans_cdf[states[:, t - 1]], rng.random(n))
    for t in range(n_max):
        symbols[:, t] = _draw(emit_cdf[states[:, t]], rng.random(n))

    width = len(str(n - 1))
    seqs = tuple(Sequence(f"sim{i:0{width}d}", symbols[i, : lengths[i]]) for i in range(n))
    paths = [states[i, : lengths[i]].copy() for i in range(n)]
    return EncodedCorpus(model.alphabet, seqs), paths
