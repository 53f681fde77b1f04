"""Choosing the number of hidden tactics with the Bayesian information criterion."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from typing import Iterable

import numpy as np

from .hmm import train
from .model import EncodedCorpus, TrainConfig

SAMPLE_SIZE_MODES = ("events", "sequences")

#: BIC values closer than this are treated as a tie (smaller M wins).
TIE_TOL = 1e-12


def num_parameters(n_states: int, n_symbols: int) -> int:
    """Free parameters of a discrete HMM: ``M(M-1) + M(T-1) + (M-1)``."""
    if n_states < 1 or n_symbols < 1:
        raise ValueError(f"need n_states >= 1 and n_symbols >= 1, got ({n_states}, {n_symbols})")
    M, T = int(n_states), int(n_symbols)
    return M * (M - 1) + M * (T - 1) + (M - 1)


def bic(log_likelihood: float, sample_size: int, n_params: int) -> float:
    """``-2 log L + ln(S) * NP`` with natural logarithms throughout."""
    if sample_size < 1:
        raise ValueError(f"sample_size must be >= 1, got {sample_size}")
    if n_params < 0:
        raise ValueError(f"n_params must be >= 0, got {n_params}")
    if log_likelihood == -math.inf:
        return math.inf
    return -2.0 * log_likelihood + math.log(sample_size) * n_params


def sample_size(corpus: EncodedCorpus, mode: str = "events") -> int:
    if mode == "events":
        return corpus.total_events
    if mode == "sequences":
        return len(corpus.sequences)
    raise ValueError(f"sample size mode must be one of {SAMPLE_SIZE_MODES}, got {mode!r}")


@dataclass(frozen=True)
class BicPoint:
    M: int
    log_likelihood: float
    n_params: int
    sample_size: int
    bic: float
    n_iter: int = 0


@dataclass(frozen=True)
class BicCurve:
    points: tuple
    sample_size_mode: str = "events"

    @property
    def best_M(self) -> int:
        return best_point(self.points).M

    def as_table(self) -> str:
        """Two-column plain text table of ``M`` and BIC."""
        lines = ["M\tBIC"]
        lines += [f"{p.M}\t{p.bic:.6f}" for p in self.points]
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return {
            "sample_size_mode": self.sample_size_mode,
            "best_M": self.best_M,
            "points": [
                {
                    "M": p.M,
                    "log_likelihood": p.log_likelihood,
                    "n_params": p.n_params,
                    "sample_size": p.sample_size,
                    "bic": p.bic if math.isfinite(p.bic) else None,
                    "n_iter": p.n_iter,
                }
                for p in self.points
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def best_point(points: Iterable[BicPoint]) -> BicPoint:
    points = sorted(points, key=lambda p: p.M)
    if not points:
        raise ValueError("no BIC points")
    best = points[0]
    for p in points[1:]:
        if p.bic < best.bic - TIE_TOL:
            best = p
    return best


def seed_for(seed: int, n_states: int) -> int:
    """Per-candidate training seed derived from the sweep seed."""
    return int(np.random.SeedSequence([int(seed), int(n_states)]).generate_state(1, np.uint32)[0])


def parse_range(text: str) -> range:
    """Parse ``"2..8"`` (inclusive) or a single integer into a range of candidate M."""
    text = text.strip()
    try:
        if ".." in text:
            lo, hi = (int(x) for x in text.split(".."))
        else:
            lo = hi = int(text)
    except ValueError:
        raise ValueError(f"invalid M range {text!r}; expected e.g. 2..8") from None
    if lo < 1 or hi < lo:
        raise ValueError(f"invalid M range {text!r}; need 1 <= low <= high")
    return range(lo, hi + 1)


def sweep(
    corpus: EncodedCorpus,
    m_range: Iterable[int],
    config: TrainConfig = TrainConfig(),
    sample_size_mode: str = "events",
) -> BicCurve:
    """Train one model per candidate M and score each with BIC."""
    m_values = sorted(set(int(m) for m in m_range))
    if not m_values or m_values[0] < 1:
        raise ValueError("m_range must be non-empty with every M >= 1")
    S = sample_size(corpus, sample_size_mode)
    T = corpus.alphabet.size
    points = []
    for M in m_values:
        fit = train(corpus, M, replace(config, seed=seed_for(config.seed, M)))
        NP = num_parameters(M, T)
        points.append(BicPoint(M, fit.log_likelihood, NP, S, bic(fit.log_likelihood, S, NP), fit.n_iter))
    return BicCurve(tuple(points), sample_size_mode)
