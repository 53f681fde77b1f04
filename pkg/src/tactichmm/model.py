"""Core value types: action alphabets, encoded sessions and HMM parameters.

All types are immutable once constructed.  Array fields are stored as
read-only ``numpy`` arrays so models and corpora can be shared freely.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence as SequenceT

import numpy as np

from .errors import EncodingError, ModelValidationError

#: Row-sum tolerance for every stochastic vector or matrix.
STOCHASTIC_ATOL = 1e-9

#: The five search actions of the study log: Query, View, Save, Workspace, Topic.
PAPER_ALPHABET = ("Q", "V", "S", "W", "T")


def _frozen(arr, dtype=float):
    out = np.array(arr, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class ActionAlphabet:
    """Ordered set of distinct action names."""

    symbols: tuple

    def __post_init__(self):
        symbols = tuple(self.symbols)
        if not symbols:
            raise ValueError("alphabet needs at least one symbol")
        for s in symbols:
            if not isinstance(s, str) or not s:
                raise ValueError(f"alphabet symbols must be non-empty strings, got {s!r}")
        if len(set(symbols)) != len(symbols):
            raise ValueError(f"alphabet symbols must be unique: {symbols}")
        object.__setattr__(self, "symbols", symbols)

    @classmethod
    def paper(cls) -> "ActionAlphabet":
        return cls(PAPER_ALPHABET)

    @classmethod
    def parse(cls, text: str) -> "ActionAlphabet":
        """Build an alphabet from a comma separated list such as ``"Q,V,S,W,T"``."""
        return cls(tuple(s.strip() for s in text.split(",")))

    @property
    def size(self) -> int:
        return len(self.symbols)

    def __len__(self):
        return len(self.symbols)

    def index(self, name: str) -> int:
        try:
            return self.symbols.index(name)
        except ValueError:
            raise EncodingError(f"action {name!r} is not in alphabet {list(self.symbols)}") from None

    def encode(self, names: Iterable[str]) -> np.ndarray:
        return np.array([self.index(n) for n in names], dtype=np.intp)

    def decode(self, indices: Iterable[int]) -> list:
        return [self.symbols[int(i)] for i in indices]


@dataclass(frozen=True)
class Sequence:
    """One session: an integer-encoded action sequence."""

    session_id: str
    observations: np.ndarray

    def __post_init__(self):
        obs = np.asarray(self.observations)
        if obs.ndim != 1 or obs.size == 0:
            raise ValueError(f"session {self.session_id!r}: observations must be a non-empty 1-d array")
        if not np.issubdtype(obs.dtype, np.integer):
            if not np.all(obs == np.round(obs)):
                raise EncodingError(f"session {self.session_id!r}: observations must be integers")
        object.__setattr__(self, "observations", _frozen(obs, np.intp))

    def __len__(self):
        return self.observations.shape[0]

    def check(self, n_symbols: int) -> None:
        obs = self.observations
        bad = (obs < 0) | (obs >= n_symbols)
        if bad.any():
            pos = int(np.flatnonzero(bad)[0])
            raise EncodingError(
                f"session {self.session_id!r}: symbol index {int(obs[pos])} at position {pos} "
                f"is outside [0, {n_symbols})"
            )


def as_sequence(seq, session_id: str = "seq") -> Sequence:
    """Accept a :class:`Sequence` or any integer array-like."""
    if isinstance(seq, Sequence):
        return seq
    return Sequence(session_id, np.asarray(seq))


@dataclass(frozen=True)
class EncodedCorpus:
    alphabet: ActionAlphabet
    sequences: tuple

    def __post_init__(self):
        seqs = tuple(as_sequence(s, f"seq{i}") for i, s in enumerate(self.sequences))
        if not seqs:
            raise ValueError("corpus needs at least one sequence")
        for s in seqs:
            s.check(self.alphabet.size)
        object.__setattr__(self, "sequences", seqs)

    @classmethod
    def from_arrays(cls, alphabet, arrays: SequenceT, prefix: str = "s") -> "EncodedCorpus":
        if not isinstance(alphabet, ActionAlphabet):
            alphabet = ActionAlphabet(tuple(alphabet))
        seqs = tuple(Sequence(f"{prefix}{i}", np.asarray(a)) for i, a in enumerate(arrays))
        return cls(alphabet, seqs)

    @property
    def total_events(self) -> int:
        return sum(len(s) for s in self.sequences)

    def __len__(self):
        return len(self.sequences)

    def __iter__(self):
        return iter(self.sequences)

    def decode(self) -> dict:
        """Map each session id to its list of action names."""
        return {s.session_id: self.alphabet.decode(s.observations) for s in self.sequences}


def _check_stochastic(name, arr):
    if not np.all(np.isfinite(arr)):
        raise ModelValidationError(f"{name} contains non-finite entries")
    if np.any(arr < 0) or np.any(arr > 1):
        raise ModelValidationError(f"{name} entries must lie in [0, 1]")
    sums = arr.sum(axis=-1)
    worst = np.max(np.abs(sums - 1.0))
    if worst > STOCHASTIC_ATOL:
        raise ModelValidationError(f"{name} rows must sum to 1 (max deviation {worst:.3g})")


@dataclass(frozen=True, eq=False)
class HmmModel:
    """Discrete-observation hidden Markov model.

    Attributes
    ----------
    alphabet : ActionAlphabet
        Names of the observable actions, ``T = alphabet.size``.
    prior : ndarray, shape (M,)
        Distribution of the first hidden tactic.
    transition : ndarray, shape (M, M)
        ``transition[i, j]`` is the probability that tactic ``j`` follows tactic ``i``.
    emission : ndarray, shape (M, T)
        ``emission[i, k]`` is the probability that tactic ``i`` emits action ``k``.
    """

    alphabet: ActionAlphabet
    prior: np.ndarray
    transition: np.ndarray
    emission: np.ndarray

    def __post_init__(self):
        if not isinstance(self.alphabet, ActionAlphabet):
            object.__setattr__(self, "alphabet", ActionAlphabet(tuple(self.alphabet)))
        prior = _frozen(self.prior)
        transition = _frozen(self.transition)
        emission = _frozen(self.emission)
        M = prior.shape[0] if prior.ndim == 1 else -1
        if M < 1:
            raise ModelValidationError("prior must be a non-empty vector")
        if transition.shape != (M, M):
            raise ModelValidationError(f"transition must have shape ({M}, {M}), got {transition.shape}")
        if emission.shape != (M, self.alphabet.size):
            raise ModelValidationError(
                f"emission must have shape ({M}, {self.alphabet.size}), got {emission.shape}"
            )
        _check_stochastic("prior", prior)
        _check_stochastic("transition", transition)
        _check_stochastic("emission", emission)
        object.__setattr__(self, "prior", prior)
        object.__setattr__(self, "transition", transition)
        object.__setattr__(self, "emission", emission)

    @property
    def n_states(self) -> int:
        return self.prior.shape[0]

    M = n_states

    @property
    def n_symbols(self) -> int:
        return self.alphabet.size

    def permuted(self, perm) -> "HmmModel":
        """Relabel hidden states so that new state ``i`` is old state ``perm[i]``."""
        perm = np.asarray(perm, dtype=np.intp)
        if sorted(perm.tolist()) != list(range(self.n_states)):
            raise ValueError(f"{perm.tolist()} is not a permutation of range({self.n_states})")
        return HmmModel(
            self.alphabet,
            self.prior[perm],
            self.transition[np.ix_(perm, perm)],
            self.emission[perm],
        )

    def same_as(self, other: "HmmModel", atol: float = 0.0) -> bool:
        return (
            self.alphabet == other.alphabet
            and self.n_states == other.n_states
            and np.allclose(self.prior, other.prior, rtol=0, atol=atol)
            and np.allclose(self.transition, other.transition, rtol=0, atol=atol)
            and np.allclose(self.emission, other.emission, rtol=0, atol=atol)
        )

    def __repr__(self):
        return f"HmmModel(M={self.n_states}, alphabet={list(self.alphabet.symbols)})"


@dataclass(frozen=True)
class TrainConfig:
    """Restart and stopping settings for Baum-Welch training."""

    restarts: int = 10
    max_iters: int = 500
    tol: float = 1e-6
    seed: int = 0
    dirichlet_alpha: float = field(default=1.0, repr=False)

    def __post_init__(self):
        if int(self.restarts) < 1:
            raise ValueError("restarts must be >= 1")
        if int(self.max_iters) < 1:
            raise ValueError("max_iters must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be > 0")
        if int(self.seed) < 0:
            raise ValueError("seed must be a non-negative integer")
        if not self.dirichlet_alpha > 0:
            raise ValueError("dirichlet_alpha must be > 0")
