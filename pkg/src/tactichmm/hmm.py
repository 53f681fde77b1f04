"""Scaled forward-backward, Baum-Welch training and Viterbi decoding.

Forward and backward values use per-step scaling coefficients rather than
log-space arithmetic.  At step ``t`` the unnormalized forward vector is
divided by its sum ``s_t``; the stored coefficient is ``scales[t] = 1 / s_t``
and the sequence log-likelihood is ``-sum(log(scales))``.  The scaled
backward values are normalized with the same coefficients, so that
``scaled_forward * scaled_backward`` is the state posterior at every step.

Training pools expected counts over every sequence of a corpus.  The
per-sequence functions (:func:`forward`, :func:`backward`,
:func:`posteriors`) are the reference path; the training loop uses a
compiled E-step that accumulates the same expected counts over the
concatenated corpus.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

import numba
import numpy as np

from .errors import DegenerateSequenceError, EncodingError
from .model import EncodedCorpus, HmmModel, Sequence, TrainConfig, as_sequence

logger = logging.getLogger(__name__)

#: Emission floor used inside the training E-step so no scale becomes zero.
EMISSION_FLOOR = 1e-12


class ZeroOccupancyWarning(RuntimeWarning):
    """A hidden state received no expected occupancy during an M-step."""


@dataclass(frozen=True, eq=False)
class Trellis:
    """Scaled forward/backward quantities of one sequence.

    ``scaled_backward`` is ``None`` until :func:`backward` has been run.
    When ``degenerate`` is set the sequence has probability zero:
    ``log_likelihood`` is ``-inf`` and forward rows from the first
    impossible step onward are zero with infinite scales.
    """

    scaled_forward: np.ndarray
    scales: np.ndarray
    log_likelihood: float
    scaled_backward: Optional[np.ndarray] = None
    degenerate: bool = False


def _checked(model: HmmModel, seq) -> Sequence:
    seq = as_sequence(seq)
    seq.check(model.n_symbols)
    return seq


def forward(model: HmmModel, seq) -> Trellis:
    """Scaled forward pass; returns a :class:`Trellis` without backward values."""
    seq = _checked(model, seq)
    obs = seq.observations
    N, M = len(obs), model.n_states
    B = model.emission[:, obs].T
    A = model.transition
    alpha = np.zeros((N, M))
    scales = np.full(N, np.inf)
    a = model.prior * B[0]
    for t in range(N):
        if t > 0:
            a = (alpha[t - 1] @ A) * B[t]
        s = a.sum()
        if not s > 0:
            return Trellis(alpha, scales, -np.inf, degenerate=True)
        scales[t] = 1.0 / s
        alpha[t] = a * scales[t]
    return Trellis(alpha, scales, float(-np.sum(np.log(scales))))


def backward(model: HmmModel, seq, scales) -> np.ndarray:
    """Scaled backward pass using the coefficients produced by :func:`forward`."""
    seq = _checked(model, seq)
    obs = seq.observations
    scales = np.asarray(scales, dtype=float)
    N = len(obs)
    if scales.shape != (N,):
        raise ValueError(f"scales has shape {scales.shape}, expected ({N},) for this sequence")
    if not np.all(np.isfinite(scales)):
        raise DegenerateSequenceError("backward pass needs finite scales; sequence has zero probability")
    B = model.emission[:, obs].T
    A = model.transition
    beta = np.ones((N, model.n_states))
    for t in range(N - 2, -1, -1):
        beta[t] = A @ (B[t + 1] * beta[t + 1]) * scales[t + 1]
    return beta


def trellis(model: HmmModel, seq) -> Trellis:
    """Forward and backward passes combined."""
    fw = forward(model, seq)
    if fw.degenerate:
        return fw
    beta = backward(model, seq, fw.scales)
    return Trellis(fw.scaled_forward, fw.scales, fw.log_likelihood, beta)


def log_likelihood(model: HmmModel, seq) -> float:
    return forward(model, seq).log_likelihood


def corpus_log_likelihood(model: HmmModel, corpus: EncodedCorpus) -> float:
    return float(sum(forward(model, s).log_likelihood for s in corpus.sequences))


def posteriors(model: HmmModel, seq):
    """State posteriors ``gamma`` (N, M) and pair posteriors ``xi`` (N-1, M, M).

    ``xi[t, i, j]`` is the posterior probability of tactic ``i`` at step ``t``
    and tactic ``j`` at step ``t + 1``.  For a single observation ``xi`` has
    shape ``(0, M, M)``.
    """
    seq = _checked(model, seq)
    tr = trellis(model, seq)
    if tr.degenerate:
        raise DegenerateSequenceError(f"session {seq.session_id!r} has zero probability under the model")
    alpha, beta, c = tr.scaled_forward, tr.scaled_backward, tr.scales
    gamma = alpha * beta
    B = model.emission[:, seq.observations].T
    right = B[1:] * beta[1:] * c[1:, None]
    xi = alpha[:-1, :, None] * model.transition[None, :, :] * right[:, None, :]
    return gamma, xi


class ViterbiPath(NamedTuple):
    path: np.ndarray
    log_prob: float


#: Relative gap below which two Viterbi scores count as tied.
VITERBI_TIE_RTOL = 1e-12


def _first_max(scores, axis=0):
    """Index of the lowest entry within ``VITERBI_TIE_RTOL`` of the maximum along ``axis``."""
    top = np.max(scores, axis=axis, keepdims=True)
    slack = VITERBI_TIE_RTOL * np.maximum(1.0, np.abs(np.where(np.isfinite(top), top, 0.0)))
    return np.argmax(scores >= top - slack, axis=axis)


def viterbi(model: HmmModel, seq) -> ViterbiPath:
    """Most probable hidden path.

    Ties, including scores equal up to rounding, go to the lower state index
    at every backtrack step.
    """
    seq = _checked(model, seq)
    obs = seq.observations
    N, M = len(obs), model.n_states
    with np.errstate(divide="ignore"):
        log_a = np.log(model.transition)
        log_b = np.log(model.emission[:, obs].T)
        delta = np.log(model.prior) + log_b[0]
    back = np.zeros((N, M), dtype=np.intp)
    for t in range(1, N):
        scores = delta[:, None] + log_a
        back[t] = _first_max(scores, axis=0)
        delta = scores[back[t], np.arange(M)] + log_b[t]
    last = int(_first_max(delta))
    best = float(delta[last])
    if best == -np.inf:
        raise DegenerateSequenceError(f"session {seq.session_id!r}: every hidden path has zero probability")
    path = np.empty(N, dtype=np.intp)
    path[-1] = last
    for t in range(N - 1, 0, -1):
        path[t - 1] = back[t, path[t]]
    return ViterbiPath(path, best)


# ---------------------------------------------------------------------------
# pooled E-step used by training


class _Batch:
    """All observations of a corpus concatenated, with per-sequence offsets."""

    def __init__(self, corpus: EncodedCorpus):
        lengths = np.array([len(s) for s in corpus.sequences], dtype=np.int64)
        self.n_seq = len(lengths)
        self.offsets = np.concatenate(([0], np.cumsum(lengths))).astype(np.int64)
        self.obs = np.concatenate([s.observations for s in corpus.sequences]).astype(np.int64)


@numba.njit(cache=True)
def _estep_kernel(prior, A, E, obs, offsets, counts_wanted):
    M = A.shape[0]
    T = E.shape[1]
    n_max = 0
    for s in range(offsets.shape[0] - 1):
        n_max = max(n_max, offsets[s + 1] - offsets[s])
    alpha = np.empty((n_max, M))
    beta = np.empty((n_max, M))
    scale = np.empty(n_max)
    w = np.empty(M)
    start = np.zeros(M)
    pair = np.zeros((M, M))
    emit = np.zeros((M, T))
    ll = 0.0
    for s in range(offsets.shape[0] - 1):
        lo = offsets[s]
        N = offsets[s + 1] - lo
        for i in range(M):
            alpha[0, i] = prior[i] * E[i, obs[lo]]
        for t in range(N):
            if t > 0:
                o = obs[lo + t]
                for j in range(M):
                    acc = 0.0
                    for i in range(M):
                        acc += alpha[t - 1, i] * A[i, j]
                    alpha[t, j] = acc * E[j, o]
            tot = 0.0
            for i in range(M):
                tot += alpha[t, i]
            scale[t] = 1.0 / tot
            for i in range(M):
                alpha[t, i] *= scale[t]
            ll -= np.log(scale[t])
        if not counts_wanted:
            continue

        for i in range(M):
            beta[N - 1, i] = 1.0
        for t in range(N - 2, -1, -1):
            o = obs[lo + t + 1]
            for j in range(M):
                w[j] = E[j, o] * beta[t + 1, j] * scale[t + 1]
            for i in range(M):
                acc = 0.0
                a_ti = alpha[t, i]
                for j in range(M):
                    acc += A[i, j] * w[j]
                    pair[i, j] += a_ti * w[j]
                beta[t, i] = acc
        for t in range(N):
            o = obs[lo + t]
            for i in range(M):
                emit[i, o] += alpha[t, i] * beta[t, i]
        for i in range(M):
            start[i] += alpha[0, i] * beta[0, i]
    # pair[i, j] still lacks the transition factor of xi
    return start, pair * A, emit, ll


def _floored(model: HmmModel):
    return np.maximum(model.emission, EMISSION_FLOOR)


def _batch_log_likelihood(model: HmmModel, batch: _Batch) -> float:
    out = _estep_kernel(model.prior, model.transition, _floored(model), batch.obs, batch.offsets, False)
    return float(out[3])


def _expected_counts(model: HmmModel, batch: _Batch):
    return _estep_kernel(model.prior, model.transition, _floored(model), batch.obs, batch.offsets, True)


def _normalize_rows(counts, what, flagged):
    counts = np.asarray(counts, dtype=float)
    totals = counts.sum(axis=1)
    out = np.empty_like(counts)
    empty = ~(totals > 0)
    out[~empty] = counts[~empty] / totals[~empty, None]
    out[empty] = 1.0 / counts.shape[1]
    for i in np.flatnonzero(empty):
        flagged.append((what, int(i)))
    return out / out.sum(axis=1, keepdims=True)


def _maximize(model: HmmModel, start, trans, emit, n_seq) -> tuple:
    flagged = []
    occupancy = emit.sum(axis=1)
    dead = ~(occupancy > 0)
    trans = trans.copy()
    emit = emit.copy()
    trans[dead] = 0.0
    emit[dead] = 0.0
    prior = start / n_seq
    prior = prior / prior.sum()
    transition = _normalize_rows(trans, "transition", flagged)
    emission = _normalize_rows(emit, "emission", flagged)
    if dead.any():
        warnings.warn(
            f"states {np.flatnonzero(dead).tolist()} had zero expected occupancy; their rows were reset to uniform",
            ZeroOccupancyWarning,
            stacklevel=3,
        )
    elif flagged:
        states = sorted(i for what, i in flagged if what == "transition")
        warnings.warn(
            f"states {states} had no expected outgoing transitions; their transition rows were reset to uniform",
            ZeroOccupancyWarning,
            stacklevel=3,
        )
    return HmmModel(model.alphabet, prior, transition, emission), flagged


def _check_alphabet(model: HmmModel, corpus: EncodedCorpus):
    if model.alphabet != corpus.alphabet:
        raise EncodingError(
            f"corpus alphabet {list(corpus.alphabet.symbols)} does not match "
            f"model alphabet {list(model.alphabet.symbols)}"
        )


def baum_welch_step(model: HmmModel, corpus: EncodedCorpus, _batch: Optional[_Batch] = None):
    """One EM iteration pooled over every sequence of ``corpus``.

    Returns ``(new_model, total_log_likelihood)`` where the likelihood is the
    summed log-likelihood of the corpus under the *input* model.
    """
    _check_alphabet(model, corpus)
    batch = _batch if _batch is not None else _Batch(corpus)
    start, trans, emit, ll = _expected_counts(model, batch)
    new_model, _ = _maximize(model, start, trans, emit, batch.n_seq)
    return new_model, ll


@dataclass
class EMRun:
    """Outcome of one EM run from a fixed starting model.

    ``history[k]`` is the corpus log-likelihood of the model after ``k``
    M-steps; the last entry belongs to the returned model.
    """

    model: HmmModel
    log_likelihood: float
    n_iter: int
    history: list = field(default_factory=list)
    converged: bool = False


def run_em(
    model: HmmModel,
    corpus: EncodedCorpus,
    max_iters: int = 500,
    tol: float = 1e-6,
    callback: Optional[Callable[[int, HmmModel, float], None]] = None,
) -> EMRun:
    """Iterate Baum-Welch from ``model`` until the log-likelihood gain drops below ``tol``.

    ``callback(k, model_k, loglik_k)`` is invoked for every evaluated model.
    """
    _check_alphabet(model, corpus)
    batch = _Batch(corpus)
    history = []
    for it in range(max_iters):
        new_model, ll = baum_welch_step(model, corpus, batch)
        history.append(ll)
        if callback is not None:
            callback(it, model, ll)
        if it > 0 and ll - history[-2] < tol:
            return EMRun(model, ll, it, history, converged=True)
        model = new_model
    ll = _batch_log_likelihood(model, batch)
    history.append(ll)
    if callback is not None:
        callback(max_iters, model, ll)
    return EMRun(model, ll, max_iters, history, converged=False)


def random_model(n_states: int, alphabet, rng: np.random.Generator, concentration: float = 1.0) -> HmmModel:
    """Draw prior, transition rows and emission rows from a symmetric Dirichlet."""
    T = alphabet.size
    prior = rng.dirichlet(np.full(n_states, concentration))
    transition = rng.dirichlet(np.full(n_states, concentration), size=n_states)
    emission = rng.dirichlet(np.full(T, concentration), size=n_states)
    return HmmModel(alphabet, prior, transition, emission)


class TrainResult(NamedTuple):
    model: HmmModel
    log_likelihood: float
    n_iter: int


def train(corpus: EncodedCorpus, n_states: int, config: TrainConfig = TrainConfig()) -> TrainResult:
    """Best-of-``config.restarts`` Baum-Welch fit with ``n_states`` hidden tactics.

    Each restart draws its starting model from its own child of
    ``SeedSequence(config.seed)``; the run with the highest final
    log-likelihood wins, earlier restarts winning ties.
    """
    if int(n_states) != n_states or n_states < 1:
        raise ValueError(f"number of states must be a positive integer, got {n_states!r}")
    if not isinstance(corpus, EncodedCorpus):
        raise TypeError("corpus must be an EncodedCorpus")
    n_states = int(n_states)
    children = np.random.SeedSequence(config.seed).spawn(config.restarts)
    best = None
    for r, child in enumerate(children):
        rng = np.random.default_rng(child)
        start = random_model(n_states, corpus.alphabet, rng, config.dirichlet_alpha)
        run = run_em(start, corpus, config.max_iters, config.tol)
        logger.debug("M=%d restart %d: loglik %.6f after %d iterations", n_states, r, run.log_likelihood, run.n_iter)
        if best is None or run.log_likelihood > best.log_likelihood:
            best = run
    return TrainResult(best.model, best.log_likelihood, best.n_iter)
