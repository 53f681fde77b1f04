import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tactichmm import (
    ActionAlphabet,
    DegenerateSequenceError,
    EncodedCorpus,
    EncodingError,
    HmmModel,
    TrainConfig,
    backward,
    baum_welch_step,
    corpus_log_likelihood,
    forward,
    posteriors,
    run_em,
    train,
    viterbi,
)
from tactichmm.hmm import ZeroOccupancyWarning, _Batch, _expected_counts

from conftest import make_random_model
from oracle import brute_force, naive_forward_probability


def single_state(p=(0.7, 0.3)):
    return HmmModel(ActionAlphabet(("a", "b")), [1.0], [[1.0]], [list(p)])


class TestForward:
    def test_single_state_is_product_of_emissions(self):
        tr = forward(single_state(), [0, 0, 1])
        assert tr.log_likelihood == pytest.approx(math.log(0.147), abs=1e-12)
        assert tr.log_likelihood == pytest.approx(-1.917323, abs=1e-6)

    def test_deterministic_chain_has_probability_one(self, alternating):
        tr = forward(alternating, [0, 1, 0])
        assert tr.log_likelihood == 0.0
        np.testing.assert_array_equal(tr.scaled_forward, [[1, 0], [0, 1], [1, 0]])

    def test_matches_path_enumeration(self, rng):
        model = make_random_model(rng, 2, 3)
        obs = rng.integers(0, 3, size=5)
        tr = forward(model, obs)
        ll, *_ = brute_force(model, obs)
        assert tr.log_likelihood == pytest.approx(ll, abs=1e-10)

    def test_rows_normalized_and_loglik_from_scales(self, rng):
        model = make_random_model(rng, 3, 4)
        tr = forward(model, rng.integers(0, 4, size=40))
        np.testing.assert_allclose(tr.scaled_forward.sum(axis=1), 1.0, atol=1e-12)
        assert np.all(tr.scales > 0)
        assert tr.log_likelihood == -np.sum(np.log(tr.scales))

    def test_out_of_range_symbol(self, alternating):
        with pytest.raises(EncodingError):
            forward(alternating, [0, 2])

    def test_zero_probability_sequence_is_flagged(self, alternating):
        tr = forward(alternating, [0, 0])
        assert tr.degenerate
        assert tr.log_likelihood == -np.inf

    def test_long_sequence_does_not_underflow(self, rng):
        model = make_random_model(rng, 3, 4)
        tr = forward(model, rng.integers(0, 4, size=5000))
        assert np.isfinite(tr.log_likelihood)
        assert tr.log_likelihood < -1000


class TestBackward:
    def test_single_state_all_ones(self):
        seq = [0, 1, 1, 0]
        beta = backward(single_state(), seq, forward(single_state(), seq).scales)
        np.testing.assert_allclose(beta, 1.0, atol=1e-15)

    def test_length_mismatch(self, rng):
        model = make_random_model(rng, 2, 2)
        with pytest.raises(ValueError):
            backward(model, [0, 1, 0], np.ones(2))

    def test_posteriors_sum_to_one(self, rng):
        model = make_random_model(rng, 3, 3)
        seq = rng.integers(0, 3, size=30)
        tr = forward(model, seq)
        beta = backward(model, seq, tr.scales)
        np.testing.assert_allclose((tr.scaled_forward * beta).sum(axis=1), 1.0, atol=1e-12)


class TestPosteriors:
    def test_single_state(self):
        gamma, xi = posteriors(single_state(), [0, 1, 1])
        np.testing.assert_allclose(gamma, 1.0)
        np.testing.assert_allclose(xi, 1.0)

    def test_deterministic_chain_one_hot(self, alternating):
        gamma, xi = posteriors(alternating, [0, 1, 0])
        np.testing.assert_array_equal(gamma, [[1, 0], [0, 1], [1, 0]])
        assert xi.shape == (2, 2, 2)

    def test_single_observation_has_empty_xi(self, rng):
        gamma, xi = posteriors(make_random_model(rng, 3, 2), [1])
        assert xi.shape == (0, 3, 3)
        assert gamma.sum() == pytest.approx(1.0)

    def test_match_enumeration(self, rng):
        model = make_random_model(rng, 2, 3)
        obs = rng.integers(0, 3, size=4)
        gamma, xi = posteriors(model, obs)
        _, g_ref, x_ref, _, _ = brute_force(model, obs)
        np.testing.assert_allclose(gamma, g_ref, atol=1e-10)
        np.testing.assert_allclose(xi, x_ref, atol=1e-10)

    def test_xi_marginalizes_to_gamma(self, rng):
        model = make_random_model(rng, 3, 4)
        gamma, xi = posteriors(model, rng.integers(0, 4, size=25))
        np.testing.assert_allclose(xi.sum(axis=(1, 2)), 1.0, atol=1e-9)
        np.testing.assert_allclose(xi.sum(axis=2), gamma[:-1], atol=1e-9)
        np.testing.assert_allclose(xi.sum(axis=1), gamma[1:], atol=1e-9)


class TestViterbi:
    def test_single_state(self):
        path, _ = viterbi(single_state(), [1, 0, 1, 1])
        np.testing.assert_array_equal(path, [0, 0, 0, 0])

    def test_deterministic(self, alternating):
        path, logp = viterbi(alternating, [0, 1, 0])
        np.testing.assert_array_equal(path, [0, 1, 0])
        assert logp == 0.0

    def test_matches_enumeration(self, rng):
        model = make_random_model(rng, 2, 3)
        obs = rng.integers(0, 3, size=4)
        path, logp = viterbi(model, obs)
        *_, ref_path, ref_logp = brute_force(model, obs)
        np.testing.assert_array_equal(path, ref_path)
        assert logp == pytest.approx(ref_logp, abs=1e-10)

    def test_ties_prefer_lower_state(self):
        model = HmmModel(ActionAlphabet(("a",)), [0.5, 0.5], [[0.5, 0.5], [0.5, 0.5]], [[1.0], [1.0]])
        path, _ = viterbi(model, [0, 0, 0])
        np.testing.assert_array_equal(path, [0, 0, 0])

    def test_degenerate(self, alternating):
        with pytest.raises(DegenerateSequenceError):
            viterbi(alternating, [1, 1])


def _corpus(model, rng, n=6, length=12):
    return EncodedCorpus.from_arrays(model.alphabet, [rng.integers(0, model.n_symbols, size=length) for _ in range(n)])


class TestBaumWelchStep:
    def test_true_deterministic_model_is_fixpoint(self, alternating):
        corpus = EncodedCorpus.from_arrays(alternating.alphabet, [[0, 1, 0, 1], [0, 1, 0], [0, 1, 0, 1, 0, 1]])
        new, ll = baum_welch_step(alternating, corpus)
        assert ll == pytest.approx(0.0, abs=1e-9)
        assert new.same_as(alternating, atol=1e-9)

    def test_likelihood_does_not_decrease(self, rng):
        for _ in range(5):
            model = make_random_model(rng, 3, 4)
            corpus = _corpus(model, rng)
            new, ll = baum_welch_step(model, corpus)
            assert ll == pytest.approx(corpus_log_likelihood(model, corpus), abs=1e-9)
            assert corpus_log_likelihood(new, corpus) >= ll - 1e-10

    def test_pooled_counts_match_reference_posteriors(self, rng):
        model = make_random_model(rng, 3, 4)
        corpus = EncodedCorpus.from_arrays(
            model.alphabet, [rng.integers(0, 4, size=n) for n in (1, 7, 15, 3)]
        )
        start, trans, emit, ll = _expected_counts(model, _Batch(corpus))
        ref_start = np.zeros(3)
        ref_trans = np.zeros((3, 3))
        ref_emit = np.zeros((3, 4))
        for seq in corpus:
            gamma, xi = posteriors(model, seq)
            ref_start += gamma[0]
            ref_trans += xi.sum(axis=0)
            for t, o in enumerate(seq.observations):
                ref_emit[:, o] += gamma[t]
        np.testing.assert_allclose(start, ref_start, atol=1e-12)
        np.testing.assert_allclose(trans, ref_trans, atol=1e-12)
        np.testing.assert_allclose(emit, ref_emit, atol=1e-12)
        assert ll == pytest.approx(corpus_log_likelihood(model, corpus), abs=1e-9)

    def test_zero_occupancy_state_reset_to_uniform(self):
        alphabet = ActionAlphabet(("a", "b"))
        # state 1 is unreachable: zero prior and nothing transitions into it
        model = HmmModel(alphabet, [1.0, 0.0], [[1.0, 0.0], [0.5, 0.5]], [[0.6, 0.4], [0.1, 0.9]])
        corpus = EncodedCorpus.from_arrays(alphabet, [[0, 1, 0]])
        with pytest.warns(ZeroOccupancyWarning):
            new, _ = baum_welch_step(model, corpus)
        np.testing.assert_allclose(new.emission[1], [0.5, 0.5])
        np.testing.assert_allclose(new.transition[1], [0.5, 0.5])
        assert np.all(np.isfinite(new.emission))

    def test_alphabet_mismatch(self, alternating):
        corpus = EncodedCorpus.from_arrays(ActionAlphabet(("X", "Y")), [[0, 1]])
        with pytest.raises(EncodingError):
            baum_welch_step(alternating, corpus)


class TestTrain:
    def test_one_state_gives_empirical_frequencies(self, rng):
        alphabet = ActionAlphabet(("Q", "V", "S"))
        corpus = EncodedCorpus.from_arrays(alphabet, [rng.integers(0, 3, size=n) for n in (10, 20, 7)])
        fit = train(corpus, 1, TrainConfig(restarts=2))
        counts = np.bincount(np.concatenate([s.observations for s in corpus]), minlength=3)
        np.testing.assert_allclose(fit.model.emission[0], counts / counts.sum(), atol=1e-12)
        assert fit.model.transition.tolist() == [[1.0]]
        assert fit.model.prior.tolist() == [1.0]

    def test_seeded_runs_are_bit_identical(self, rng):
        model = make_random_model(rng, 3, 4)
        corpus = _corpus(model, rng, n=10, length=20)
        cfg = TrainConfig(restarts=3, max_iters=50, seed=11)
        a, b = train(corpus, 3, cfg), train(corpus, 3, cfg)
        assert a.log_likelihood == b.log_likelihood
        for name in ("prior", "transition", "emission"):
            assert getattr(a.model, name).tobytes() == getattr(b.model, name).tobytes()

    def test_best_restart_wins(self, rng):
        model = make_random_model(rng, 3, 4)
        corpus = _corpus(model, rng, n=10, length=20)
        best = train(corpus, 3, TrainConfig(restarts=4, max_iters=30, seed=5))
        for r in range(4):
            single = train(corpus, 3, TrainConfig(restarts=1, max_iters=30, seed=5))
            assert best.log_likelihood >= single.log_likelihood - 1e-12

    def test_invalid_state_count(self, alternating):
        corpus = EncodedCorpus.from_arrays(alternating.alphabet, [[0, 1]])
        with pytest.raises(ValueError):
            train(corpus, 0)

    def test_stops_on_small_improvement(self, alternating):
        corpus = EncodedCorpus.from_arrays(alternating.alphabet, [[0, 1, 0, 1]] * 3)
        run = run_em(alternating, corpus, max_iters=100, tol=1e-6)
        assert run.converged
        assert run.n_iter == 1


@st.composite
def hmm_and_obs(draw):
    M = draw(st.integers(1, 3))
    T = draw(st.integers(1, 4))
    N = draw(st.integers(1, 8))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    return make_random_model(rng, M, T), rng.integers(0, T, size=N)


class TestProperties:
    @settings(max_examples=60, deadline=None)
    @given(hmm_and_obs())
    def test_oracle_equivalence(self, case):
        model, obs = case
        ll, g_ref, x_ref, p_ref, lp_ref = brute_force(model, obs)
        gamma, xi = posteriors(model, obs)
        path, logp = viterbi(model, obs)
        assert forward(model, obs).log_likelihood == pytest.approx(ll, abs=1e-9)
        np.testing.assert_allclose(gamma, g_ref, atol=1e-9)
        np.testing.assert_allclose(xi, x_ref, atol=1e-9)
        assert logp == pytest.approx(lp_ref, abs=1e-9)
        assert logp <= forward(model, obs).log_likelihood + 1e-12

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(1, 12))
    def test_scaled_equals_naive(self, seed, N):
        rng = np.random.default_rng(seed)
        model = make_random_model(rng, 3, 4)
        obs = rng.integers(0, 4, size=N)
        assert forward(model, obs).log_likelihood == pytest.approx(
            math.log(naive_forward_probability(model, obs)), abs=1e-9
        )

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.permutations(range(4)))
    def test_permutation_symmetry(self, seed, perm):
        rng = np.random.default_rng(seed)
        model = make_random_model(rng, 4, 3)
        obs = rng.integers(0, 3, size=15)
        a = forward(model, obs).log_likelihood
        b = forward(model.permuted(perm), obs).log_likelihood
        assert b == pytest.approx(a, abs=1e-12)

    @pytest.mark.filterwarnings("ignore::tactichmm.hmm.ZeroOccupancyWarning")
    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_em_monotone_and_stochastic(self, seed):
        rng = np.random.default_rng(seed)
        M, T = int(rng.integers(1, 4)), int(rng.integers(2, 5))
        model = make_random_model(rng, M, T)
        corpus = _corpus(model, rng, n=int(rng.integers(1, 5)), length=int(rng.integers(1, 15)))
        models = []
        run = run_em(model, corpus, max_iters=30, tol=1e-300, callback=lambda k, m, ll: models.append(m))
        assert np.all(np.diff(run.history) >= -1e-8)
        for m in models:
            for arr in (m.prior[None, :], m.transition, m.emission):
                np.testing.assert_allclose(arr.sum(axis=1), 1.0, atol=1e-9)
                assert np.all((arr >= 0) & (arr <= 1))
