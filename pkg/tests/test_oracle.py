import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from querycode import schemes
from querycode.errors import ValidationError
from querycode.model import AnswerVector, LabelVector, NoiseModel, QueryGraph, QueryKind
from querycode.oracle import answer, answer_noiseless, apply_noise


def dense_xor(graph, x):
    q = np.zeros((graph.m, graph.n), dtype=np.int64)
    for j, row in enumerate(graph.queries):
        for i in row:
            q[j, i] += 1
    return (q @ x) % 2


class TestNoiseless:
    def test_xor(self):
        g = QueryGraph(3, ((0, 2),), QueryKind.XOR, 2)
        assert answer_noiseless(g, LabelVector([1, 0, 1])).answers.tolist() == [0]

    def test_and(self):
        g = QueryGraph(3, ((0, 1), (0, 2)), QueryKind.AND, 2)
        assert answer_noiseless(g, LabelVector([1, 1, 0])).answers.tolist() == [1, 0]

    def test_kary_and(self):
        g = QueryGraph(3, ((0, 1), (1, 2)), QueryKind.KARY_AND, 2)
        out = answer_noiseless(g, LabelVector([2, 2, 1], 3))
        assert out.answers.tolist() == [2, 0]
        assert out.k == 3

    @pytest.mark.parametrize("k", [2, 3, 4])
    def test_kary_and_exhaustive(self, k):
        pairs = [(a, b) for a in range(k) for b in range(k)]
        n = 2 * len(pairs)
        labels = np.array([v for p in pairs for v in p])
        g = QueryGraph.from_array(n, [(2 * j, 2 * j + 1) for j in range(len(pairs))], QueryKind.KARY_AND)
        out = answer_noiseless(g, LabelVector(labels, k)).answers
        for (a, b), y in zip(pairs, out):
            assert y == (a if a == b else 0)

    def test_alphabet_mismatch(self):
        g = QueryGraph(3, ((0, 1),), QueryKind.XOR, 2)
        with pytest.raises(ValidationError):
            answer_noiseless(g, LabelVector([2, 0, 1], 3))
        with pytest.raises(ValidationError):
            answer_noiseless(g, LabelVector([0, 1]))

    def test_repeated_index_collapses(self):
        g = QueryGraph(3, ((0, 0, 1), (1, 2, 2)), QueryKind.XOR, 3)
        assert answer_noiseless(g, LabelVector([1, 0, 1])).answers.tolist() == [0, 0]

    def test_ragged_xor(self):
        g = QueryGraph(4, ((0, 1, 2), (2, 3)), QueryKind.XOR, 3)
        x = np.array([1, 1, 1, 0])
        assert answer_noiseless(g, LabelVector(x)).answers.tolist() == dense_xor(g, x).tolist()

    @given(st.integers(0, 10_000), st.sampled_from([(16, 3, 4), (20, 3, 5), (32, 3, 8), (30, 5, 6)]))
    @settings(max_examples=80, deadline=None)
    def test_xor_matches_dense_matrix(self, seed, params):
        n, c, delta = params
        g = schemes.build_xor_ensemble(n, c, delta, seed)
        x = np.random.default_rng(seed).integers(0, 2, n)
        assert answer_noiseless(g, LabelVector(x)).answers.tolist() == dense_xor(g, x).tolist()


class TestNoise:
    def test_identity(self):
        a = AnswerVector(np.arange(10) % 3, 3)
        assert apply_noise(a, NoiseModel(0.0, 3), 0) == a

    def test_complement(self):
        a = AnswerVector([0, 1, 1, 0], 2)
        assert apply_noise(a, NoiseModel(1.0, 2), 0).answers.tolist() == [1, 0, 0, 1]

    def test_full_noise_never_keeps(self):
        a = AnswerVector(np.zeros(1000, dtype=int), 4)
        out = apply_noise(a, NoiseModel(1.0, 4), 1).answers
        assert np.all(out != 0)

    def test_flip_fraction(self):
        m, q = 100_000, 0.105
        a = AnswerVector(np.zeros(m, dtype=int), 2)
        frac = apply_noise(a, NoiseModel(q), 3).answers.mean()
        assert abs(frac - q) < 0.003

    def test_flip_independence(self):
        m = 100_000
        a = AnswerVector(np.zeros(m, dtype=int), 2)
        f = apply_noise(a, NoiseModel(0.3), 11).answers.astype(float)
        rho = np.corrcoef(f[:-1], f[1:])[0, 1]
        assert abs(rho) < 0.01

    def test_deterministic(self):
        a = AnswerVector(np.zeros(100, dtype=int), 3)
        assert apply_noise(a, NoiseModel(0.4, 3), 5) == apply_noise(a, NoiseModel(0.4, 3), 5)

    def test_alphabet_mismatch(self):
        with pytest.raises(ValidationError):
            apply_noise(AnswerVector([0, 1], 2), NoiseModel(0.1, 3), 0)

    @pytest.mark.parametrize("true_symbol", [0, 1, 2])
    def test_channel_chi_square(self, true_symbol):
        m, k, q = 60_000, 3, 0.2
        a = AnswerVector(np.full(m, true_symbol), k)
        out = apply_noise(a, NoiseModel(q, k), 100 + true_symbol).answers
        observed = np.bincount(out, minlength=k)
        expected = NoiseModel(q, k).channel_matrix()[true_symbol] * m
        assert stats.chisquare(observed, expected).pvalue > 1e-3

    def test_kary_and_marginal_chi_square(self):
        # long run through the pipeline: marginal = clean marginal times channel
        k, q, n = 3, 0.2, 4000
        g = schemes.build_ring_regular_scheme(n, 20, 0)
        x = LabelVector(np.random.default_rng(1).choice(3, n, p=[0.5, 0.3, 0.2]), k)
        clean = answer_noiseless(g, x).answers
        noisy = answer(g, x, NoiseModel(q, k), 2).answers
        want = np.bincount(clean, minlength=k) @ NoiseModel(q, k).channel_matrix()
        assert stats.chisquare(np.bincount(noisy, minlength=k), want).pvalue > 1e-3

    def test_answer_composition(self):
        g = schemes.build_ring_regular_scheme(30, 4, 0)
        x = LabelVector(np.arange(30) % 3, 3)
        assert answer(g, x) == answer_noiseless(g, x)
        assert answer(g, x, NoiseModel(0.0, 3), 1) == answer_noiseless(g, x)
        assert answer(g, x, NoiseModel(0.3, 3), 1) == answer(g, x, NoiseModel(0.3, 3), 1)

    def test_binary_shift_exhaustive(self):
        # with k=2 every flip is a complement
        for bits in itertools.product([0, 1], repeat=6):
            a = AnswerVector(list(bits), 2)
            assert apply_noise(a, NoiseModel(1.0), 0).answers.tolist() == [1 - b for b in bits]
