import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qntk.circuit import CircuitTemplate, Layer, Observable, gradient
from qntk.errors import PreconditionError
from qntk.estimator import (
    BLOCK_SIZE,
    SampleSet,
    _Moments,
    bernstein_tail,
    empirical_ntk,
    estimate_gram,
    estimate_k0,
    estimate_kernels,
    estimate_mean_f,
    estimate_ntk,
    full_enumeration,
    gram_bernstein_parameters,
    gram_deviation_bound,
    mean_is_nonzero,
    sample_parameters,
    sample_size_mu,
    sample_size_ntk,
)
from qntk.oracle import exact_ntk_enumeration, random_input, random_template
from qntk.pauli import from_pauli_string


def single_qubit(generator, observable="Z"):
    return CircuitTemplate(
        1, (Layer(), Layer()), (from_pauli_string(generator),), Observable.from_strings([(1.0, observable)]), 1
    )


class TestSamples:
    def test_deterministic(self):
        a = sample_parameters(3, 5000, 11).thetas()
        b = sample_parameters(3, 5000, 11).thetas()
        np.testing.assert_array_equal(a, b)
        assert a.shape == (5000, 3)
        assert set(np.unique(a)) <= {0, 1, 2, 3}

    def test_prefix_property(self):
        # sample j depends only on (seed, j), not on N
        short = sample_parameters(2, 100, 5).thetas()
        long = sample_parameters(2, BLOCK_SIZE + 100, 5).thetas()
        np.testing.assert_array_equal(short, long[:100])
        assert sample_parameters(2, 9000, 5)[BLOCK_SIZE + 3].tolist() == long[BLOCK_SIZE + 3].tolist()

    def test_seeds_differ(self):
        assert not np.array_equal(sample_parameters(4, 64, 1).thetas(), sample_parameters(4, 64, 2).thetas())

    def test_roughly_uniform(self):
        counts = np.bincount(sample_parameters(1, 40000, 0).thetas().ravel(), minlength=4)
        assert np.all(np.abs(counts / 40000 - 0.25) < 0.01)

    def test_full_enumeration(self):
        rows = full_enumeration(3).thetas()
        assert rows.shape == (64, 3)
        assert len({tuple(r) for r in rows}) == 64

    def test_invalid(self):
        with pytest.raises(ValueError):
            SampleSet(0, 0, 2)


class TestCosCircuit:
    def test_enumeration_values(self):
        t = single_qubit("Y")
        e = full_enumeration(1)
        assert estimate_ntk(t, "0", "0", e).value == 0.5
        assert estimate_mean_f(t, "0", e).value == 0
        assert estimate_k0(t, "0", "0", e).value == 0.5

    def test_sampled_close(self):
        est = estimate_ntk(single_qubit("Y"), "0", "0", sample_parameters(1, 20000, 3))
        assert abs(est.value - 0.5) < 5 * est.std_error + 1e-12
        assert est.std_error == pytest.approx(0.5 / math.sqrt(20000), rel=0.05)

    def test_constant_model_flags_nonzero_mean(self):
        t = single_qubit("Z")
        for N in (1, 10, 5000):
            s = sample_parameters(1, N, 0)
            assert estimate_ntk(t, "0", "0", s).value == 0
            est = estimate_mean_f(t, "0", s)
            assert est.value == 1
            assert mean_is_nonzero(est)
        assert not mean_is_nonzero(estimate_mean_f(single_qubit("Y"), "0", full_enumeration(1)))


class TestGram:
    def setup_method(self):
        rng = np.random.default_rng(77)
        self.t = random_template(rng, 3, 3, 3, input_bits=3)
        self.xs = [random_input(rng, self.t) for _ in range(3)]

    def test_single_input_matches_ntk(self):
        s = sample_parameters(3, 500, 2)
        assert estimate_gram(self.t, self.xs[:1], s).matrix[0, 0] == estimate_ntk(self.t, self.xs[0], self.xs[0], s).value

    def test_duplicated_input_rank_one(self):
        g = estimate_gram(self.t, [self.xs[0], self.xs[0]], sample_parameters(3, 300, 1)).matrix
        assert np.all(g == g[0, 0])

    def test_entries_match_pairs(self):
        s = sample_parameters(3, 700, 4)
        g = estimate_gram(self.t, self.xs, s)
        assert np.array_equal(g.matrix, g.matrix.T)
        for i in range(3):
            for j in range(3):
                assert g.matrix[i, j] == pytest.approx(estimate_ntk(self.t, self.xs[i], self.xs[j], s).value, abs=1e-14)

    def test_enumeration_equals_oracle(self):
        g = estimate_gram(self.t, self.xs, full_enumeration(3)).matrix
        for i in range(3):
            for j in range(3):
                assert g[i, j] == pytest.approx(exact_ntk_enumeration(self.t, self.xs[i], self.xs[j]), abs=1e-12)

    def test_psd(self):
        g = estimate_gram(self.t, self.xs, sample_parameters(3, 50, 9)).matrix
        assert np.linalg.eigvalsh(g)[0] >= -1e-10

    def test_workers_bit_identical(self):
        s = sample_parameters(3, 3 * BLOCK_SIZE + 17, 8)
        a = estimate_kernels(self.t, self.xs, s, k0=True, workers=1)
        b = estimate_kernels(self.t, self.xs, s, k0=True, workers=3)
        assert np.array_equal(a["ntk"].matrix, b["ntk"].matrix)
        assert np.array_equal(a["ntk"].std_errors, b["ntk"].std_errors)
        assert np.array_equal(a["k0"].matrix, b["k0"].matrix)

    def test_per_sample_range(self):
        bound = self.t.L * self.t.m ** 2
        for theta in sample_parameters(3, 200, 0).thetas():
            assert abs(empirical_ntk(self.t, self.xs[0], self.xs[1], theta)) <= bound
            assert empirical_ntk(self.t, self.xs[0], self.xs[1], theta) == empirical_ntk(self.t, self.xs[1], self.xs[0], theta)

    def test_empirical_ntk_is_gradient_product(self):
        theta = [1, 2, 3]
        expected = gradient(self.t, self.xs[0], theta) @ gradient(self.t, self.xs[2], theta)
        assert empirical_ntk(self.t, self.xs[0], self.xs[2], theta) == expected


@settings(max_examples=50, deadline=None)
@given(st.lists(st.lists(st.floats(-5, 5), min_size=3, max_size=3), min_size=4, max_size=40), st.integers(1, 3))
def test_chan_merge_matches_direct(rows, split):
    values = np.array(rows)
    split = min(split, len(values) - 1)
    merged = _Moments.of(values[:split], 3).merge(_Moments.of(values[split:], 3))
    direct = _Moments.of(values, 3)
    np.testing.assert_allclose(merged.mean, direct.mean, atol=1e-12)
    np.testing.assert_allclose(merged.m2, direct.m2, atol=1e-9)
    np.testing.assert_allclose(merged.comoment, direct.comoment, atol=1e-9)


class TestSampleSize:
    def test_known_value(self):
        assert sample_size_ntk(0.1, 0.01, 10, 1) == 141289

    def test_scaling(self):
        base = sample_size_ntk(0.2, 0.05, 5, 2)
        assert abs(sample_size_ntk(0.2, 0.05, 10, 2) - 4 * base) <= 4
        assert abs(sample_size_ntk(0.4, 0.05, 5, 2) - base / 4) <= 1

    @pytest.mark.parametrize("eps, delta", [(0, 0.1), (-1, 0.1), (0.1, 0), (0.1, 1), (0.1, 1.5)])
    def test_rejects(self, eps, delta):
        with pytest.raises(PreconditionError):
            sample_size_ntk(eps, delta, 2, 1)

    def test_mu_example_extended_precision(self):
        mpmath.mp.dps = 50
        L, m, d, nk, ny, nky, eps, delta = 2, 1, 2, 1, mpmath.sqrt(2), mpmath.sqrt(2), 1, mpmath.mpf("0.1")
        R = 2 * L * mpmath.sqrt(d) * m**2 * nky
        first = (24 * R**2 + 4 * R * eps) / (3 * eps**2) * mpmath.log(2 * (1 + d) / delta)
        second = 2 * (1 + mpmath.sqrt(2)) ** 4 * L**4 * d**3 * m**8 * nk**4 * ny**2 / (3 * eps**2) * mpmath.log(4 * d / delta)
        assert sample_size_mu(1, 0.1, 2, 1, 2, 1, math.sqrt(2), math.sqrt(2)) == int(mpmath.ceil(first + second))

    def test_mu_monotone(self):
        args = dict(delta=0.1, L=3, m=2, norm_kinv=2.0, norm_y=1.5, norm_kinv_y=1.0)
        by_eps = [sample_size_mu(e, d_train=3, **args) for e in (0.1, 0.5, 1, 2)]
        assert by_eps == sorted(by_eps, reverse=True)
        by_d = [sample_size_mu(0.5, d_train=d, **args) for d in (1, 2, 4, 8)]
        assert by_d == sorted(by_d)

    def test_mu_uniform_over_features(self):
        args = (0.5, 0.1, 3, 2, 3, 2.0, 1.5, 1.0)
        assert sample_size_mu(*args, feature_space_size=8) > sample_size_mu(*args)

    def test_mu_accuracy_bound(self):
        # bound = (L/2) sqrt(d) m^2 |Y| |K^-1| = 1 * 1 * 1 * 1 * 1
        with pytest.raises(PreconditionError, match="K_train\\^-1"):
            sample_size_mu(1.0, 0.1, 2, 1, 1, 1.0, 1.0, 1.0)
        assert sample_size_mu(0.99, 0.1, 2, 1, 1, 1.0, 1.0, 1.0) > 0


class TestBernstein:
    def test_zero_deviation(self):
        assert bernstein_tail(0, 100, 1.0, 1.0, 1, 1) == 1

    def test_decreasing_in_n(self):
        values = [bernstein_tail(0.3, N, 2.0, 4.0, 3, 3) for N in (10, 100, 1000, 10000)]
        assert all(a >= b for a, b in zip(values, values[1:]))
        assert values[-1] < 1e-6

    @pytest.mark.parametrize("bad", [(-0.1, 10, 1, 1, 1, 1), (0.1, 10, 0, 1, 1, 1), (0.1, 10, 1, -1, 1, 1)])
    def test_rejects(self, bad):
        with pytest.raises(ValueError):
            bernstein_tail(*bad)

    @pytest.mark.parametrize("t", [0.05, 0.2, 0.5, 1.0])
    def test_gram_specialisation(self, t):
        L, d, f = 3, 4, 1.0
        R, nu = gram_bernstein_parameters(L, d, f)
        assert bernstein_tail(t, 500, R, nu, d, d) <= gram_deviation_bound(t, 500, L, d, f) + 1e-15

    def test_gram_bound_range(self):
        with pytest.raises(ValueError):
            gram_deviation_bound(2.0, 10, 1, 1, 1.0)
