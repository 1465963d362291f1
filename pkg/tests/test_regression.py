import math

import numpy as np
import pytest
import scipy.linalg

from qntk.circuit import load_template
from qntk.errors import SingularGramError
from qntk.estimator import full_enumeration, sample_parameters
from qntk.oracle import exact_mu_infinity
from qntk.regression import (
    INFINITY,
    IllConditionedGramWarning,
    KernelTable,
    TrainingDynamicsConfig,
    TrainingSet,
    covariance_t,
    fit_mu_infinity,
    invert_gram,
    kernel_table_exact,
    load_training_csv,
    mu_infinity,
    mu_t,
)


@pytest.fixture
def instance(data_dir):
    t = load_template(data_dir / "mu_instance.json")
    return t, load_training_csv(data_dir / "mu_train.csv")


class TestInvert:
    def test_identity(self):
        inv = invert_gram(np.eye(3))
        np.testing.assert_array_equal(inv.inverse, np.eye(3))
        assert inv.condition_number == 1

    def test_diagonal(self):
        inv = invert_gram(np.diag([2.0, 1.0]))
        np.testing.assert_allclose(inv.inverse, np.diag([0.5, 1.0]))
        assert inv.condition_number == pytest.approx(2)

    def test_random_spd_against_solve(self):
        rng = np.random.default_rng(0)
        A = rng.normal(size=(5, 5))
        K = A @ A.T + 0.5 * np.eye(5)
        inv = invert_gram(K)
        independent = np.column_stack([scipy.linalg.solve(K, e) for e in np.eye(5)])
        np.testing.assert_allclose(inv.inverse, independent, atol=1e-10)
        assert inv.residual < 1e-12

    def test_singular(self):
        with pytest.raises(SingularGramError, match="invertible"):
            invert_gram(np.ones((2, 2)))

    def test_indefinite_uses_eigh(self):
        inv = invert_gram(np.diag([1.0, -2.0]))
        assert inv.method == "eigh"
        np.testing.assert_allclose(inv.inverse, np.diag([1.0, -0.5]))

    def test_ill_conditioned_warns(self):
        with pytest.warns(IllConditionedGramWarning):
            invert_gram(np.diag([1.0, 1e-11]))

    def test_ridge(self):
        inv = invert_gram(np.ones((2, 2)), ridge=1.0)
        assert inv.ridge == 1.0
        np.testing.assert_allclose(inv.inverse @ (np.ones((2, 2)) + np.eye(2)), np.eye(2), atol=1e-12)

    def test_asymmetric(self):
        with pytest.raises(ValueError):
            invert_gram(np.array([[1.0, 0.5], [0.0, 1.0]]))


class TestTrainingSet:
    def test_duplicates_rejected(self):
        with pytest.raises(ValueError, match="duplicate"):
            TrainingSet(["01", "01"], [1, 2])

    def test_csv(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("x,y\n01,0.5\n10,-1\n")
        ts = load_training_csv(path)
        assert ts.inputs == ("01", "10")
        np.testing.assert_array_equal(ts.labels, [0.5, -1])

    @pytest.mark.parametrize("text, where", [("01,abc\n", "line 1"), ("01,1\n1x,2\n", "line 2"), ("01\n", "line 1"), ("", "line 1")])
    def test_csv_errors(self, tmp_path, text, where):
        path = tmp_path / "d.csv"
        path.write_text(text)
        with pytest.raises(ValueError, match=where):
            load_training_csv(path)


class TestDynamics:
    def test_config(self):
        with pytest.raises(ValueError):
            TrainingDynamicsConfig(eta=0)
        with pytest.raises(ValueError):
            TrainingDynamicsConfig(t=-1)
        assert TrainingDynamicsConfig().t == INFINITY

    def scalar_table(self, k=0.8, kq=0.3, k0=(0.5, 0.2, 0.4)):
        return KernelTable(
            ("a", "q"),
            np.array([[k]]),
            np.array([[k], [kq]]),
            np.array([[k, kq], [kq, 0.9]]),
            np.array([[k0[0]]]),
            np.array([[k0[0]], [k0[1]]]),
            np.array([[k0[0], k0[1]], [k0[1], k0[2]]]),
        )

    def test_scalar_closed_form(self):
        tab, ts = self.scalar_table(), TrainingSet(["a"], [1.5])
        cfg = TrainingDynamicsConfig(eta=0.1, t=3.0)
        expected = 0.3 * (1 - math.exp(-3.0 * 0.1 * 0.8)) * 1.5 / 0.8
        assert mu_t(tab, ts, cfg, "q") == pytest.approx(expected, rel=1e-14)

    def test_limits(self):
        tab, ts = self.scalar_table(), TrainingSet(["a"], [1.5])
        assert mu_t(tab, ts, TrainingDynamicsConfig(1.0, 0.0), "q") == 0
        assert mu_infinity(tab, ts, "q") == pytest.approx(0.3 * 1.5 / 0.8)
        assert mu_t(tab, ts, TrainingDynamicsConfig(1.0, 1e4), "q") == pytest.approx(mu_infinity(tab, ts, "q"))

    def test_monotone_training(self):
        tab, ts = self.scalar_table(), TrainingSet(["a"], [1.5])
        values = [mu_t(tab, ts, TrainingDynamicsConfig(0.5, t), "a") for t in (0, 0.5, 1, 2, 5, 20, INFINITY)]
        assert values == sorted(values)
        assert values[-1] == pytest.approx(1.5)

    def test_covariance_scalar(self):
        tab, ts = self.scalar_table(), TrainingSet(["a"], [1.5])
        cfg = TrainingDynamicsConfig(eta=1.0, t=2.0)
        a = (1 - math.exp(-2.0 * 0.8)) / 0.8
        kq, (k0a, k0aq, k0q) = 0.3, (0.5, 0.2, 0.4)
        expected = k0q - kq * a * k0aq - k0aq * a * kq + kq * a * k0a * a * kq
        assert covariance_t(tab, ts, cfg, "q", "q") == pytest.approx(expected, rel=1e-13)
        assert covariance_t(tab, ts, TrainingDynamicsConfig(1.0, 0.0), "q", "a") == 0.2
        assert covariance_t(tab, ts, cfg, "q", "a") == pytest.approx(covariance_t(tab, ts, cfg, "a", "q"))


class TestFit:
    def test_exact_interpolation(self, instance):
        t, ts = instance
        tab = kernel_table_exact(t, ts, list(ts.inputs) + ["110"])
        for x, y in zip(ts.inputs, ts.labels):
            assert mu_infinity(tab, ts, x) == pytest.approx(y, abs=1e-9)

    def test_enumeration_matches_oracle(self, instance):
        t, ts = instance
        r = fit_mu_infinity(t, ts, ["110", "111"], full_enumeration(t.L))
        for q in ("110", "111"):
            assert r.mu_values[q] == pytest.approx(exact_mu_infinity(t, q, ts), abs=1e-9)

    def test_zero_labels(self, instance):
        t, ts = instance
        zero = TrainingSet(ts.inputs, np.zeros(3))
        assert fit_mu_infinity(t, zero, ["110"], sample_parameters(t.L, 200, 0)).mu_values["110"] == 0

    def test_same_seed_bitwise(self, instance):
        t, ts = instance
        a = fit_mu_infinity(t, ts, ["110"], sample_parameters(t.L, 3000, 5))
        b = fit_mu_infinity(t, ts, ["110"], sample_parameters(t.L, 3000, 5))
        assert a.to_json() == b.to_json()

    def test_std_error_covers(self, instance):
        t, ts = instance
        exact = exact_mu_infinity(t, "110", ts)
        r = fit_mu_infinity(t, ts, ["110"], sample_parameters(t.L, 20000, 1))
        assert abs(r.mu_values["110"] - exact) <= 4 * r.mu_std_errors["110"]

    def test_time_covariance_with_exact_kernels(self, instance):
        t, ts = instance
        tab = kernel_table_exact(t, ts, ["110", "000"], k0=True)
        cfg = TrainingDynamicsConfig(0.5, 4.0)
        assert covariance_t(tab, ts, cfg, "110", "000") == pytest.approx(covariance_t(tab, ts, cfg, "000", "110"))
        assert covariance_t(tab, ts, TrainingDynamicsConfig(0.5, 0.0), "110", "110") == tab.k0_query[0, 0]
