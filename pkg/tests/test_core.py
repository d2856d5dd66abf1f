import numpy as np
import pytest

from urblock.core import (
    BlockScheme,
    OlsFit,
    RankDeficient,
    RngStream,
    SchemeInfeasible,
    as_series,
    ols,
    resolve_blocklength,
)


class TestAsSeries:
    def test_list_becomes_float64(self):
        y = as_series([1, 2, 3, 4])
        assert y.dtype == np.float64
        assert y.shape == (4,)

    def test_too_short(self):
        with pytest.raises(ValueError, match="too short"):
            as_series([1.0, 2.0, 3.0])

    def test_non_finite(self):
        with pytest.raises(ValueError, match="non-finite"):
            as_series([1.0, np.nan, 3.0, 4.0])
        with pytest.raises(ValueError, match="non-finite"):
            as_series([1.0, 2.0, np.inf, 4.0])

    def test_two_dimensional(self):
        with pytest.raises(ValueError, match="1-dimensional"):
            as_series(np.ones((4, 2)))

    def test_custom_minimum(self):
        with pytest.raises(ValueError, match="minimum 30"):
            as_series(np.arange(20.0), min_length=30)


class TestBlockScheme:
    def test_power_rule_example(self):
        assert resolve_blocklength(BlockScheme.power_rule(0.7), 100) == 25

    def test_fixed_fraction_example(self):
        assert resolve_blocklength(BlockScheme.fixed_fraction(0.2), 300) == 60

    def test_explicit_too_small(self):
        with pytest.raises(SchemeInfeasible):
            resolve_blocklength(BlockScheme.explicit(1), 10)

    def test_explicit_too_large(self):
        with pytest.raises(SchemeInfeasible):
            resolve_blocklength(BlockScheme.explicit(10), 10)
        assert resolve_blocklength(BlockScheme.explicit(9), 10) == 9

    def test_lower_clamp(self):
        # floor(10^0.1) = 1 clamps up to the minimum blocklength 2
        assert resolve_blocklength(BlockScheme.power_rule(0.1), 10) == 2

    def test_param_validation(self):
        for bad in (0.0, 1.0, -0.3, 1.7):
            with pytest.raises(ValueError):
                BlockScheme.power_rule(bad)
            with pytest.raises(ValueError):
                BlockScheme.fixed_fraction(bad)

    def test_monotone_in_t(self):
        for scheme in (
            BlockScheme.power_rule(0.6),
            BlockScheme.fixed_fraction(0.3),
        ):
            prev = 0
            for T in range(4, 400):
                B = resolve_blocklength(scheme, T)
                assert 2 <= B < T
                assert B >= prev
                prev = B

    def test_labels(self):
        assert BlockScheme.power_rule(0.7).label() == "T^0.7"
        assert BlockScheme.fixed_fraction(0.2).label() == "0.2T"
        assert BlockScheme.explicit(16).label() == "B=16"

    def test_tiny_sample_rejected(self):
        with pytest.raises(SchemeInfeasible):
            resolve_blocklength(BlockScheme.power_rule(0.5), 3)


class TestOls:
    def test_mean_fit(self):
        fit = ols([[1.0], [1.0], [1.0]], [2.0, 4.0, 6.0])
        assert fit.coefficients == pytest.approx([4.0], abs=1e-12)
        assert fit.ssr == pytest.approx(8.0, abs=1e-10)
        assert fit.n_obs == 3 and fit.n_params == 1

    def test_exact_line(self):
        fit = ols([[1.0, 1.0], [1.0, 2.0], [1.0, 3.0]], [1.0, 2.0, 3.0])
        assert fit.coefficients == pytest.approx([0.0, 1.0], abs=1e-12)
        assert fit.ssr == pytest.approx(0.0, abs=1e-20)

    def test_collinear(self):
        with pytest.raises(RankDeficient):
            ols([[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]], [1.0, 1.0, 2.0])

    def test_shape_validation(self):
        with pytest.raises(ValueError):
            ols([[1.0], [1.0]], [1.0, 2.0, 3.0])
        with pytest.raises(ValueError):
            ols(np.ones((2, 3)), [1.0, 2.0])

    def test_residuals_and_ssr_consistent(self):
        g = RngStream(5, 0).generator()
        X = g.standard_normal((40, 3))
        y = g.standard_normal(40)
        fit = ols(X, y)
        assert fit.residuals.shape == (fit.n_obs,)
        assert fit.ssr == pytest.approx(float(fit.residuals @ fit.residuals), rel=1e-10)
        assert np.allclose(X @ fit.coefficients + fit.residuals, y, atol=1e-10)

    def test_residual_orthogonality(self):
        for k in range(20):
            g = RngStream(6, k).generator()
            n = int(g.integers(10, 60))
            p = int(g.integers(1, 5))
            X = g.standard_normal((n, p))
            y = g.standard_normal(n)
            fit = ols(X, y)
            bound = 1e-8 * np.linalg.norm(X) * np.linalg.norm(y)
            assert np.max(np.abs(X.T @ fit.residuals)) < bound

    def test_tstat_known_case(self):
        fit = ols([[1.0]] * 4, [1.0, 2.0, 3.0, 4.0])
        # coef 2.5, ssr 5, s2 = 5/3, var(beta) = s2/4, t = 2.5/sqrt(5/12)
        assert fit.tstat(0) == pytest.approx(2.5 / np.sqrt(5.0 / 12.0), rel=1e-12)

    def test_saturated_fit_has_nan_stderr(self):
        fit = ols([[1.0, 0.0], [0.0, 1.0]], [3.0, 4.0])
        assert np.all(np.isnan(fit.stderr))

    def test_olsfit_dataclass_fields(self):
        fit = ols([[1.0], [1.0], [1.0]], [1.0, 2.0, 3.0])
        assert isinstance(fit, OlsFit)
        assert fit.stderr.shape == (1,)


class TestRngStream:
    def test_same_key_bit_identical(self):
        a = RngStream(123, 7).generator().standard_normal(64)
        b = RngStream(123, 7).generator().standard_normal(64)
        assert np.array_equal(a, b)

    def test_distinct_streams_differ(self):
        a = RngStream(123, 7).generator().standard_normal(64)
        b = RngStream(123, 8).generator().standard_normal(64)
        c = RngStream(124, 7).generator().standard_normal(64)
        assert not np.array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_child_streams(self):
        s = RngStream(9, 1)
        a = s.child(3).generator().standard_normal(8)
        b = RngStream(9, 1).child(3).generator().standard_normal(8)
        assert np.array_equal(a, b)
        assert not np.array_equal(a, s.child(4).generator().standard_normal(8))

    def test_generator_is_fresh_each_call(self):
        s = RngStream(11, 0)
        a = s.generator().standard_normal(16)
        b = s.generator().standard_normal(16)
        assert np.array_equal(a, b)
