"""Surrogate families, conservative shifts, and dominance-constrained fits."""

import numpy as np
import pytest

from rarebound.core import RandomStream
from rarebound.surrogate import (
    CONSERVATIVE_HIGH,
    CONSERVATIVE_LOW,
    FeedforwardFamily,
    FSDFitResult,
    PolynomialFamily,
    RegressionSurrogate,
    RelaxationConfig,
    ShiftCertificate,
    ShiftedSurrogate,
    SingularDesign,
    ZeroVariance,
    bernstein_bound,
    check_fsd,
    conservative_shift,
    fit,
    fsd_fit,
    lambda_crossing,
    lambda_risk,
    load_model,
    q2,
    save_model,
)


def quad_data(n=40, seed=0):
    gen = np.random.default_rng(seed)
    X = gen.random((n, 2))
    y = 1.0 + 2.0 * X[:, 0] - 3.0 * X[:, 1] + 0.5 * X[:, 0] * X[:, 1]
    return X, y


class TestPolynomialFamily:
    def test_parameter_count(self):
        assert PolynomialFamily(2, 2).n_parameters == 6
        assert PolynomialFamily(3, 1).n_parameters == 4
        assert PolynomialFamily(1, 0).n_parameters == 1

    def test_exact_recovery(self):
        X, y = quad_data()
        model = fit(PolynomialFamily(2, 2), X, y)
        assert np.max(np.abs(model.predict(X) - y)) < 1e-10

    def test_jacobian_is_feature_matrix(self):
        fam = PolynomialFamily(2, 2)
        X = np.random.default_rng(1).random((5, 2))
        eta = np.arange(6, dtype=float)
        pred, J = fam.value_and_grad(eta, X)
        assert np.array_equal(J, fam.features(X))
        assert np.allclose(pred, J @ eta)

    def test_singular_design(self):
        # ten copies of two distinct points: rank 2 < 6 parameters
        X = np.tile(np.array([[0.2, 0.2], [0.8, 0.8]]), (5, 1))
        y = np.zeros(10)
        with pytest.raises(SingularDesign):
            fit(PolynomialFamily(2, 2), X, y)

    def test_underdetermined(self):
        X, y = quad_data(n=4)
        with pytest.raises(ValueError):
            fit(PolynomialFamily(2, 2), X, y)

    def test_validation(self):
        with pytest.raises(ValueError):
            PolynomialFamily(0, 2)
        with pytest.raises(ValueError):
            PolynomialFamily(2, -1)


class TestFeedforwardFamily:
    def test_parameter_count(self):
        assert FeedforwardFamily(2, (3,)).n_parameters == 2 * 3 + 3 + 3 + 1
        assert FeedforwardFamily(1, (4, 4)).n_parameters == \
            (1 * 4 + 4) + (4 * 4 + 4) + (4 * 1 + 1)

    def test_jacobian_matches_finite_differences(self):
        fam = FeedforwardFamily(2, (3,))
        gen = np.random.default_rng(3)
        eta = gen.normal(0.0, 0.5, fam.n_parameters)
        X = gen.random((5, 2))
        _, J = fam.value_and_grad(eta, X)
        eps = 1e-6
        for k in range(fam.n_parameters):
            e = np.zeros_like(eta)
            e[k] = eps
            hi, _ = fam.value_and_grad(eta + e, X)
            lo, _ = fam.value_and_grad(eta - e, X)
            fd = (hi - lo) / (2 * eps)
            assert np.allclose(J[:, k], fd, rtol=1e-5, atol=1e-7)

    def test_fit_is_bitwise_deterministic(self):
        X, y = quad_data()
        fam = FeedforwardFamily(2, (4,))
        a = fit(fam, X, y, rng=RandomStream(5, 0), epochs=300)
        b = fit(fam, X, y, rng=RandomStream(5, 0), epochs=300)
        assert np.array_equal(a.eta, b.eta)

    def test_learns_smooth_target(self):
        gen = np.random.default_rng(4)
        X = gen.random((120, 1))
        y = np.sin(3.0 * X[:, 0])
        model = fit(FeedforwardFamily(1, (8,)), X, y,
                    rng=RandomStream(6, 0), epochs=2500)
        assert np.sqrt(np.mean((model.predict(X) - y) ** 2)) < 0.05

    def test_validation(self):
        with pytest.raises(ValueError):
            FeedforwardFamily(2, ())
        with pytest.raises(ValueError):
            FeedforwardFamily(2, (0,))


class TestFit:
    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            fit(PolynomialFamily(2, 1), np.zeros((3, 2)), np.zeros(4))

    def test_negative_weights(self):
        X, y = quad_data(10)
        with pytest.raises(ValueError):
            fit(PolynomialFamily(2, 1), X, y, weights=-np.ones(10))

    def test_overpredict_weight_validation(self):
        X, y = quad_data(10)
        with pytest.raises(ValueError):
            fit(FeedforwardFamily(2, (3,)), X, y, rng=RandomStream(1, 0),
                overpredict_weight=-1.0)
        with pytest.raises(ValueError):
            fit(PolynomialFamily(2, 1), X, y, overpredict_weight=2.0)

    def test_asymmetric_loss_hugs_from_below(self):
        gen = np.random.default_rng(7)
        X = gen.random((150, 1))
        y = X[:, 0] + 0.1 * gen.standard_normal(150)
        fam = FeedforwardFamily(1, (6,))
        sym = fit(fam, X, y, rng=RandomStream(8, 0), epochs=1500)
        asym = fit(fam, X, y, rng=RandomStream(8, 0), epochs=1500,
                   overpredict_weight=8.0)
        over_sym = np.mean(sym.predict(X) > y)
        over_asym = np.mean(asym.predict(X) > y)
        assert over_asym < over_sym
        assert np.mean(asym.predict(X) - y) < np.mean(sym.predict(X) - y)


class TestQ2:
    def test_perfect(self):
        X, y = quad_data()
        model = fit(PolynomialFamily(2, 2), X, y)
        assert q2(model, X, y) == pytest.approx(1.0, abs=1e-12)

    def test_zero_variance(self):
        X, y = quad_data()
        model = fit(PolynomialFamily(2, 2), X, y)
        with pytest.raises(ZeroVariance):
            q2(model, X, np.full(40, 2.5))


class TestCertificateLevels:
    def test_bernstein_frozen_value(self):
        # (6/1000) * log(1000/0.05)
        assert bernstein_bound(1000, 0.05) == pytest.approx(
            0.006 * np.log(20000.0), abs=1e-15)
        assert bernstein_bound(1000, 0.05) == pytest.approx(
            0.0594209253, abs=1e-9)
        assert bernstein_bound(100, 0.1, C=6.0) == pytest.approx(
            0.06 * np.log(1000.0), abs=1e-12)

    def test_bernstein_validation(self):
        with pytest.raises(ValueError):
            bernstein_bound(1, 0.1)
        with pytest.raises(ValueError):
            bernstein_bound(100, 0.0)

    def test_lambda_risk(self):
        p = 0.2
        assert lambda_risk(1, p) == pytest.approx(np.exp(-p / 6.0))
        assert lambda_risk(1, p) < 1.0
        assert lambda_risk(10, 0.01) == 1.0      # clipped at 1
        with pytest.raises(ValueError):
            lambda_risk(0, 0.1)
        with pytest.raises(ValueError):
            lambda_risk(10, 0.0)

    def test_lambda_crossing_solves_equation(self):
        for p in (0.1, 0.01):
            n = lambda_crossing(p)
            assert n > 6.0 / p            # beyond the mode
            assert n * np.exp(-n * p / 6.0) == pytest.approx(p, rel=1e-6)


class TestConservativeShift:
    def test_exact_model_needs_no_shift(self):
        X, y = quad_data()
        model = fit(PolynomialFamily(2, 2), X, y)
        shifted = conservative_shift(model, X, y)
        assert shifted.theta == pytest.approx(0.0, abs=1e-12)
        assert np.all(shifted.predict(X) <= y + 1e-9)

    def test_overprediction_sets_theta(self):
        X, y = quad_data()
        model = fit(PolynomialFamily(2, 2), X, y)
        y_low = y.copy()
        y_low[7] -= 0.3                      # model now overpredicts by 0.3
        shifted = conservative_shift(model, X, y_low, alpha=0.1)
        assert shifted.theta == pytest.approx(-0.3, abs=1e-9)
        assert np.all(shifted.predict(X) <= y_low + 1e-9)

    def test_certificate_fields(self):
        X, y = quad_data()
        model = fit(PolynomialFamily(2, 2), X, y)
        cert = conservative_shift(model, X, y, alpha=0.05).certificate
        assert cert.n_test == 40
        assert cert.alpha == 0.05
        assert cert.c_constant == 6.0
        assert cert.bernstein_bound == pytest.approx(bernstein_bound(40, 0.05))

    def test_needs_two_points(self):
        X, y = quad_data()
        model = fit(PolynomialFamily(2, 2), X, y)
        with pytest.raises(ValueError):
            conservative_shift(model, X[:1], y[:1])

    def test_positive_theta_rejected(self):
        X, y = quad_data()
        model = fit(PolynomialFamily(2, 2), X, y)
        cert = ShiftCertificate(n_test=10, alpha=0.1, bernstein_bound=0.2)
        with pytest.raises(ValueError):
            ShiftedSurrogate(base=model, theta=0.5, certificate=cert)


class TestCheckFSD:
    def test_identical_samples(self):
        a = np.array([0.1, 0.5, 0.9])
        assert check_fsd(a, a) <= 0.0

    def test_shifted_down_dominates(self):
        b = np.random.default_rng(9).random(50)
        a = b - 1.0
        assert check_fsd(a, b, direction=CONSERVATIVE_LOW) <= 0.0
        assert check_fsd(b, a, direction=CONSERVATIVE_LOW) > 0.0
        assert check_fsd(b, a, direction=CONSERVATIVE_HIGH) <= 0.0

    def test_violation_magnitude(self):
        # half the a-sample sits above all of b: worst CDF gap is 0.5
        a = np.array([0.0, 0.0, 2.0, 2.0])
        b = np.array([1.0, 1.0, 1.0, 1.0])
        assert check_fsd(a, b) == pytest.approx(0.5)

    def test_errors(self):
        with pytest.raises(ValueError):
            check_fsd([0.1], [0.1, 0.2])
        with pytest.raises(ValueError):
            check_fsd([0.1, 0.2], [0.1, 0.2], weights=[1.0])
        with pytest.raises(ValueError):
            check_fsd([0.1], [0.2], direction="sideways")


class TestFSDFit:
    fast = RelaxationConfig(taus=(0.1, 0.03), epochs=200, restarts=1,
                            max_penalty_rounds=2)

    def test_exact_fit_is_feasible_unshifted(self):
        # note the indicator CDFs count a full 1/m quantum for any
        # overprediction, even a 1e-15 one, so an exact fit still goes
        # through the repair shift; the shift itself must stay negligible
        X, y = quad_data()
        res = fsd_fit(PolynomialFamily(2, 2), X, y, relaxation=self.fast,
                      rng=RandomStream(10, 0))
        assert res.violations.max() <= 1e-9
        # theta and the constant monomial are interchangeable, so only the
        # net prediction is pinned down
        assert np.max(np.abs(res.predict(X) - y)) < 1e-5

    def test_result_always_feasible(self):
        # degree-0 family cannot match the data shape, so the constraint
        # is active; the returned surrogate must still dominate exactly
        gen = np.random.default_rng(11)
        X = gen.random((30, 1))
        y = X[:, 0] ** 2
        res = fsd_fit(PolynomialFamily(1, 0), X, y, relaxation=self.fast,
                      rng=RandomStream(12, 0))
        assert res.violations.max() <= 1e-9
        pred = res.predict(X)
        assert check_fsd(pred, y, direction=CONSERVATIVE_LOW) <= 1e-9

    def test_conservative_high_direction(self):
        gen = np.random.default_rng(13)
        X = gen.random((30, 1))
        y = X[:, 0] ** 2
        res = fsd_fit(PolynomialFamily(1, 0), X, y, relaxation=self.fast,
                      direction=CONSERVATIVE_HIGH, rng=RandomStream(14, 0))
        assert res.violations.max() <= 1e-9
        assert check_fsd(res.predict(X), y,
                         direction=CONSERVATIVE_HIGH) <= 1e-9

    def test_constrained_objective_not_better_than_free(self):
        gen = np.random.default_rng(15)
        X = gen.random((40, 1))
        y = np.sin(4.0 * X[:, 0]) + 0.05 * gen.standard_normal(40)
        free = fit(PolynomialFamily(1, 2), X, y)
        res = fsd_fit(PolynomialFamily(1, 2), X, y, relaxation=self.fast,
                      rng=RandomStream(16, 0))
        sse_free = float(np.sum((free.predict(X) - y) ** 2))
        sse_con = float(np.sum((res.predict(X) - y) ** 2))
        assert sse_con >= sse_free - 1e-9

    def test_direction_error(self):
        X, y = quad_data(10)
        with pytest.raises(ValueError):
            fsd_fit(PolynomialFamily(2, 1), X, y, direction="down")


class TestPersistence:
    def test_polynomial_roundtrip(self, tmp_path):
        X, y = quad_data()
        model = fit(PolynomialFamily(2, 2), X, y)
        path = tmp_path / "model.txt"
        save_model(path, model)
        back = load_model(path)
        assert isinstance(back, RegressionSurrogate)
        assert np.array_equal(back.eta, model.eta)
        assert np.array_equal(back.predict(X), model.predict(X))

    def test_shifted_network_roundtrip(self, tmp_path):
        X, y = quad_data()
        model = fit(FeedforwardFamily(2, (3,)), X, y,
                    rng=RandomStream(20, 0), epochs=200)
        shifted = conservative_shift(model, X, y, alpha=0.07)
        path = tmp_path / "shifted.txt"
        save_model(path, shifted)
        back = load_model(path)
        assert isinstance(back, ShiftedSurrogate)
        assert back.theta == shifted.theta
        assert back.certificate == shifted.certificate
        assert np.array_equal(back.predict(X), shifted.predict(X))

    def test_load_rejects_garbage(self, tmp_path):
        path = tmp_path / "junk.txt"
        path.write_text("not a model\n")
        with pytest.raises(ValueError):
            load_model(path)
