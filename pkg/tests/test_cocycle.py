"""Cocycle specs: evaluation, products, Holder norms, bunching."""

from __future__ import annotations

import numpy as np
import pytest

from cocyclelab import mat2
from cocyclelab.base import (
    BernoulliMeasure,
    ShiftPoint,
    ShiftSystem,
    TorusPoint,
    apply_f,
    sample_points,
)
from cocyclelab.cocycle import (
    BunchingReport,
    ConstantCocycle,
    ConstantField,
    DiagonalFactor,
    LocallyConstantCocycle,
    LocallyConstantField,
    PerturbedCocycle,
    PointwiseCocycle,
    PointwiseEntriesField,
    RotationFactor,
    TrigExpr,
    bunching_check,
    evaluate,
    holder_distance,
    holder_norm,
    product,
    product_renormalized,
)
from cocyclelab.errors import ConfigError, SingularValueError

DIAG2 = np.diag([2.0, 0.5])


def two_table(m0, m1, r=1.0):
    return LocallyConstantCocycle(table=np.array([m0, m1]), r=r)


def rel_err(got, ref):
    return mat2.opnorm(got - ref) / mat2.opnorm(ref)


class TestSpecs:
    def test_constant_validation(self):
        with pytest.raises(SingularValueError):
            ConstantCocycle(matrix=np.array([[1.0, 2.0], [2.0, 4.0]]))
        with pytest.raises(ConfigError):
            ConstantCocycle(matrix=DIAG2, r=0.0)
        with pytest.raises(ConfigError):
            ConstantCocycle(matrix=np.eye(3))

    def test_locally_constant_validation(self):
        with pytest.raises(SingularValueError):
            two_table(DIAG2, np.zeros((2, 2)))
        with pytest.raises(ConfigError):
            LocallyConstantCocycle(table=np.array([DIAG2] * 3), depth=2)
        with pytest.raises(ConfigError):
            LocallyConstantCocycle(table=np.array([DIAG2] * 3), depth=2, alphabet_size=2)
        spec = LocallyConstantCocycle(table=np.array([DIAG2] * 4), depth=2, alphabet_size=2)
        assert spec.symbol_depth == 2
        assert spec.is_constant

    def test_rotation_factor_winding(self):
        RotationFactor(angle=TrigExpr(lin_u=2.0 * np.pi))  # full turn, fine
        with pytest.raises(ConfigError):
            RotationFactor(angle=TrigExpr(lin_u=1.0))
        with pytest.raises(ConfigError):
            DiagonalFactor(log_d1=TrigExpr(lin_u=2.0 * np.pi), log_d2=TrigExpr())

    def test_pointwise_constantness(self):
        spin = PointwiseCocycle(factors=(RotationFactor(angle=TrigExpr(const=0.3)),))
        assert spin.is_constant
        wavy = PointwiseCocycle(
            factors=(RotationFactor(angle=TrigExpr(sin_u=0.2)),)
        )
        assert not wavy.is_constant


class TestEvaluate:
    def test_locally_constant_reads_first_symbol(self, shift2):
        spec = two_table(DIAG2, mat2.rotation(0.5))
        x = ShiftPoint(window=np.array([1, 0, 1], dtype=np.int16))
        assert np.array_equal(evaluate(spec, x), DIAG2)
        y = apply_f(shift2, x, 1)
        assert np.allclose(evaluate(spec, y), mat2.rotation(0.5))

    def test_depth_two_word_order(self):
        mats = [np.diag([float(k + 1), 1.0]) for k in range(4)]
        spec = LocallyConstantCocycle(table=np.array(mats), depth=2, alphabet_size=2)
        # word (x_0, x_1) = (1, 0) is index 2 in lexicographic order
        x = ShiftPoint(window=np.array([0, 0, 1, 0, 0], dtype=np.int16))
        assert evaluate(spec, x)[0, 0] == 3.0

    def test_pointwise_factors_in_order(self, cat):
        spec = PointwiseCocycle(
            factors=(
                RotationFactor(angle=TrigExpr(sin_u=0.4)),
                DiagonalFactor(log_d1=TrigExpr(cos_v=0.3), log_d2=TrigExpr()),
            )
        )
        x = TorusPoint(0.2, 0.7)
        th = 0.4 * np.sin(2 * np.pi * 0.2)
        d1 = np.exp(0.3 * np.cos(2 * np.pi * 0.7))
        ref = mat2.rotation(th) @ np.diag([d1, 1.0])
        assert np.allclose(evaluate(spec, x), ref, rtol=1e-14)

    def test_perturbed_multiplicative(self, cat):
        base = ConstantCocycle(matrix=DIAG2)
        fld = ConstantField(matrix=np.array([[0.0, 1.0], [1.0, 0.0]]))
        pert = PerturbedCocycle(base=base, direction=fld, t=0.25, rule="multiplicative_exp")
        x = TorusPoint(0.1, 0.2)
        ref = DIAG2 @ mat2.expm(0.25 * np.array([[0.0, 1.0], [1.0, 0.0]]))
        assert np.allclose(evaluate(pert, x), ref, rtol=1e-14)
        assert pert.r == base.r

    def test_perturbed_additive(self, shift2):
        base = two_table(DIAG2, mat2.rotation(0.3))
        fld = LocallyConstantField(
            table=np.array([np.eye(2), np.zeros((2, 2))])
        )
        pert = PerturbedCocycle(base=base, direction=fld, t=0.1, rule="additive")
        x = ShiftPoint(window=np.array([1, 0, 1], dtype=np.int16))
        assert np.allclose(evaluate(pert, x), DIAG2 + 0.1 * np.eye(2))

    def test_wrong_base_kind(self, cat, shift2):
        lc = two_table(DIAG2, mat2.rotation(0.3))
        with pytest.raises(ConfigError):
            evaluate(lc, TorusPoint(0.1, 0.1))
        pw = PointwiseCocycle(factors=(RotationFactor(angle=TrigExpr(sin_u=1.0)),))
        with pytest.raises(ConfigError):
            evaluate(pw, ShiftPoint(window=np.array([0, 1, 0], dtype=np.int16)))


class TestProducts:
    def test_cocycle_identity_shift(self, shift2):
        spec = two_table(
            np.array([[1.2, 0.0], [0.0, 1 / 1.2]]),
            mat2.rotation(0.1) @ np.array([[1.2, 0.0], [0.0, 1 / 1.2]]),
        )
        pts = sample_points(shift2, 10, 45, seed=3)
        rng = np.random.default_rng(4)
        for x in pts:
            m, n = rng.integers(-20, 21, size=2)
            lhs = product(spec, shift2, x, int(m + n))
            rhs = product(spec, shift2, apply_f(shift2, x, int(n)), int(m)) @ product(
                spec, shift2, x, int(n)
            )
            assert rel_err(lhs, rhs) < 1e-9

    def test_cocycle_identity_torus(self, cat):
        spec = PointwiseCocycle(
            factors=(
                RotationFactor(angle=TrigExpr(sin_u=0.3, cos_v=0.2)),
                DiagonalFactor(log_d1=TrigExpr(const=0.2), log_d2=TrigExpr(const=-0.2)),
            )
        )
        pts = sample_points(cat, 10, 0, seed=5)
        rng = np.random.default_rng(6)
        for x in pts:
            m, n = rng.integers(-15, 16, size=2)
            lhs = product(spec, cat, x, int(m + n))
            rhs = product(spec, cat, apply_f(cat, x, int(n)), int(m)) @ product(
                spec, cat, x, int(n)
            )
            assert rel_err(lhs, rhs) < 1e-9

    def test_renormalized_matches_plain(self, shift2):
        spec = two_table(DIAG2, mat2.rotation(0.7) @ DIAG2)
        pts = sample_points(shift2, 5, 40, seed=7)
        for x in pts:
            # long mixed-rotation products are badly conditioned, so the
            # entrywise agreement between differently grouped float products
            # degrades like cond * eps; the log scale stays tight throughout.
            for n, tol in ((0, 0), (1, 1e-12), (7, 1e-11), (12, 1e-9),
                           (-7, 1e-11), (-12, 1e-9), (25, 1e-4), (-25, 1e-4)):
                normalized, ls = product_renormalized(spec, shift2, x, n)
                plain = product(spec, shift2, x, n)
                assert abs(mat2.opnorm(normalized) - 1.0) < 1e-12 or n == 0
                if n == 0:
                    assert np.array_equal(normalized, np.eye(2)) and ls == 0.0
                    continue
                assert rel_err(np.exp(ls) * normalized, plain) < tol
                assert ls == pytest.approx(np.log(mat2.opnorm(plain)), abs=tol)

    def test_negative_determinant_steps(self, shift2):
        flip = np.array([[0.0, 2.0], [0.5, 0.0]])  # det = -1
        spec = two_table(flip, DIAG2)
        pts = sample_points(shift2, 4, 30, seed=8)
        for x in pts:
            for n in (9, -9, 16, -16):
                normalized, ls = product_renormalized(spec, shift2, x, n)
                plain = product(spec, shift2, x, n)
                assert rel_err(np.exp(ls) * normalized, plain) < 1e-9

    def test_identity_cocycle_long_product(self, shift2):
        spec = ConstantCocycle(matrix=np.eye(2))
        x = ShiftPoint(window=np.array([0, 1, 0], dtype=np.int16))
        normalized, ls = product_renormalized(spec, shift2, x, 10**6)
        assert ls == 0.0
        assert np.array_equal(normalized, np.eye(2))

    def test_constant_power_no_orbit_access(self, shift2):
        # window of half-width 1 cannot host a 100-step walk; the constant
        # fast path must not need one.
        spec = ConstantCocycle(matrix=DIAG2)
        x = ShiftPoint(window=np.array([0, 1, 0], dtype=np.int16))
        normalized, ls = product_renormalized(spec, shift2, x, 100)
        assert ls == pytest.approx(100 * np.log(2.0), rel=1e-14)
        ref = np.array([[1.0, 0.0], [0.0, 0.25 ** 100]])
        assert np.allclose(normalized, ref, atol=1e-300)
        _, ls_back = product_renormalized(spec, shift2, x, -100)
        assert ls_back == pytest.approx(100 * np.log(2.0), rel=1e-12)

    def test_renormalized_scale_shift(self, shift2):
        # scaling the generator by c shifts log_scale by n log c and leaves
        # the normalized part unchanged; exact for dyadic c.
        base = two_table(DIAG2, mat2.rotation(0.4) @ DIAG2)
        x = sample_points(shift2, 1, 30, seed=9)[0]
        n0, l0 = product_renormalized(base, shift2, x, 20)
        for c in (2.0, 0.5):
            scaled = two_table(c * DIAG2, c * (mat2.rotation(0.4) @ DIAG2))
            n1, l1 = product_renormalized(scaled, shift2, x, 20)
            assert np.array_equal(n0, n1)
            assert l1 == pytest.approx(l0 + 20 * np.log(c), rel=1e-14)
        scaled = two_table(3.0 * DIAG2, 3.0 * (mat2.rotation(0.4) @ DIAG2))
        n1, l1 = product_renormalized(scaled, shift2, x, 20)
        assert np.allclose(n0, n1, atol=1e-12)
        assert l1 == pytest.approx(l0 + 20 * np.log(3.0), rel=1e-12)


class TestHolderNorm:
    def test_constant(self, shift2):
        rep = holder_norm(ConstantCocycle(matrix=DIAG2), shift2)
        assert rep.exact
        assert rep.sup_norm == 2.0
        assert rep.holder_constant == 0.0

    def test_locally_constant_depth_one(self, shift2):
        m0 = DIAG2
        m1 = mat2.rotation(0.2)
        rep = holder_norm(two_table(m0, m1), shift2)
        assert rep.exact
        assert rep.sup_norm == pytest.approx(2.0)
        assert rep.holder_constant == pytest.approx(mat2.opnorm(m0 - m1))

    def test_locally_constant_depth_two(self, shift2):
        mats = np.array([np.eye(2), np.eye(2), np.eye(2), 2.0 * np.eye(2)])
        spec = LocallyConstantCocycle(table=mats, depth=2, alphabet_size=2, r=1.0)
        rep = holder_norm(spec, shift2)
        # words 10 and 11 differ first at forward position 1: quotient
        # ||I - 2I|| / lambda0^1 = 2; words 0*, 1* differ at position 0.
        assert rep.holder_constant == pytest.approx(2.0)

    def test_pointwise_monte_carlo(self, cat):
        eps = 0.2
        spec = PointwiseCocycle(
            factors=(RotationFactor(angle=TrigExpr(sin_u=eps)),)
        )
        rep = holder_norm(spec, cat, pair_samples=512, seed=2)
        assert not rep.exact
        assert rep.sup_norm == pytest.approx(1.0, rel=1e-9)
        lipschitz = 2.0 * np.pi * eps
        assert rep.holder_constant <= lipschitz * (1.0 + 1e-6)
        assert rep.holder_constant >= 0.9 * lipschitz

    def test_distance_exact_tables(self, shift2):
        a = two_table(DIAG2, mat2.rotation(0.3))
        b = two_table(DIAG2, mat2.rotation(0.3))
        rep = holder_distance(a, b, shift2)
        assert rep.exact and rep.norm == 0.0
        fld = LocallyConstantField(table=np.array([np.eye(2), -np.eye(2)]))
        pert = PerturbedCocycle(base=a, direction=fld, t=0.01, rule="additive")
        rep = holder_distance(pert, a, shift2)
        assert rep.exact
        assert rep.sup_norm == pytest.approx(0.01)
        assert rep.holder_constant == pytest.approx(0.02)

    def test_distance_constant_vs_table(self, shift2):
        a = two_table(DIAG2, DIAG2)
        b = ConstantCocycle(matrix=DIAG2)
        rep = holder_distance(a, b, shift2)
        assert rep.exact and rep.norm == 0.0


class TestBunching:
    def test_constant_bunched(self, shift2):
        q = 2.0 ** 0.25
        spec = ConstantCocycle(matrix=np.diag([q, 1.0 / q]), r=1.0)
        rep = bunching_check(spec, shift2, n_max=40)
        assert isinstance(rep, BunchingReport)
        assert rep.exact
        assert rep.verdict == "bunched"
        assert rep.kappa_lambda_r == pytest.approx(np.sqrt(2.0) / 2.0, abs=1e-12)
        assert rep.theta_hat == pytest.approx(np.sqrt(2.0) / 2.0, abs=0.02)

    def test_constant_not_bunched(self, shift2):
        spec = ConstantCocycle(matrix=DIAG2, r=1.0)
        rep = bunching_check(spec, shift2, n_max=40)
        assert rep.exact
        assert rep.verdict == "not_bunched"
        assert rep.kappa_lambda_r == pytest.approx(2.0, abs=1e-12)
        assert rep.theta_hat == pytest.approx(2.0, abs=0.02)

    def test_sampled_verdict(self, shift2):
        d = np.diag([1.2, 1.0 / 1.2])
        spec = two_table(d, mat2.rotation(0.1) @ d)
        rep = bunching_check(spec, shift2, n_max=40, x_samples=32, seed=1)
        assert not rep.exact
        assert rep.verdict == "bunched"
        assert rep.theta_hat < 0.95

    def test_torus_constant(self, cat):
        spec = ConstantCocycle(matrix=np.diag([1.1, 1.0 / 1.1]), r=1.0)
        rep = bunching_check(spec, cat, n_max=40)
        # kappa lambda^r = 1.21 * 0.382 < 1
        assert rep.verdict == "bunched"
