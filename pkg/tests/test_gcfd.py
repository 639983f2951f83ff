import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gencaputo.exceptions import DomainError, UnsupportedOracleError
from gencaputo.functions import BUILTIN_FUNCTIONS, GridFunction1D, ScaleWeightPair, TimeGrid
from gencaputo.gcfd import caputo_power, gcfd_apply, gcfd_reference, weighted_power_reference
from gencaputo.weights import lambda_table

from oracles import interpolant_quadrature


def classical(N, T=1.0):
    return ScaleWeightPair.classical(TimeGrid(T, N))


class TestApplyExamples:
    def test_power_case_error_at_160(self):
        alpha, p = 0.5, classical(160)
        t = p.grid.nodes
        series = gcfd_apply(t ** (4 + alpha), p, alpha)
        err = np.max(np.abs(series.values - gcfd_reference(4 + alpha, alpha, p.grid)))
        assert err == pytest.approx(1.0560e-07, rel=0.02)

    @pytest.mark.parametrize("scale", ["t", "t+1", "t^4", "exp(t)", "exp(2t)", "sqrt(t)"])
    def test_constant_samples(self, scale):
        p = ScaleWeightPair.on_grid(BUILTIN_FUNCTIONS[scale], BUILTIN_FUNCTIONS["one"], TimeGrid(1.0, 20))
        table = lambda_table(p, 0.6)
        U = np.full(21, 3.5)
        series = gcfd_apply(U, p, 0.6, weights=table)
        for lw, v in zip(table, series.values):
            assert abs(v) <= 1e-12 * 3.5 * np.abs(lw.values).sum()

    def test_linear_samples_exact(self):
        p = classical(8)
        series = gcfd_apply(p.grid.nodes, p, 0.3)
        ref = p.grid.nodes[1:] ** 0.7 / math.gamma(1.7)
        np.testing.assert_allclose(series.values, ref, rtol=0, atol=1e-11)

    def test_series_layout(self):
        p = classical(5)
        series = gcfd_apply(np.zeros(6), p, 0.5)
        assert series.values.shape == (5,)
        np.testing.assert_array_equal(series.times, p.grid.nodes[1:])
        assert not series.values.flags.writeable

    def test_wrong_sample_count(self):
        with pytest.raises(ValueError):
            gcfd_apply(np.zeros(4), classical(5), 0.5)

    def test_zero_levels_rejected_at_grid(self):
        with pytest.raises(DomainError):
            TimeGrid(1.0, 0)

    def test_methods_agree_on_classical_grid(self):
        p = classical(30)
        U = np.sin(p.grid.nodes) * p.grid.nodes**3
        s = gcfd_apply(U, p, 0.45)
        c = gcfd_apply(U, p, 0.45, method="closed_form")
        np.testing.assert_allclose(s.values, c.values, rtol=1e-11, atol=1e-13)


class TestReference:
    def test_example(self):
        v = gcfd_reference(4.5, 0.5, TimeGrid(1.0, 1))
        assert v[-1] == pytest.approx(2.1809490743563963, rel=1e-14)

    @pytest.mark.parametrize("alpha", [0.1, 0.5, 0.9])
    def test_linear(self, alpha):
        assert gcfd_reference(1, alpha, TimeGrid(1.0, 1))[-1] == pytest.approx(1 / math.gamma(2 - alpha), rel=1e-14)

    def test_p7_against_recurrence(self):
        g75 = math.sqrt(math.pi)
        for k in range(7):
            g75 *= 0.5 + k
        assert gcfd_reference(7, 0.5, TimeGrid(1.0, 1))[-1] == pytest.approx(5040 / g75, rel=1e-14)
        assert 5040 / g75 == pytest.approx(2.6934, abs=5e-5)

    def test_constant_has_zero_derivative(self):
        np.testing.assert_array_equal(caputo_power(0, 0.5, [0.5, 1.0]), [0, 0])

    def test_rejects_general_pair(self):
        p = ScaleWeightPair.on_grid(GridFunction1D.exponential(1), GridFunction1D.constant(1), TimeGrid(1.0, 4))
        with pytest.raises(UnsupportedOracleError):
            gcfd_reference(4.5, 0.5, p.grid, pair=p)

    def test_weighted_reference_reduces_to_power_rule(self):
        p = classical(10)
        np.testing.assert_allclose(weighted_power_reference(4.2, 0.2, p), gcfd_reference(4.2, 0.2, p.grid), rtol=1e-13)

    def test_weighted_reference_needs_affine_scale(self):
        p = ScaleWeightPair.on_grid(GridFunction1D.power(4), GridFunction1D.constant(1), TimeGrid(1.0, 4))
        with pytest.raises(UnsupportedOracleError):
            weighted_power_reference(4.5, 0.5, p)

    def test_affine_weight_expansion(self):
        # omega = t + 1 expanded two ways: directly, and via the power rule on t^(q+1) + t^q
        p = ScaleWeightPair.on_grid(GridFunction1D.identity(), GridFunction1D.affine(1, 1), TimeGrid(1.0, 8))
        t = p.grid.nodes[1:]
        direct = (caputo_power(5.5, 0.5, t) + caputo_power(4.5, 0.5, t)) / (t + 1)
        np.testing.assert_allclose(weighted_power_reference(4.5, 0.5, p), direct, rtol=1e-13)


class TestOperatorProperties:
    @settings(max_examples=40, deadline=None)
    @given(
        st.floats(-5, 5),
        st.floats(-5, 5),
        st.sampled_from(["t", "t+1", "t^4", "exp(t)"]),
        st.sampled_from(["one", "t", "exp(t)", "t+1"]),
        st.floats(0.05, 0.95),
    )
    def test_linearity(self, a, b, scale, weight, alpha):
        p = ScaleWeightPair.on_grid(BUILTIN_FUNCTIONS[scale], BUILTIN_FUNCTIONS[weight], TimeGrid(1.0, 12))
        table = lambda_table(p, alpha)
        t = p.grid.nodes
        U, V = np.cos(3 * t), t**2.5
        lhs = gcfd_apply(a * U + b * V, p, alpha, weights=table).values
        rhs = a * gcfd_apply(U, p, alpha, weights=table).values + b * gcfd_apply(V, p, alpha, weights=table).values
        size = (abs(a) + abs(b) + 1) * max(np.abs(lw.values).sum() * np.abs(p.omega).max() for lw in table)
        assert np.all(np.abs(lhs - rhs) <= 1e-12 * size)

    @settings(max_examples=40, deadline=None)
    @given(st.floats(0.01, 100), st.sampled_from(["t", "exp(t)", "t^4"]), st.floats(0.05, 0.95))
    def test_weight_scaling_covariance(self, k, scale, alpha):
        g = TimeGrid(1.0, 12)
        base = ScaleWeightPair.on_grid(BUILTIN_FUNCTIONS[scale], GridFunction1D.affine(1, 1), g)
        scaled = ScaleWeightPair.on_grid(BUILTIN_FUNCTIONS[scale], GridFunction1D.affine(k, k), g)
        U = np.exp(g.nodes) * g.nodes**3
        v0 = gcfd_apply(U, base, alpha).values
        v1 = gcfd_apply(U, scaled, alpha).values
        np.testing.assert_allclose(v1, v0, rtol=1e-12, atol=1e-12 * np.abs(v0).max())

    @pytest.mark.parametrize("N", [1, 2, 3, 4, 5, 6])
    @pytest.mark.parametrize(
        "scale, weight, alpha",
        [("t", "one", 0.5), ("exp(t)", "t+1", 0.3), ("t^4", "exp(t)", 0.8), ("t+1", "t", 0.6)],
    )
    def test_brute_force_quadrature(self, N, scale, weight, alpha):
        p = ScaleWeightPair.on_grid(BUILTIN_FUNCTIONS[scale], BUILTIN_FUNCTIONS[weight], TimeGrid(1.0, N))
        U = np.sin(2 * p.grid.nodes) + p.grid.nodes**3
        got = gcfd_apply(U, p, alpha).values
        g = p.omega * U
        for n in range(1, N + 1):
            ref = interpolant_quadrature(g, p.zeta, p.omega[n], n, alpha)
            assert got[n - 1] == pytest.approx(ref, abs=1e-9)


def test_observed_rates_trend_upward():
    alpha = 0.5
    errs = []
    for N in (10, 20, 40, 80, 160):
        p = classical(N)
        v = gcfd_apply(p.grid.nodes ** (4 + alpha), p, alpha).values
        errs.append(np.max(np.abs(v - gcfd_reference(4 + alpha, alpha, p.grid))))
    rates = [math.log2(e0 / e1) for e0, e1 in zip(errs, errs[1:])]
    for got, ref in zip(rates, (3.4206, 3.4550, 3.4731, 3.4835)):
        assert got == pytest.approx(ref, abs=0.15)
    assert all(r1 > r0 for r0, r1 in zip(rates, rates[1:]))
    assert rates[-1] < 4 - alpha
