"""Tests for symbols: builtins, multiplier action, kernels, periodization, Wiener checks."""

import math

import numpy as np
import pytest

from wavelab.errors import ConfigurationError, ValidationError
from wavelab.grids import PeriodicGrid, RealField, l2_inner, to_spectral
from wavelab.symbols import (
    apply_multiplier,
    builtin_symbol,
    fold_kernel,
    kernel_sample,
    load_symbol_table,
    periodization_check,
    wiener_predicates,
)


@pytest.fixture(scope="module")
def whitham():
    return builtin_symbol("whitham")


class TestBuiltinSymbols:
    def test_whitham_origin(self, whitham):
        assert float(whitham(0.0)) == 1.0
        assert whitham.m0 == 1.0

    def test_whitham_second_derivative(self, whitham):
        # quadratic coefficient of the expansion is -1/6, so m''(0) = -1/3
        assert whitham.d == pytest.approx(-1.0 / 3.0, abs=0)
        h = 1e-3
        fd = (float(whitham(h)) - 2.0 + float(whitham(-h))) / h**2
        assert fd == pytest.approx(-1.0 / 3.0, abs=1e-5)

    def test_whitham_at_one(self, whitham):
        oracle = math.sqrt(math.tanh(1.0))
        assert float(whitham(1.0)) == pytest.approx(oracle, abs=1e-12)

    def test_whitham_series_seam(self, whitham):
        lo, hi = 0.99999e-4, 1.00001e-4
        assert abs(float(whitham(lo)) - float(whitham(hi))) < 1e-12

    def test_whitham_validate(self, whitham):
        report = whitham.validate()
        assert report["remainder_order"] > 3.0
        assert report["decay_constant"] < 2.0

    def test_fractional(self):
        sym = builtin_symbol("fractional", sigma=-2.0)
        assert float(sym(0.0)) == 1.0
        assert float(sym(3.0)) == pytest.approx(0.1, abs=1e-14)
        assert sym.d == -2.0
        sym.validate()

    def test_fractional_requires_negative_order(self):
        with pytest.raises(ConfigurationError):
            builtin_symbol("fractional", sigma=0.5)
        with pytest.raises(ConfigurationError):
            builtin_symbol("fractional")

    def test_unknown_symbol(self):
        with pytest.raises(ConfigurationError):
            builtin_symbol("airy")

    def test_table_roundtrip(self, tmp_path):
        xi = np.linspace(0.0, 50.0, 2001)
        m = 1.0 / (1.0 + xi**2)
        path = tmp_path / "sym.txt"
        np.savetxt(path, np.column_stack([xi, m]))
        sym = builtin_symbol("table", path=path)
        assert float(sym(0.0)) == 1.0
        assert float(sym(-10.0)) == float(sym(10.0))  # mirrored by evenness
        assert sym.valid_up_to == 50.0
        assert abs(float(sym(7.0)) - 1.0 / 50.0) < 1e-4

    def test_table_non_even_rejected(self, tmp_path):
        path = tmp_path / "bad.txt"
        rows = np.array([[-1.0, 0.4], [0.0, 1.0], [1.0, 0.5]])
        np.savetxt(path, rows)
        with pytest.raises(ValidationError):
            load_symbol_table(path)

    def test_table_decreasing_rejected(self, tmp_path):
        path = tmp_path / "bad2.txt"
        np.savetxt(path, np.array([[0.0, 1.0], [2.0, 0.5], [1.0, 0.7]]))
        with pytest.raises(ValidationError):
            load_symbol_table(path)


class TestMultiplier:
    def test_constant(self, whitham):
        g = PeriodicGrid(P=16.0, N=64)
        u = RealField(g, np.full(g.N, 3.0))
        Lu = apply_multiplier(u, whitham)
        assert np.max(np.abs(Lu.values - 3.0 * whitham.m0)) < 1e-13

    def test_single_mode(self, whitham):
        g = PeriodicGrid(P=16.0, N=64)
        u = RealField(g, np.sin(2 * np.pi * g.x / g.P))
        Lu = apply_multiplier(u, whitham)
        expected = float(whitham(2 * np.pi / g.P)) * u.values
        assert np.max(np.abs(Lu.values - expected)) < 1e-13

    def test_zero_field(self, whitham):
        g = PeriodicGrid(P=16.0, N=64)
        Lu = apply_multiplier(RealField(g, np.zeros(g.N)), whitham)
        assert np.max(np.abs(Lu.values)) == 0.0

    def test_linearity(self, whitham):
        rng = np.random.default_rng(2)
        g = PeriodicGrid(P=30.0, N=128)
        u = RealField(g, rng.standard_normal(g.N))
        v = RealField(g, rng.standard_normal(g.N))
        a, b = 1.7, -0.4
        lhs = apply_multiplier(RealField(g, a * u.values + b * v.values), whitham)
        rhs = a * apply_multiplier(u, whitham).values + b * apply_multiplier(v, whitham).values
        assert np.max(np.abs(lhs.values - rhs)) < 1e-13 * np.max(np.abs(rhs))

    def test_self_adjoint(self, whitham):
        rng = np.random.default_rng(4)
        g = PeriodicGrid(P=30.0, N=128)
        u = RealField(g, rng.standard_normal(g.N))
        v = RealField(g, rng.standard_normal(g.N))
        a = l2_inner(apply_multiplier(u, whitham), v)
        b = l2_inner(u, apply_multiplier(v, whitham))
        assert abs(a - b) < 1e-12 * max(abs(a), 1.0)

    def test_smoothing_bound(self, whitham):
        # discrete analogue of |m| <= C <xi>^sigma: ||Lu||_{H^{s+1/2}} <= C ||u||_{H^s}
        from wavelab.grids import hsp_norm

        rng = np.random.default_rng(6)
        g = PeriodicGrid(P=30.0, N=256)
        C = whitham.validate()["decay_constant"]
        for _ in range(5):
            u = RealField(g, rng.standard_normal(g.N))
            Lu = apply_multiplier(u, whitham)
            assert hsp_norm(Lu, 1.5) <= C * hsp_norm(u, 1.0) * (1 + 1e-12)

    def test_range_guard(self):
        xi = np.linspace(0.0, 5.0, 100)
        sym = builtin_symbol("table", xi=xi, m=np.exp(-xi))
        g = PeriodicGrid(P=8.0, N=64)  # nyquist = 8*pi > 5
        with pytest.raises(ConfigurationError):
            apply_multiplier(RealField(g, np.zeros(g.N)), sym)

    def test_agrees_with_folded_kernel_convolution(self, whitham):
        # Lu = (1/sqrt(2 pi)) K_P *_P u, realized as a circular convolution on the
        # u grid; agreement is bounded by the periodization deviation.
        g = PeriodicGrid(P=40.0, N=256)
        ks = kernel_sample(whitham, X=4 * g.P, M=8 * g.N)
        rep = periodization_check(whitham, g, ks)
        y, K_P = fold_kernel(ks, g.P)
        assert len(y) == g.N
        # fold anchored at y_i = i*dx:  (K_P * u)(x_j) = dx * sum_i K_P(y_i) u(x_{j-i})
        u = RealField(g, np.exp(np.cos(2 * np.pi * g.x / g.P)))
        conv = g.dx * np.real(np.fft.ifft(np.fft.fft(K_P) * np.fft.fft(u.values)))
        Lu_conv = conv / np.sqrt(2 * np.pi)
        Lu = apply_multiplier(u, whitham)
        scale = np.max(np.abs(Lu.values))
        assert np.max(np.abs(Lu_conv - Lu.values)) <= max(rep.max_rel_deviation, 1e-12) * scale * 10


class TestKernelSample:
    def test_closed_form_kernel(self):
        sym = builtin_symbol("fractional", sigma=-2.0)
        ks = kernel_sample(sym, X=40.0, M=2**14)
        exact = np.sqrt(np.pi / 2) * np.exp(-np.abs(ks.x))
        away = np.abs(ks.x) > 0.5  # band truncation rings at the |x| = 0 kink
        assert np.max(np.abs(ks.K[away] - exact[away])) < 1e-4
        assert ks.l1_estimate == pytest.approx(np.sqrt(2 * np.pi), abs=1e-6)
        assert not ks.underresolved

    def test_zero_table_symbol(self):
        xi = np.linspace(0.0, 10.0, 101)
        sym = builtin_symbol("table", xi=xi, m=np.zeros_like(xi))
        ks = kernel_sample(sym, X=20.0, M=1024)
        assert np.max(np.abs(ks.K)) == 0.0
        assert ks.l1_estimate == 0.0

    def test_whitham_l1_refinement_cauchy(self, whitham):
        ladder = [(40.0, 2**13), (80.0, 2**15), (160.0, 2**17)]
        l1s = [kernel_sample(whitham, X, M).l1_estimate for X, M in ladder]
        diffs = [abs(a - b) for a, b in zip(l1s, l1s[1:])]
        assert diffs[-1] < 1e-3
        assert diffs[-1] <= diffs[0] + 1e-12

    def test_parameter_guards(self, whitham):
        with pytest.raises(ConfigurationError):
            kernel_sample(whitham, X=-1.0, M=64)
        with pytest.raises(ConfigurationError):
            kernel_sample(whitham, X=1.0, M=100)


class TestPeriodization:
    def test_closed_form_symbol(self):
        sym = builtin_symbol("fractional", sigma=-2.0)
        g = PeriodicGrid(P=20.0, N=128)
        ks = kernel_sample(sym, X=80.0, M=2**18)
        rep = periodization_check(sym, g, ks)
        assert rep.aligned
        assert rep.max_rel_deviation < 1e-6

    def test_whitham_moderate_resolution(self, whitham):
        g = PeriodicGrid(P=40.0, N=256)
        ks = kernel_sample(whitham, X=160.0, M=2**16)
        rep = periodization_check(whitham, g, ks)
        assert rep.max_rel_deviation < 1e-3

    def test_zero_symbol_deviation_zero(self):
        xi = np.linspace(0.0, 400.0, 101)
        sym = builtin_symbol("table", xi=xi, m=np.zeros_like(xi))
        g = PeriodicGrid(P=20.0, N=64)
        ks = kernel_sample(sym, X=80.0, M=2**14)
        rep = periodization_check(sym, g, ks)
        assert rep.max_rel_deviation == 0.0

    def test_insufficient_range_rejected(self, whitham):
        g = PeriodicGrid(P=40.0, N=64)
        ks = kernel_sample(whitham, X=80.0, M=2**12)  # only 2 periods
        with pytest.raises(ConfigurationError):
            periodization_check(whitham, g, ks)

    def test_unaligned_fallback(self):
        sym = builtin_symbol("fractional", sigma=-2.0)
        g = PeriodicGrid(P=20.0, N=64)
        ks = kernel_sample(sym, X=70.0, M=2**16)  # 2X/P = 7 does not divide M... it does; use 66
        ks = kernel_sample(sym, X=66.0, M=2**16)  # 2X/P = 6.6: incommensurate
        rep = periodization_check(sym, g, ks)
        assert not rep.aligned
        assert rep.max_rel_deviation < 1e-3


class TestWienerPredicates:
    def test_whitham_condition_one(self, whitham):
        rep = wiener_predicates(whitham)
        assert rep.condition_decay == "pass"
        assert rep.sigma_fit == pytest.approx(-0.5, abs=0.05)
        assert rep.sigma_prime_fit == pytest.approx(-1.5, abs=0.05)
        assert rep.overall == "pass"

    def test_log_symbol_quasiconvex(self):
        xi = np.linspace(0.0, 400.0, 40001)
        sym = builtin_symbol("table", xi=xi, m=(1.0 + np.log(1.0 + xi)) ** -1.0)
        rep = wiener_predicates(sym, xi_max=390.0)
        assert rep.condition_quasiconvex == "pass"
        assert rep.overall == "pass"

    def test_constant_symbol_all_fail(self):
        xi = np.linspace(0.0, 100.0, 101)
        sym = builtin_symbol("table", xi=xi, m=np.ones_like(xi))
        rep = wiener_predicates(sym, xi_max=99.0)
        assert rep.condition_decay == "fail"
        assert rep.condition_integrability == "fail"
        assert rep.condition_quasiconvex == "fail"
        assert rep.overall == "fail"
