"""Sum, path and completion tests.  Expected values come from direct
summation oracles evaluated inside the tests."""
import cmath
import math

import numpy as np
import pytest

from klpath.errors import DomainError, NotCoprime, UnsupportedRegime
from klpath.kloosterman import (
    ALPHA_BETA_CAP,
    KloostermanParams,
    _step_cutoff,
    beta_coeff,
    completed_step,
    fourier_alpha,
    kl_closed,
    kl_closed_over_units,
    kl_closed_table,
    kl_naive,
    kloosterman_path,
    partial_sums_stream,
    path_eval,
    path_polyline,
)
from klpath.modular import PrimePowerModulus, jacobi_symbol, mod_inverse

M9 = PrimePowerModulus(3, 2)
ORACLE_MODULI = [(3, 2), (3, 3), (5, 2)]


def units_of(mod):
    return [x for x in range(1, mod.q) if x % mod.p != 0]


def kl_brute(mod, a, b):
    """Independent of the library: explicit inverse table and exponentials."""
    total = 0j
    for x in units_of(mod):
        xbar = pow(x, -1, mod.q)
        total += cmath.exp(2j * math.pi * ((a * x + b * xbar) % mod.q) / mod.q)
    return total / math.sqrt(mod.q)


class TestNaiveSum:
    def test_hand_expanded_q9(self):
        value = kl_naive(KloostermanParams(M9, 1, 1))
        assert value.real == pytest.approx(2 * math.cos(4 * math.pi / 9), abs=1e-12)
        assert abs(value.imag) < 1e-12

    def test_nonresidue_vanishes(self):
        assert abs(kl_naive(KloostermanParams(M9, 2, 1))) < 1e-12

    def test_prime_modulus(self):
        m3 = PrimePowerModulus(3, 1)
        value = kl_naive(KloostermanParams(m3, 1, 1))
        assert value.real == pytest.approx(-1 / math.sqrt(3), abs=1e-12)

    @pytest.mark.parametrize("p,n", ORACLE_MODULI)
    def test_matches_independent_brute_force(self, p, n):
        mod = PrimePowerModulus(p, n)
        for a in units_of(mod)[:4]:
            for b in units_of(mod)[:4]:
                assert kl_naive(KloostermanParams(mod, a, b)) == pytest.approx(
                    kl_brute(mod, a, b), abs=1e-12
                )

    @pytest.mark.parametrize("p,n", [(3, 2), (5, 2), (7, 2)])
    def test_multiplicative_reduction(self, p, n):
        mod = PrimePowerModulus(p, n)
        for a in units_of(mod):
            for b in units_of(mod):
                lhs = kl_naive(KloostermanParams(mod, a, b))
                rhs = kl_naive(KloostermanParams(mod, a * b, 1))
                assert abs(lhs - rhs) < 1e-9


class TestClosedForm:
    def test_q9_value(self):
        assert kl_closed(KloostermanParams(M9, 1, 1)) == pytest.approx(
            2 * math.cos(4 * math.pi / 9), abs=1e-12
        )

    def test_divisible_by_p(self):
        assert kl_closed(KloostermanParams(M9, 3, 1)) == 0.0

    def test_q27_odd_phase(self):
        mod = PrimePowerModulus(3, 3)
        closed = kl_closed(KloostermanParams(mod, 1, 1))
        naive = kl_naive(KloostermanParams(mod, 1, 1))
        assert closed == pytest.approx(naive.real, abs=1e-9)
        # theta = pi/2 here, so the value is -2 sin(4 pi / 27)
        assert closed == pytest.approx(-2 * math.sin(4 * math.pi / 27), abs=1e-12)

    @pytest.mark.parametrize("p,n", ORACLE_MODULI + [(7, 2), (11, 2)])
    def test_oracle_equality_all_pairs(self, p, n):
        mod = PrimePowerModulus(p, n)
        for a in units_of(mod):
            for b in units_of(mod):
                params = KloostermanParams(mod, a, b)
                assert abs(kl_closed(params) - kl_naive(params)) <= 1e-9

    def test_bound_of_two(self):
        mod = PrimePowerModulus(11, 2)
        values = kl_closed_over_units(mod)
        assert float(np.max(np.abs(values))) <= 2.0

    def test_root_choice_invariance(self):
        for mod, a in ((M9, 7), (PrimePowerModulus(3, 3), 4), (PrimePowerModulus(5, 2), 6)):
            q = mod.q
            roots = [s for s in range(q) if (s * s - a) % q == 0]
            assert len(roots) >= 2
            theta = 0.0 if mod.n % 2 == 0 or mod.p % 4 == 1 else math.pi / 2
            vals = {
                round(
                    2 * jacobi_symbol(s, q) * math.cos(4 * math.pi * s / q + theta), 12
                )
                for s in roots
            }
            assert len(vals) == 1

    def test_unsupported_regimes(self):
        with pytest.raises(UnsupportedRegime):
            kl_closed(KloostermanParams(PrimePowerModulus(3, 1), 1, 1))
        with pytest.raises(UnsupportedRegime):
            kl_closed(KloostermanParams(PrimePowerModulus(3, 5), 1, 1))

    def test_table_matches_scalar(self):
        mod = PrimePowerModulus(7, 2)
        table = kl_closed_table(mod)
        for c in range(mod.q):
            assert table[c] == pytest.approx(
                kl_closed(KloostermanParams(mod, c, 1)), abs=1e-12
            )

    def test_over_units_respects_b0(self):
        mod = PrimePowerModulus(7, 2)
        values = kl_closed_over_units(mod, b0=3)
        for i, a in enumerate(units_of(mod)):
            assert values[i] == pytest.approx(
                kl_closed(KloostermanParams(mod, a, 3)), abs=1e-12
            )


class TestPartialSums:
    def test_endpoint_enumeration_q9(self):
        xs = [pt.x for pt in partial_sums_stream(KloostermanParams(M9, 1, 1))]
        assert xs == [1, 2, 4, 5, 7, 8]

    def test_first_point(self):
        first = next(iter(partial_sums_stream(KloostermanParams(M9, 1, 1))))
        assert first.value == pytest.approx(
            cmath.exp(2j * math.pi * 2 / 9) / 3, abs=1e-12
        )

    def test_last_point_is_complete_sum(self):
        path = kloosterman_path(KloostermanParams(M9, 1, 1))
        assert path.complete_sum == pytest.approx(
            kl_naive(KloostermanParams(M9, 1, 1)), abs=1e-12
        )

    @pytest.mark.parametrize("p,n,a,b", [(3, 2, 1, 1), (5, 2, 2, 3), (7, 2, 3, 5)])
    def test_equal_segment_lengths(self, p, n, a, b):
        mod = PrimePowerModulus(p, n)
        pts = list(partial_sums_stream(KloostermanParams(mod, a, b)))
        assert len(pts) == mod.phi
        step = mod.q ** -0.5
        for prev, cur in zip(pts, pts[1:]):
            assert abs(cur.value - prev.value) == pytest.approx(
                step, abs=1e-12 * step
            )

    def test_requires_units(self):
        with pytest.raises(NotCoprime):
            list(partial_sums_stream(KloostermanParams(M9, 3, 1)))

    def test_polyline_matches_stream(self):
        verts = path_polyline(KloostermanParams(M9, 1, 1))
        assert len(verts) == 6
        assert verts[0][0] == pytest.approx(math.cos(4 * math.pi / 9) / 3, abs=1e-12)
        assert verts[0][1] == pytest.approx(math.sin(4 * math.pi / 9) / 3, abs=1e-12)


class TestPathEval:
    def test_start_value(self):
        params = KloostermanParams(M9, 1, 1)
        expected = cmath.exp(2j * math.pi * (1 + 1) / 9) / 3
        assert path_eval(0.0, params) == pytest.approx(expected, abs=1e-12)

    def test_end_value(self):
        params = KloostermanParams(M9, 1, 1)
        assert path_eval(1.0, params) == pytest.approx(
            kl_naive(params), abs=1e-12
        )

    def test_vertices_are_partial_sums(self):
        params = KloostermanParams(M9, 1, 1)
        pts = list(partial_sums_stream(params))
        phi = M9.phi
        for j in (1, 2, 3, 4, 5):
            t = (j - 1) / (phi - 1)
            assert path_eval(t, params) == pytest.approx(
                pts[j - 1].value, abs=1e-12
            )

    def test_domain_error(self):
        with pytest.raises(DomainError):
            path_eval(-0.1, KloostermanParams(M9, 1, 1))
        with pytest.raises(DomainError):
            path_eval(1.1, KloostermanParams(M9, 1, 1))

    def test_stays_within_segment_radius(self):
        params = KloostermanParams(PrimePowerModulus(7, 2), 2, 3)
        pts = list(partial_sums_stream(params))
        phi = params.mod.phi
        rng = np.random.default_rng(5)
        for t in rng.random(25):
            j = max(1, math.ceil((phi - 1) * t))
            assert abs(path_eval(float(t), params) - pts[j - 1].value) <= (
                params.mod.q ** -0.5 + 1e-12
            )


class TestFourierAlpha:
    @staticmethod
    def alpha_brute(h, t, mod):
        m, _ = _step_cutoff(t, mod)
        total = sum(
            cmath.exp(2j * math.pi * h * x / mod.q) for x in range(1, m + 1)
        )
        return total / math.sqrt(mod.q)

    @pytest.mark.parametrize("p,n", [(3, 2), (3, 3), (5, 2), (7, 2)])
    def test_closed_form_matches_brute(self, p, n):
        mod = PrimePowerModulus(p, n)
        rng = np.random.default_rng(11)
        hs = list(range(-3, 4)) + [int(v) for v in rng.integers(-mod.q, mod.q, 5)]
        ts = [0.0, 1e-9, 0.2, 0.5, 1 / 3, 0.99, 1.0]
        for h in hs:
            for t in ts:
                assert fourier_alpha(h, t, mod) == pytest.approx(
                    self.alpha_brute(h, t, mod), abs=1e-10
                )

    def test_h_zero(self):
        mod = PrimePowerModulus(3, 2)
        m, _ = _step_cutoff(0.7, mod)
        assert fourier_alpha(0, 0.7, mod) == pytest.approx(m / 3.0)

    def test_zero_at_t_zero(self):
        assert fourier_alpha(5, 0.0, PrimePowerModulus(5, 2)) == 0

    @pytest.mark.parametrize("p,n", [(3, 2), (5, 2)])
    def test_magnitude_bound(self, p, n):
        mod = PrimePowerModulus(p, n)
        root_q = math.sqrt(mod.q)
        for h in range(-(mod.q - 1) // 2, (mod.q - 1) // 2 + 1):
            for t in np.linspace(0, 1, 23):
                bound = root_q * (1.0 if h == 0 else 1.0 / (2 * abs(h)))
                assert abs(fourier_alpha(h, float(t), mod)) <= bound + 1e-9


class TestBeta:
    def test_h_zero(self):
        assert beta_coeff(0, 0.3) == pytest.approx(0.3)

    def test_full_period(self):
        assert beta_coeff(1, 1.0) == pytest.approx(0.0, abs=1e-15)

    def test_quarter(self):
        assert beta_coeff(2, 0.25) == pytest.approx(1j / (2 * math.pi), abs=1e-15)


class TestAlphaBetaApproximation:
    @pytest.mark.parametrize("p,n", [(3, 2), (3, 3), (5, 2), (5, 3), (7, 2), (11, 2), (13, 2), (7, 3)])
    def test_cap_on_dense_grid(self, p, n):
        mod = PrimePowerModulus(p, n)
        q = mod.q
        ts = np.linspace(0, 1, 101)
        worst = 0.0
        for h in range(-(q - 1) // 2, (q - 1) // 2 + 1):
            for t in ts:
                diff = abs(
                    fourier_alpha(h, float(t), mod) / math.sqrt(q)
                    - beta_coeff(h, float(t))
                )
                worst = max(worst, diff * q)
        assert worst <= ALPHA_BETA_CAP


class TestCompletedStep:
    def test_empty_prefix(self):
        params = KloostermanParams(M9, 1, 1)
        assert completed_step(1e-9, params, "direct") == 0

    def test_full_range_is_complete_sum(self):
        for p, n in ORACLE_MODULI:
            mod = PrimePowerModulus(p, n)
            params = KloostermanParams(mod, 2, 1)
            assert completed_step(1.0, params, "direct") == pytest.approx(
                kl_naive(params), abs=1e-12
            )

    @pytest.mark.parametrize("p,n", [(3, 2), (5, 2), (3, 3), (13, 2)])
    def test_direct_equals_completed(self, p, n):
        mod = PrimePowerModulus(p, n)
        rng = np.random.default_rng(13)
        units = units_of(mod)
        for _ in range(8):
            a = units[rng.integers(0, len(units))]
            b = units[rng.integers(0, len(units))]
            t = float(rng.random())
            params = KloostermanParams(mod, a, b)
            direct = completed_step(t, params, "direct")
            completed = completed_step(t, params, "completed")
            assert abs(direct - completed) <= 1e-8 * (1 + math.log(mod.q))

    @pytest.mark.parametrize("p,n", [(3, 2), (5, 2), (7, 2), (13, 2)])
    def test_step_stays_near_path(self, p, n):
        mod = PrimePowerModulus(p, n)
        params = KloostermanParams(mod, 1, 2)
        rng = np.random.default_rng(17)
        for t in rng.random(20):
            gap = abs(path_eval(float(t), params) - completed_step(float(t), params))
            assert gap <= 6.0 / math.sqrt(mod.q)

    def test_direct_equals_prefix_of_partial_sums(self):
        params = KloostermanParams(M9, 1, 1)
        pts = list(partial_sums_stream(params))
        # block k = 2 of q = 9 covers t in (1/3, 2/3]; x_2(0.5) = 4 keeps
        # the first three units 1, 2, 4
        value = completed_step(0.5, params, "direct")
        assert value == pytest.approx(pts[2].value, abs=1e-12)
