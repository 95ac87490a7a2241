import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rectenna.csr import (CsrGeometry, ETA0, csr_equivalent, csr_inverse_design,
                          csr_resonant_frequency)
from rectenna.errors import InvalidGeometry

NH_PER_MM = 1e-6
TANK = ETA0 / (4 * math.pi)

lengths = st.floats(1e-4, 1.0)
l_puls = st.floats(1e-8, 1e-4)


class TestEquivalent:
    def test_10mm_square(self):
        e = csr_equivalent(CsrGeometry(10e-3, 10e-3, 3, NH_PER_MM))
        assert e.L_o == pytest.approx(40e-9, rel=1e-12)
        assert e.L_s == pytest.approx(13.333e-9, rel=1e-4)
        assert e.C_c == pytest.approx(0.3758e-12, rel=1e-3)
        assert e.f_o == pytest.approx(2.249e9, rel=1e-3)
        assert e.f_o == pytest.approx(TANK / e.L_s, rel=1e-12)

    def test_12p5mm_square_is_near_1p8ghz(self):
        e = csr_equivalent(CsrGeometry(12.5e-3, 12.5e-3))
        assert e.f_o == pytest.approx(1.80e9, rel=2e-3)

    def test_eta0(self):
        assert ETA0 == pytest.approx(376.730, abs=1e-3)
        assert TANK == pytest.approx(29.979, abs=1e-3)

    def test_scaling(self):
        a = csr_equivalent(CsrGeometry(7e-3, 4e-3))
        b = csr_equivalent(CsrGeometry(21e-3, 12e-3))
        assert (b.L_o / a.L_o, b.L_s / a.L_s, b.C_c / a.C_c) == pytest.approx((3, 3, 3))
        assert b.f_o == pytest.approx(a.f_o / 3, rel=1e-12)

    @pytest.mark.parametrize("kw", [dict(L=0, W=1e-3), dict(L=1e-3, W=-1e-3),
                                    dict(L=1e-3, W=1e-3, turns=0),
                                    dict(L=1e-3, W=1e-3, L_pul=0.0),
                                    dict(L=float("nan"), W=1e-3)])
    def test_invalid(self, kw):
        with pytest.raises(InvalidGeometry):
            CsrGeometry(**kw)

    @settings(max_examples=300, deadline=None)
    @given(lengths, lengths, st.integers(1, 8), l_puls)
    def test_tank_constant_and_positivity(self, L, W, n, lp):
        e = csr_equivalent(CsrGeometry(L, W, n, lp))
        assert min(e.L_o, e.L_s, e.C_c, e.f_o) > 0
        assert e.f_o * e.L_s == pytest.approx(TANK, rel=1e-12)
        assert e.f_o == pytest.approx(1 / (2 * math.pi * math.sqrt(e.L_s * e.C_c)), rel=1e-12)

    @settings(max_examples=200, deadline=None)
    @given(lengths, lengths, st.floats(0.1, 10.0))
    def test_homogeneity(self, L, W, k):
        a = csr_equivalent(CsrGeometry(L, W))
        b = csr_equivalent(CsrGeometry(k * L, k * W))
        assert b.L_o == pytest.approx(k * a.L_o, rel=1e-12)
        assert b.C_c == pytest.approx(k * a.C_c, rel=1e-12)
        assert b.f_o == pytest.approx(a.f_o / k, rel=1e-12)


class TestResonance:
    def test_1p8ghz_tank(self):
        assert csr_resonant_frequency(16.67e-9, 0.4698e-12) == pytest.approx(1.799e9, rel=1e-3)

    def test_quadrupled_inductance_halves(self):
        f1 = csr_resonant_frequency(3e-9, 1e-12)
        assert csr_resonant_frequency(12e-9, 1e-12) == pytest.approx(f1 / 2, rel=1e-15)

    def test_unit(self):
        assert csr_resonant_frequency(1.0, 1.0) == pytest.approx(1 / (2 * math.pi), rel=1e-15)

    def test_invalid(self):
        with pytest.raises(InvalidGeometry):
            csr_resonant_frequency(0.0, 1e-12)


class TestInverse:
    def test_1p8ghz_square(self):
        g = csr_inverse_design(1.8e9, NH_PER_MM, 1.0)
        e = csr_equivalent(g)
        assert e.L_s == pytest.approx(16.66e-9, rel=1e-3)
        assert g.L == pytest.approx(12.50e-3, rel=1e-3) and g.W == pytest.approx(g.L)
        assert e.f_o == pytest.approx(1.8e9, rel=1e-9)

    def test_aspect_redistributes(self):
        a = csr_inverse_design(1.8e9, NH_PER_MM, 1.0)
        b = csr_inverse_design(1.8e9, NH_PER_MM, 3.0)
        assert b.L + b.W == pytest.approx(a.L + a.W, rel=1e-12)
        assert b.W == pytest.approx(3 * b.L, rel=1e-12)

    def test_round_trip_random(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            f = 10 ** rng.uniform(8, 10.5)
            lp = 10 ** rng.uniform(-7, -5)
            asp = 10 ** rng.uniform(-1, 1)
            e = csr_equivalent(csr_inverse_design(f, lp, asp))
            assert e.f_o == pytest.approx(f, rel=1e-9)

    def test_invalid(self):
        with pytest.raises(InvalidGeometry):
            csr_inverse_design(-1.0, NH_PER_MM, 1.0)
        with pytest.raises(InvalidGeometry):
            csr_inverse_design(1e9, NH_PER_MM, 0.0)
