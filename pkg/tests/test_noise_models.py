"""Closed-form quadrature-variance model: golden values and properties."""

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sqzsim.errors import DomainError
from sqzsim.noise_models import (
    LossBudget,
    OpoParams,
    QuadraturePair,
    ValueInterval,
    antisqueezed_variance,
    db_to_variance,
    quadrature_pair,
    quadrature_variance,
    squeezed_variance,
    squeezing_interval,
    total_loss,
    variance_to_db,
    visibility_efficiency,
)

GAIN_12 = OpoParams(gain=12.0)
GAIN_40 = OpoParams(gain=40.0)

gains = st.floats(min_value=1.0, max_value=100.0)
losses = st.floats(min_value=0.0, max_value=1.0, exclude_max=True)


class TestTotalLoss:
    def test_empty_chain_is_lossless(self):
        assert total_loss(LossBudget()) == 0.0

    def test_single_entry(self):
        budget = LossBudget(entries=(("detection", 0.85),))
        assert total_loss(budget) == pytest.approx(0.15, abs=1e-12)

    def test_visibility_squared_times_qe(self):
        budget = LossBudget(entries=(
            ("visibility_squared", visibility_efficiency(0.983)),
            ("photodiode_qe", 0.93),
        ))
        assert total_loss(budget) == pytest.approx(0.10135123, abs=1e-8)

    def test_visibility_squared_matches_interference_oracle(self):
        # Two-field fringe oracle: overlap a reference mode with a signal
        # mode carrying a controlled admixture of an orthogonal mode.  The
        # fringe visibility equals the overlap, and the power fraction the
        # detector projects out is its square.
        x = np.linspace(-8.0, 8.0, 20001)
        mode0 = np.exp(-x**2 / 2.0)
        mode0 /= np.sqrt(np.trapezoid(mode0**2, x))
        mode1 = x * np.exp(-x**2 / 2.0)  # orthogonal by parity
        mode1 /= np.sqrt(np.trapezoid(mode1**2, x))
        target = 0.983
        eps = math.acos(target)
        signal = math.cos(eps) * mode0 + math.sin(eps) * mode1

        phases = np.linspace(0.0, 2.0 * np.pi, 721)
        fringe = [
            np.trapezoid((mode0 + np.cos(p) * signal)**2
                         + (np.sin(p) * signal)**2, x)
            for p in phases
        ]
        i_max, i_min = max(fringe), min(fringe)
        visibility = (i_max - i_min) / (i_max + i_min)
        assert visibility == pytest.approx(target, abs=1e-6)
        assert visibility_efficiency(visibility) == pytest.approx(
            target**2, abs=1e-5
        )

    @given(st.lists(st.floats(min_value=0.01, max_value=1.0), max_size=8),
           st.randoms())
    def test_permutation_invariant(self, etas, rnd):
        entries = [(f"e{i}", eta) for i, eta in enumerate(etas)]
        shuffled = list(entries)
        rnd.shuffle(shuffled)
        a = total_loss(LossBudget(entries=tuple(entries)))
        b = total_loss(LossBudget(entries=tuple(shuffled)))
        assert a == pytest.approx(b, abs=1e-12)

    def test_rejects_bad_efficiency(self):
        with pytest.raises(DomainError):
            LossBudget(entries=(("bad", 0.0),))
        with pytest.raises(DomainError):
            LossBudget(entries=(("bad", 1.2),))


class TestVariances:
    def test_paper_operating_point(self):
        v = squeezed_variance(GAIN_12, 0.15)
        assert v == pytest.approx(0.2208333333, abs=1e-9)
        assert variance_to_db(v) == pytest.approx(-6.5594, abs=1e-3)

    def test_unity_gain_is_vacuum(self):
        assert squeezed_variance(OpoParams(gain=1.0), 0.0) == 1.0

    def test_high_gain_point(self):
        v = squeezed_variance(GAIN_40, 0.15)
        assert v == pytest.approx(0.17125, abs=1e-9)
        assert variance_to_db(v) == pytest.approx(-7.6637, abs=1e-3)

    def test_antisqueezed_paper_point(self):
        v = antisqueezed_variance(GAIN_12, 0.15)
        assert v == pytest.approx(10.35, abs=1e-9)
        assert variance_to_db(v) == pytest.approx(10.1494, abs=1e-3)

    def test_antisqueezed_trivial_points(self):
        assert antisqueezed_variance(OpoParams(gain=1.0), 0.5) == 1.0
        assert antisqueezed_variance(GAIN_12, 1.0) == 1.0

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            OpoParams(gain=0.5)
        with pytest.raises(DomainError):
            squeezed_variance(GAIN_12, -0.1)
        with pytest.raises(DomainError):
            squeezed_variance(GAIN_12, 1.5)

    @given(gains, gains, losses)
    def test_monotone_decreasing_in_gain(self, g1, g2, l):
        lo, hi = sorted((g1, g2))
        assert squeezed_variance(OpoParams(gain=hi), l) <= squeezed_variance(
            OpoParams(gain=lo), l) + 1e-15

    @given(gains, losses, losses)
    def test_monotone_increasing_in_loss(self, g, l1, l2):
        lo, hi = sorted((l1, l2))
        opo = OpoParams(gain=g)
        assert squeezed_variance(opo, lo) <= squeezed_variance(opo, hi) + 1e-15

    @given(gains, losses)
    def test_uncertainty_product_closed_form(self, g, l):
        opo = OpoParams(gain=g)
        product = squeezed_variance(opo, l) * antisqueezed_variance(opo, l)
        closed = 1.0 + l * (1.0 - l) * (math.sqrt(g) - 1.0 / math.sqrt(g))**2
        assert product == pytest.approx(closed, rel=1e-10, abs=1e-12)
        assert product >= 1.0 - 1e-12


class TestQuadratureRotation:
    PAIR = QuadraturePair(v_squeezed=0.2208333333333333,
                          v_antisqueezed=10.35)

    def test_amplitude_quadrature(self):
        assert quadrature_variance(self.PAIR, 0.0) == self.PAIR.v_squeezed

    def test_phase_quadrature(self):
        assert quadrature_variance(self.PAIR, math.pi / 2) == pytest.approx(
            self.PAIR.v_antisqueezed, rel=1e-12)

    def test_diagonal_is_arithmetic_mean(self):
        assert quadrature_variance(self.PAIR, math.pi / 4) == pytest.approx(
            5.2854166667, abs=1e-9)

    def test_wraps(self):
        assert quadrature_variance(self.PAIR, 2.0 * math.pi) == pytest.approx(
            self.PAIR.v_squeezed, rel=1e-12)

    @given(st.floats(min_value=-10.0, max_value=10.0))
    def test_squeezed_angle_is_minimum(self, theta):
        v = quadrature_variance(self.PAIR, theta)
        assert v >= self.PAIR.v_squeezed - 1e-12
        assert v <= self.PAIR.v_antisqueezed + 1e-12


class TestDbConversion:
    def test_vacuum_is_zero_db(self):
        assert variance_to_db(1.0) == 0.0

    def test_paper_values(self):
        assert variance_to_db(0.22083333) == pytest.approx(-6.5594, abs=1e-3)
        assert variance_to_db(10.35) == pytest.approx(10.1494, abs=1e-3)

    def test_rejects_nonpositive(self):
        with pytest.raises(DomainError):
            variance_to_db(0.0)
        with pytest.raises(DomainError):
            variance_to_db(-1.0)

    @given(st.floats(min_value=-80.0, max_value=80.0))
    def test_round_trip(self, db):
        assert variance_to_db(db_to_variance(db)) == pytest.approx(
            db, rel=1e-12, abs=1e-12)


class TestSqueezingInterval:
    def test_paper_uncertainties(self):
        interval = squeezing_interval(
            ValueInterval(11.5, 12.0, 12.5), ValueInterval(0.11, 0.15, 0.19)
        )
        assert interval.contains(6.56)
        assert interval.nominal == pytest.approx(6.5594, abs=1e-3)
        assert interval.lo == pytest.approx(5.8430, abs=1e-3)
        assert interval.hi == pytest.approx(7.4184, abs=1e-3)

    def test_degenerate_interval(self):
        interval = squeezing_interval(
            ValueInterval(1.0, 1.0, 1.0), ValueInterval(0.0, 0.0, 0.0)
        )
        assert (interval.lo, interval.nominal, interval.hi) == (0.0, 0.0, 0.0)

    def test_high_gain_interval(self):
        interval = squeezing_interval(
            ValueInterval(36.0, 40.0, 44.0), ValueInterval(0.11, 0.15, 0.19)
        )
        assert interval.contains(7.66)

    def test_corners_match_brute_force_grid(self):
        gain = ValueInterval(11.5, 12.0, 12.5)
        loss = ValueInterval(0.11, 0.15, 0.19)
        interval = squeezing_interval(gain, loss)
        grid = [
            -variance_to_db(squeezed_variance(OpoParams(gain=g), l))
            for g, l in itertools.product(
                np.linspace(gain.lo, gain.hi, 41),
                np.linspace(loss.lo, loss.hi, 41),
            )
        ]
        assert interval.lo == pytest.approx(min(grid), abs=1e-12)
        assert interval.hi == pytest.approx(max(grid), abs=1e-12)

    def test_ordering_enforced(self):
        with pytest.raises(DomainError):
            ValueInterval(2.0, 1.0, 3.0)


class TestFlatBandLimit:
    def test_reference_linewidth(self):
        opo = OpoParams(gain=12.0, cavity_linewidth_hz=27e6)
        assert opo.flat_band_limit_hz == pytest.approx(27e3)
        opo.check_band(3200.0)  # fine

    def test_band_violation_rejected(self):
        from sqzsim.errors import ConfigError

        opo = OpoParams(gain=12.0, cavity_linewidth_hz=27e6)
        with pytest.raises(ConfigError):
            opo.check_band(50e3)
