"""Estimator semantics: RBW, normalization, averaging, stitching, subtraction."""

import numpy as np
import pytest
from scipy import signal

from sqzsim.errors import (
    ConfigError,
    DomainError,
    GridMismatchError,
    InsufficientDataError,
)
from sqzsim.spectral import (
    Band,
    SpectrumSegment,
    StitchedSpectrum,
    WindowPlan,
    averaged_psd,
    band_select,
    fig2_plan,
    fig3_plan,
    hann_window,
    n_floored,
    run_plan,
    segment_length_for_rbw,
    subtract_dark,
    subtract_dark_spectrum,
    to_db_rel_vacuum,
)

FS = 16384.0
RNG = np.random.default_rng


def white(n, psd=1.0, seed=0):
    """White noise with the given one-sided PSD in analysis units."""
    return RNG(seed).standard_normal(n) * np.sqrt(psd * FS / 2.0)


def flat_segment(value, n_bins=64, f_lo=10.0, df=1.0, rbw=1.5, k=100):
    freqs = f_lo + df * np.arange(n_bins)
    return SpectrumSegment(
        f_lo=f_lo, f_hi=freqs[-1], rbw_hz=rbw, n_averages=k,
        frequencies=freqs, psd=np.full(n_bins, float(value)),
    )


class TestSegmentLength:
    def test_finest_band(self):
        assert segment_length_for_rbw(0.015625, FS) == 1_572_864

    def test_coarsest_band(self):
        assert segment_length_for_rbw(4.0, FS) == 6_144

    def test_round_trip(self):
        for n in (4096, 6144, 98304):
            rbw = 1.5 * FS / n
            assert segment_length_for_rbw(rbw, FS) == n

    def test_rejects_bad_args(self):
        with pytest.raises(DomainError):
            segment_length_for_rbw(0.0, FS)
        with pytest.raises(DomainError):
            segment_length_for_rbw(FS, FS)

    def test_hann_enbw_factor_is_exact(self):
        # ENBW in bins: N * sum(w^2) / sum(w)^2 == 1.5 for the periodic Hann.
        for n in (64, 1024, 6144):
            w = hann_window(n)
            enbw = n * np.sum(w**2) / np.sum(w)**2
            assert enbw == pytest.approx(1.5, abs=1e-12)


class TestAveragedPsd:
    def test_white_noise_level_and_scatter(self):
        k = 400
        nseg = segment_length_for_rbw(16.0, FS)
        x = white(nseg * (k + 2) // 2 + nseg, psd=1.0, seed=1)
        seg = averaged_psd(x, FS, 16.0, k)
        sel = (seg.frequencies > 50.0) & (seg.frequencies < FS / 2 - 50.0)
        bins = seg.psd[sel]
        assert bins.mean() == pytest.approx(1.0, rel=0.01)
        # chi-squared oracle: per-bin scatter ~ 1/sqrt(K), overlap factor < 1.3
        assert bins.std() * np.sqrt(k) < 1.3
        assert bins.std() * np.sqrt(k) > 1.0 / 1.3
        assert np.all(np.abs(bins - 1.0) < 5.0 * 1.3 / np.sqrt(k))

    def test_matches_scipy_welch(self):
        # Dual route: same data through scipy's estimator agrees per bin.
        rbw = 4.0
        nseg = segment_length_for_rbw(rbw, FS)
        k = 63
        x = white(nseg * (k + 1) // 2, psd=2.0, seed=2)
        ours = averaged_psd(x, FS, rbw, k)
        f, p = signal.welch(
            x[: nseg + (k - 1) * nseg // 2],
            fs=FS,
            window=signal.windows.hann(nseg, sym=False),
            nperseg=nseg,
            noverlap=nseg // 2,
            detrend="constant",
        )
        assert np.allclose(ours.frequencies, f)
        assert np.allclose(ours.psd[1:-1], p[1:-1], rtol=1e-10)

    def test_zero_input(self):
        seg = averaged_psd(np.zeros(100_000), FS, 4.0, 10)
        assert not seg.psd.any()

    @pytest.mark.parametrize("rbw", [0.25, 1.0, 4.0])
    def test_sinusoid_peak_power(self, rbw):
        # Integrated power across the peak recovers A^2/2 at any RBW.
        amp, f0 = 3.0, 104.0
        nseg = segment_length_for_rbw(rbw, FS)
        k = 4
        n = nseg + (k - 1) * nseg // 2
        t = np.arange(n) / FS
        seg = averaged_psd(amp * np.cos(2 * np.pi * f0 * t), FS, rbw, k)
        df = seg.frequencies[1] - seg.frequencies[0]
        sel = np.abs(seg.frequencies - f0) <= 4 * df
        integral = np.sum(seg.psd[sel]) * df
        assert integral == pytest.approx(amp**2 / 2.0, rel=0.01)

    def test_insufficient_data(self):
        with pytest.raises(InsufficientDataError):
            averaged_psd(np.zeros(1000), FS, 4.0, 10)

    def test_scatter_shrinks_with_averages(self):
        rbw = 16.0
        nseg = segment_length_for_rbw(rbw, FS)

        def scatter(k, seed):
            x = white(nseg * (k + 3) // 2, psd=1.0, seed=seed)
            seg = averaged_psd(x, FS, rbw, k)
            sel = (seg.frequencies > 50.0) & (seg.frequencies < 8000.0)
            return seg.psd[sel].std() / seg.psd[sel].mean()

        for k in (16, 64, 256):
            s = scatter(k, seed=k)
            assert 1.0 / 1.3 < s * np.sqrt(k) < 1.3


class TestRunPlan:
    def test_single_band_plan_is_band_selected_psd(self):
        plan = WindowPlan(bands=(Band(10.0, 3200.0, 4.0, 20),))
        x = white(200_000, psd=1.0, seed=3)
        stitched = run_plan(x, FS, plan)
        direct = band_select(averaged_psd(x, FS, 4.0, 20), 10.0, 3200.0)
        assert np.array_equal(stitched.segments[0].psd, direct.psd)
        assert np.array_equal(stitched.segments[0].frequencies, direct.frequencies)

    def test_white_input_flat_across_fig2_bands(self):
        plan = fig2_plan().scaled(0.1)
        x = white(plan.required_samples(FS), psd=1.0, seed=4)
        stitched = run_plan(x, FS, plan)
        assert len(stitched.segments) == 5
        for seg in stitched.segments:
            level_db = 10.0 * np.log10(seg.psd.mean())
            assert abs(level_db) < 0.3

    def test_stitch_continuity_on_white_input(self):
        # Per-Hz normalization keeps white noise continuous across a band
        # boundary where the RBW changes.
        plan = WindowPlan(bands=(
            Band(50.0, 200.0, 1.0, 300),
            Band(200.0, 800.0, 4.0, 300),
        ))
        x = white(plan.required_samples(FS), psd=1.0, seed=5)
        stitched = run_plan(x, FS, plan)
        left, right = stitched.segments
        edge_left = left.psd[left.frequencies >= 150.0].mean()
        edge_right = right.psd[right.frequencies <= 250.0].mean()
        step_db = abs(10.0 * np.log10(edge_left / edge_right))
        assert step_db < 0.2

    def test_insufficient_data_names_band(self):
        plan = fig3_plan()
        with pytest.raises(InsufficientDataError, match=r"band 0 \(1.0-10.0 Hz\)"):
            run_plan(np.zeros(100_000), FS, plan)

    def test_low_sample_rate_rejected(self):
        plan = fig3_plan()
        with pytest.raises(ConfigError):
            run_plan(np.zeros(100_000), 4096.0, plan)

    def test_provenance_carried(self):
        plan = WindowPlan(bands=(Band(100.0, 1000.0, 16.0, 4),))
        stitched = run_plan(white(10_000, seed=6), FS, plan, provenance="abc123")
        assert stitched.provenance == "abc123"


class TestPlans:
    def test_fig2_plan_values(self):
        bands = fig2_plan().bands
        assert bands[0] == (0.8, 3.2, 0.015625, 75)
        assert bands[1] == (10.0, 50.0, 0.25, 100)
        assert bands[4] == (800.0, 3200.0, 4.0, 400)

    def test_fig3_plan_values(self):
        bands = fig3_plan().bands
        assert bands[0] == (1.0, 10.0, 0.0625, 30)
        assert bands[2] == (50.0, 200.0, 1.0, 100)
        assert bands[4] == (800.0, 3200.0, 4.0, 400)

    def test_fast_scaling(self):
        bands = fig2_plan().scaled(0.1).bands
        assert [b.n_averages for b in bands] == [8, 10, 10, 40, 40]

    def test_full_fig2_duration(self):
        # Lowest band: 75 averages of 96 s segments at 50% overlap.
        assert fig2_plan().required_samples(FS) / FS == pytest.approx(3648.0)

    def test_plan_validation(self):
        with pytest.raises(DomainError):
            WindowPlan(bands=(Band(10.0, 5.0, 1.0, 10),))
        with pytest.raises(DomainError):
            WindowPlan(bands=(Band(10.0, 50.0, 1.0, 10),
                              Band(40.0, 100.0, 1.0, 10)))
        with pytest.raises(DomainError):
            WindowPlan(bands=(Band(0.5, 50.0, 1.0, 10),))  # f_lo < rbw


class TestDbConversion:
    def test_spectrum_equal_to_reference_is_zero_db(self):
        seg = flat_segment(0.5)
        ref = flat_segment(0.5)
        out = to_db_rel_vacuum(StitchedSpectrum(segments=[seg]),
                               StitchedSpectrum(segments=[ref]))
        assert out.units == "db_rel_vacuum"
        assert np.allclose(out.segments[0].psd, 0.0)

    def test_paper_level_against_analytic_reference(self):
        seg = flat_segment(0.2208333)
        out = to_db_rel_vacuum(StitchedSpectrum(segments=[seg]), 1.0)
        assert np.allclose(out.segments[0].psd, -6.5594, atol=1e-3)

    def test_factor_two(self):
        seg = flat_segment(2.0)
        out = to_db_rel_vacuum(StitchedSpectrum(segments=[seg]), 1.0)
        assert np.allclose(out.segments[0].psd, 3.0103, atol=1e-4)

    def test_grid_mismatch(self):
        a = StitchedSpectrum(segments=[flat_segment(1.0, n_bins=64)])
        b = StitchedSpectrum(segments=[flat_segment(1.0, n_bins=32)])
        with pytest.raises(GridMismatchError):
            to_db_rel_vacuum(a, b)

    def test_nonpositive_reference(self):
        a = StitchedSpectrum(segments=[flat_segment(1.0)])
        with pytest.raises(DomainError):
            to_db_rel_vacuum(a, 0.0)


class TestSubtractDark:
    def test_zero_dark_is_identity(self):
        sig = flat_segment(0.7)
        out = subtract_dark(sig, flat_segment(0.0))
        assert np.array_equal(out.psd, sig.psd)
        assert not out.floored.any()

    def test_paper_recovery_numbers(self):
        # -1.5 dB observed, dark level from calibration: recovers -3.5 dB.
        sig = flat_segment(10 ** (-0.15))
        dark = flat_segment(0.2612622)
        out = subtract_dark(sig, dark)
        level_db = 10.0 * np.log10(out.psd[0])
        assert level_db == pytest.approx(-3.5, abs=0.01)

    def test_floor_policy_flags_bins(self):
        sig = flat_segment(1.0, n_bins=8)
        dark = flat_segment(1.0, n_bins=8)
        dark.psd[3] = 2.0   # dark exceeds signal in one bin
        dark.psd[:3] = 0.5
        dark.psd[4:] = 0.5
        out = subtract_dark(sig, dark)
        assert out.floored[3]
        assert out.floored.sum() == 1
        assert out.psd[3] == pytest.approx(0.5 * 1e-3)
        assert n_floored(StitchedSpectrum(segments=[out])) == 1

    def test_re_add_recovers_original(self):
        rng = RNG(7)
        sig = flat_segment(1.0, n_bins=128)
        sig.psd = 1.0 + 0.3 * rng.random(128)
        dark = flat_segment(0.0, n_bins=128)
        dark.psd = 0.5 * rng.random(128)
        out = subtract_dark(sig, dark)
        restored = out.psd + dark.psd
        keep = ~out.floored
        assert np.allclose(restored[keep], sig.psd[keep], rtol=1e-12)

    def test_grid_mismatch(self):
        with pytest.raises(GridMismatchError):
            subtract_dark(flat_segment(1.0, n_bins=4), flat_segment(1.0, n_bins=5))

    def test_stitched_variant(self):
        sig = StitchedSpectrum(segments=[flat_segment(1.0), flat_segment(2.0)])
        dark = StitchedSpectrum(segments=[flat_segment(0.25), flat_segment(0.25)])
        out = subtract_dark_spectrum(sig, dark)
        assert np.allclose(out.segments[0].psd, 0.75)
        assert np.allclose(out.segments[1].psd, 1.75)


class TestParseval:
    def test_integral_matches_variance(self):
        x = white(1 << 20, psd=1.0, seed=8)
        seg = averaged_psd(x, FS, 16.0, 600)
        df = seg.frequencies[1] - seg.frequencies[0]
        integral = np.sum(seg.psd) * df
        variance = np.var(x)
        se = variance * np.sqrt(2.0 / x.size) * 1.5
        assert abs(integral - variance) <= 3.0 * se + 0.005 * variance
