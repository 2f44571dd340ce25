"""Quantitative checks on simulated spectra.

Three kinds of verification live here:

* vacuum sanity: noise power scales linearly with LO power and the
  spectrum is white,
* squeezing level: band-mean suppression relative to a vacuum reference,
  with mains bins masked,
* calibration: solve the dark and parasitic model parameters from two
  anchor levels and check that the synthesis/analysis pipeline closes on
  them.

Band means of noisy spectra are taken in the power domain (unbiased for
a chi-squared estimator).  Where per-bin dB values enter a statistic,
they are first corrected for the Gamma-distribution log bias
(10/ln10)(psi(K) - ln K) of a K-average estimate; without this the
K-dependent offset of a stitched spectrum masquerades as a spectral
tilt.  Masks are lists of per-segment boolean arrays, True = excluded
bin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from scipy.special import digamma

from .errors import CalibrationError, ConfigError, DomainError, GridMismatchError
from .noise_models import db_to_variance, variance_to_db
from .spectral import (
    HANN_ENBW_FACTOR,
    SpectrumSegment,
    StitchedSpectrum,
    WindowPlan,
    segment_length_for_rbw,
)
from .synth import DEFAULT_SAMPLE_RATE_HZ, DarkNoiseModel, ParasiticModel

#: Paper-grade instrument tolerance used as the default for level checks.
DEFAULT_TOLERANCE_DB = 0.5

#: Relative estimator scatter allowance: 1/sqrt(K) times this factor
#: bounds the per-bin standard deviation at 50% overlap.
OVERLAP_SCATTER_FACTOR = 1.3

_DB = 10.0 / math.log(10.0)


@dataclass
class CheckReport:
    """Outcome of one verification check."""

    name: str
    passed: bool
    measured: float
    expected: float
    tolerance: float
    units: str = "dB"
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": bool(self.passed),
            "measured": float(self.measured),
            "expected": float(self.expected),
            "tolerance": float(self.tolerance),
            "units": self.units,
            "details": self.details,
        }


Mask = list


def empty_mask(spectrum: StitchedSpectrum) -> Mask:
    return [np.zeros(seg.frequencies.size, dtype=bool) for seg in spectrum.segments]


def mains_mask(
    plan: WindowPlan,
    fundamental_hz: float,
    n_harmonics: int,
    half_width_bins: int = 2,
    fs: float = DEFAULT_SAMPLE_RATE_HZ,
) -> Mask:
    """Mask bins within ``half_width_bins`` of each mains harmonic.

    The bin grids are reconstructed exactly as :func:`~sqzsim.spectral.run_plan`
    builds them (multiples of fs / N inside each band).
    """
    if n_harmonics < 0:
        raise DomainError("n_harmonics must be >= 0")
    harmonic_freqs = [fundamental_hz * (k + 1) for k in range(n_harmonics)]
    mask = []
    for band in plan.bands:
        n_seg = segment_length_for_rbw(band.rbw_hz, fs)
        df = fs / n_seg
        k_lo = int(np.ceil(band.f_lo / df - 1e-9))
        k_hi = int(np.floor(band.f_hi / df + 1e-9))
        freqs = np.arange(k_lo, k_hi + 1) * df
        m = np.zeros(freqs.size, dtype=bool)
        for f0 in harmonic_freqs:
            m |= np.abs(freqs - f0) <= half_width_bins * df + 1e-9
        mask.append(m)
    return mask


def _combined_exclusion(seg: SpectrumSegment, mask_seg: np.ndarray | None) -> np.ndarray:
    """Mask plus any bins flagged as floored by dark subtraction."""
    excl = np.zeros(seg.frequencies.size, dtype=bool)
    if mask_seg is not None:
        if mask_seg.size != seg.frequencies.size:
            raise GridMismatchError("mask length does not match segment bins")
        excl |= mask_seg
    if seg.floored is not None:
        excl |= seg.floored
    return excl


def _band_bins(
    spectrum: StitchedSpectrum,
    band: tuple[float, float] | None,
    mask: Mask | None,
):
    """Yield (segment, selected-bin boolean array) for usable bins."""
    for i, seg in enumerate(spectrum.segments):
        sel = np.ones(seg.frequencies.size, dtype=bool)
        if band is not None:
            sel &= (seg.frequencies >= band[0]) & (seg.frequencies <= band[1])
        sel &= ~_combined_exclusion(seg, None if mask is None else mask[i])
        if np.any(sel):
            yield seg, sel


def _check_same_plan(a: StitchedSpectrum, b: StitchedSpectrum) -> None:
    if len(a.segments) != len(b.segments):
        raise GridMismatchError("spectra have different segment counts")
    for sa, sb in zip(a.segments, b.segments):
        if not np.array_equal(sa.frequencies, sb.frequencies):
            raise GridMismatchError("spectra do not share bin grids")


def bin_scatter_db(n_averages: int) -> float:
    """Allowance for the per-bin standard deviation of a dB spectrum."""
    return _DB * OVERLAP_SCATTER_FACTOR / math.sqrt(n_averages)


def chi2_log_bias_db(n_averages: int) -> float:
    """Expected dB offset of a K-average PSD estimate: E[10 log10(X/mu)].

    The mean of K (approximately independent) unit-mean exponential
    periodogram bins is Gamma(K)-distributed, so the log estimate sits
    (10/ln10)(psi(K) - ln K) below the true level (about -2.17/K dB).
    """
    k = int(n_averages)
    return _DB * (digamma(k) - math.log(k))


def _estimated_db(psd: np.ndarray, n_averages: int) -> np.ndarray:
    """Debiased dB view of estimated PSD bins."""
    return 10.0 * np.log10(psd) - chi2_log_bias_db(n_averages)


def check_linearity(
    spectra: Mapping[float, StitchedSpectrum],
    tolerance_db: float = DEFAULT_TOLERANCE_DB,
    mask: Mask | None = None,
) -> CheckReport:
    """Noise power must scale linearly with LO power.

    For every power pair the offset 10*log10(mean_a / mean_b) over all
    unmasked bins is compared with 10*log10(P_a / P_b).  Band means are
    taken in the power domain.  The report's ``measured`` value is the
    worst absolute deviation; per-band offsets are in ``details``.
    """
    if len(spectra) < 2:
        raise ConfigError("linearity check needs spectra for at least two LO powers")
    powers = sorted(spectra)
    ref = spectra[powers[0]]
    for p in powers[1:]:
        _check_same_plan(ref, spectra[p])

    def pooled_mean(spectrum: StitchedSpectrum) -> float:
        chunks = [seg.psd[sel] for seg, sel in _band_bins(spectrum, None, mask)]
        if not chunks:
            raise ConfigError("no usable bins after masking")
        return float(np.mean(np.concatenate(chunks)))

    def band_means(spectrum: StitchedSpectrum) -> list[float]:
        out = []
        for i, seg in enumerate(spectrum.segments):
            sel = ~_combined_exclusion(seg, None if mask is None else mask[i])
            out.append(float(np.mean(seg.psd[sel])) if np.any(sel) else float("nan"))
        return out

    worst = 0.0
    pairs = []
    for i in range(len(powers)):
        for j in range(i + 1, len(powers)):
            pa, pb = powers[j], powers[i]
            expected = 10.0 * math.log10(pa / pb)
            measured = 10.0 * math.log10(pooled_mean(spectra[pa]) / pooled_mean(spectra[pb]))
            mean_a = band_means(spectra[pa])
            mean_b = band_means(spectra[pb])
            per_band = [
                10.0 * math.log10(a / b) if a > 0 and b > 0 else float("nan")
                for a, b in zip(mean_a, mean_b)
            ]
            deviation = abs(measured - expected)
            worst = max(worst, deviation)
            pairs.append({
                "power_a_w": pa,
                "power_b_w": pb,
                "expected_db": expected,
                "measured_db": measured,
                "deviation_db": deviation,
                "per_band_offset_db": per_band,
            })
    return CheckReport(
        name="lo_power_linearity",
        passed=worst <= tolerance_db,
        measured=worst,
        expected=0.0,
        tolerance=tolerance_db,
        details={"pairs": pairs, "powers_w": powers},
    )


def check_whiteness(
    spectrum: StitchedSpectrum,
    band: tuple[float, float] = (10.0, 3200.0),
    mask: Mask | None = None,
    slope_tolerance_db_per_decade: float = 0.2,
    deviation_sigmas: float = 3.0,
) -> CheckReport:
    """The spectrum must be independent of Fourier frequency.

    Fits the slope of dB vs log10(f) over the unmasked bins of ``band``
    and additionally requires every bin to sit within
    ``deviation_sigmas`` estimator standard deviations of the band mean.
    """
    freqs, dbs, sigmas = [], [], []
    for seg, sel in _band_bins(spectrum, band, mask):
        vals = seg.psd[sel]
        if spectrum.units == "db_rel_vacuum":
            db = vals  # already dB; caller owns any bias handling
        else:
            if np.any(vals <= 0.0):
                raise DomainError("whiteness check needs positive PSD bins")
            db = _estimated_db(vals, seg.n_averages)
        freqs.append(seg.frequencies[sel])
        dbs.append(db)
        sigmas.append(np.full(db.size, bin_scatter_db(seg.n_averages)))
    if not freqs:
        raise ConfigError("no usable bins in the requested band after masking")
    f = np.concatenate(freqs)
    db = np.concatenate(dbs)
    sigma = np.concatenate(sigmas)

    x = np.log10(f)
    slope, _intercept = np.polyfit(x, db, 1)
    band_mean = float(np.mean(db))
    dev_sigmas = np.abs(db - band_mean) / sigma
    max_dev = float(dev_sigmas.max())
    passed = abs(slope) <= slope_tolerance_db_per_decade and max_dev <= deviation_sigmas
    return CheckReport(
        name="whiteness",
        passed=passed,
        measured=float(slope),
        expected=0.0,
        tolerance=slope_tolerance_db_per_decade,
        units="dB/decade",
        details={
            "band_hz": list(band),
            "band_mean_db": band_mean,
            "max_bin_deviation_sigmas": max_dev,
            "deviation_sigma_limit": deviation_sigmas,
            "n_bins": int(f.size),
        },
    )


def measured_squeezing(
    squeezed: StitchedSpectrum,
    vacuum_ref: StitchedSpectrum | float,
    band: tuple[float, float] = (10.0, 3200.0),
    mask: Mask | None = None,
    expected_db: float | None = None,
    tolerance_db: float = DEFAULT_TOLERANCE_DB,
) -> CheckReport:
    """Band-mean noise suppression below the vacuum reference, in dB.

    Averages the per-bin difference (vacuum dB - squeezed dB) over the
    unmasked, unfloored bins of ``band``; a matching-grid simulated
    vacuum reference cancels the estimator's log bias.  The per-bin
    maximum is reported informationally, with the estimator-derived
    uncertainty of the mean.
    """
    if isinstance(vacuum_ref, StitchedSpectrum):
        _check_same_plan(squeezed, vacuum_ref)
    diffs, sigmas = [], []
    per_bin_max = -math.inf
    for i, seg in enumerate(squeezed.segments):
        sel = (seg.frequencies >= band[0]) & (seg.frequencies <= band[1])
        sel &= ~_combined_exclusion(seg, None if mask is None else mask[i])
        if isinstance(vacuum_ref, StitchedSpectrum):
            ref_seg = vacuum_ref.segments[i]
            sel &= ~_combined_exclusion(ref_seg, None)
            ref_vals = ref_seg.psd[sel]
            sigma_ref = bin_scatter_db(ref_seg.n_averages)
        else:
            ref_vals = float(vacuum_ref)
            sigma_ref = 0.0
        if not np.any(sel):
            continue
        vals = seg.psd[sel]
        if np.any(vals <= 0.0) or np.any(np.asarray(ref_vals) <= 0.0):
            raise DomainError("squeezing measurement needs positive PSD bins")
        d = -_estimated_db(vals, seg.n_averages)
        if isinstance(vacuum_ref, StitchedSpectrum):
            d = d + _estimated_db(ref_vals, ref_seg.n_averages)
        else:
            d = d + 10.0 * np.log10(ref_vals)
        diffs.append(d)
        sigmas.append(
            np.full(d.size, math.hypot(bin_scatter_db(seg.n_averages), sigma_ref))
        )
        per_bin_max = max(per_bin_max, float(d.max()))
    if not diffs:
        raise ConfigError("no usable bins in the requested band after masking")
    d = np.concatenate(diffs)
    sigma = np.concatenate(sigmas)
    measured = float(np.mean(d))
    # Neighboring Hann bins are correlated; ENBW factor discounts them.
    n_eff = d.size / HANN_ENBW_FACTOR
    uncertainty = float(math.sqrt(np.mean(sigma**2) / n_eff))
    if expected_db is None:
        expected_db = measured
    passed = abs(measured - expected_db) <= tolerance_db
    return CheckReport(
        name="squeezing_level",
        passed=passed,
        measured=measured,
        expected=float(expected_db),
        tolerance=tolerance_db,
        details={
            "band_hz": list(band),
            "uncertainty_db": uncertainty,
            "per_bin_max_db": per_bin_max,
            "n_bins": int(d.size),
        },
    )


def calibrate_dark(
    observed_db_at_f: float,
    recovered_db_at_f: float,
    f_hz: float,
    midband_floor_db: float,
) -> DarkNoiseModel:
    """Solve the dark model from an observed/dark-subtracted level pair.

    The dark PSD at the anchor frequency is the power difference of the
    two levels; the flat mid-band clearance fixes the floor and the knee
    follows from floor * (1 + knee / f) = dark.  Equal levels yield the
    degenerate zero-dark model.
    """
    if not f_hz > 0.0:
        raise DomainError("calibration frequency must be positive")
    observed_p = db_to_variance(observed_db_at_f)
    recovered_p = 0.0 if recovered_db_at_f == -math.inf else db_to_variance(recovered_db_at_f)
    if recovered_p > observed_p:
        raise CalibrationError(
            "recovered level exceeds observed level (in power); "
            "dark subtraction cannot add noise"
        )
    dark_at_f = observed_p - recovered_p
    if dark_at_f == 0.0:
        return DarkNoiseModel(floor_rel_vacuum=0.0, knee_hz=0.0)
    floor = db_to_variance(midband_floor_db)
    if floor > dark_at_f:
        raise CalibrationError(
            f"mid-band floor {floor:.4g} exceeds dark level {dark_at_f:.4g} "
            f"at {f_hz} Hz; knee would be negative"
        )
    knee = f_hz * (dark_at_f / floor - 1.0)
    return DarkNoiseModel(floor_rel_vacuum=floor, knee_hz=knee)


def calibrate_parasitic(
    recovered_db_at_f: float,
    intrinsic_db: float,
    f_hz: float,
    alpha: float = 2.0,
    f_min_hz: float = 0.1,
) -> ParasiticModel:
    """Solve the parasitic model from the dark-subtracted level and the
    intrinsic squeezing level at one frequency.

    The parasitic PSD at the anchor is the power difference; the
    power-law exponent extrapolates it to 1 Hz.
    """
    if not f_hz > 0.0:
        raise DomainError("calibration frequency must be positive")
    recovered_p = db_to_variance(recovered_db_at_f)
    intrinsic_p = db_to_variance(intrinsic_db)
    if intrinsic_p > recovered_p:
        raise CalibrationError(
            "intrinsic level exceeds recovered level (in power); "
            "parasitic noise cannot be negative"
        )
    parasitic_at_f = recovered_p - intrinsic_p
    if parasitic_at_f == 0.0:
        return ParasiticModel(psd_at_1hz_rel_vacuum=0.0, exponent_alpha=alpha,
                              f_min_hz=f_min_hz)
    return ParasiticModel(
        psd_at_1hz_rel_vacuum=parasitic_at_f * f_hz ** alpha,
        exponent_alpha=alpha,
        f_min_hz=f_min_hz,
    )
