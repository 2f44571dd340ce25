"""Windowed, averaged PSD estimation with analyzer-style resolution bandwidths.

The estimator mimics an FFT spectrum analyzer: a Hann taper, 50% segment
overlap, and power-domain averaging of periodograms, normalized to
one-sided power per Hz.  "RBW" means the taper's equivalent noise
bandwidth (ENBW), which for the periodic Hann window is exactly
1.5 * fs / N; requesting an RBW therefore fixes the segment length.

Multi-band plans stitch several such estimates, each band with its own
RBW and average count, into one spectrum.  Per-Hz normalization makes a
white input continuous across band boundaries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy import fft as _fft

from .errors import (
    ConfigError,
    DomainError,
    GridMismatchError,
    InsufficientDataError,
)

#: Equivalent noise bandwidth of the periodic Hann taper, in bins.
HANN_ENBW_FACTOR = 1.5

#: Default fractional overlap between successive segments.
DEFAULT_OVERLAP = 0.5


class Band(NamedTuple):
    f_lo: float
    f_hi: float
    rbw_hz: float
    n_averages: int


@dataclass(frozen=True)
class WindowPlan:
    """Ordered, non-overlapping measurement bands."""

    bands: tuple[Band, ...]

    def __post_init__(self):
        object.__setattr__(self, "bands", tuple(Band(*b) for b in self.bands))
        prev_hi = 0.0
        for band in self.bands:
            if not band.rbw_hz > 0.0:
                raise DomainError(f"RBW must be positive in band {band}")
            if band.f_lo < band.rbw_hz:
                raise DomainError(
                    f"band lower edge {band.f_lo} Hz below RBW {band.rbw_hz} Hz"
                )
            if not band.f_lo < band.f_hi:
                raise DomainError(f"band edges must be ascending in {band}")
            if band.f_lo < prev_hi:
                raise DomainError("bands must be non-overlapping and ascending")
            if band.n_averages < 1:
                raise DomainError("n_averages must be >= 1")
            prev_hi = band.f_hi

    @property
    def max_frequency_hz(self) -> float:
        return self.bands[-1].f_hi

    def required_samples(self, fs: float, overlap: float = DEFAULT_OVERLAP) -> int:
        """Samples needed by the most demanding band."""
        return max(
            _segment_count_samples(
                segment_length_for_rbw(b.rbw_hz, fs), b.n_averages, overlap
            )
            for b in self.bands
        )

    def scaled(self, averages_scale: float) -> "WindowPlan":
        """Same bands with average counts scaled (ceil, at least 1)."""
        return WindowPlan(
            bands=tuple(
                Band(b.f_lo, b.f_hi, b.rbw_hz,
                     max(1, math.ceil(b.n_averages * averages_scale)))
                for b in self.bands
            )
        )


@dataclass(eq=False)
class SpectrumSegment:
    """One band's averaged PSD estimate.

    ``psd`` is one-sided power per Hz in vacuum-relative units (or dB
    values inside a dB-unit StitchedSpectrum); linear spectra are
    non-negative by construction.  ``floored`` marks bins clamped by dark
    subtraction (None when the segment never went through subtraction).
    """

    f_lo: float
    f_hi: float
    rbw_hz: float
    n_averages: int
    frequencies: np.ndarray
    psd: np.ndarray
    floored: np.ndarray | None = None

    def __post_init__(self):
        self.frequencies = np.asarray(self.frequencies, dtype=float)
        self.psd = np.asarray(self.psd, dtype=float)
        if self.frequencies.shape != self.psd.shape:
            raise GridMismatchError("frequencies and psd must have equal length")

    @property
    def bin_spacing_hz(self) -> float:
        if len(self.frequencies) < 2:
            return self.rbw_hz / HANN_ENBW_FACTOR
        return float(self.frequencies[1] - self.frequencies[0])


@dataclass(eq=False)
class StitchedSpectrum:
    """Ordered spectrum segments plus provenance of the analyzed record."""

    segments: list[SpectrumSegment]
    provenance: str = ""
    units: str = "rel_vacuum"  # or "db_rel_vacuum"

    def all_frequencies(self) -> np.ndarray:
        return np.concatenate([s.frequencies for s in self.segments])

    def all_values(self) -> np.ndarray:
        return np.concatenate([s.psd for s in self.segments])


def hann_window(n: int) -> np.ndarray:
    """Periodic Hann taper; its ENBW is exactly 1.5 bins."""
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)


def segment_length_for_rbw(rbw_hz: float, fs: float,
                           enbw_factor: float = HANN_ENBW_FACTOR) -> int:
    """Segment length whose taper ENBW equals the requested RBW."""
    if not rbw_hz > 0.0:
        raise DomainError(f"RBW must be positive, got {rbw_hz}")
    if not fs > 2.0 * rbw_hz:
        raise DomainError(f"sample rate {fs} Hz too low for RBW {rbw_hz} Hz")
    return int(round(enbw_factor * fs / rbw_hz))


def _segment_count_samples(n_seg: int, n_averages: int, overlap: float) -> int:
    hop = _hop(n_seg, overlap)
    return n_seg + (n_averages - 1) * hop


def _hop(n_seg: int, overlap: float) -> int:
    if not (0.0 <= overlap < 1.0):
        raise DomainError(f"overlap fraction must be in [0, 1), got {overlap}")
    return max(1, int(round(n_seg * (1.0 - overlap))))


def _pairwise_mean(periodograms) -> np.ndarray:
    """Mean with a fixed pairwise (binary-counter) reduction order.

    Bit-stable regardless of how segment periodograms were produced or
    scheduled; O(log K) temporaries.
    """
    stack: list[tuple[int, np.ndarray]] = []
    count = 0
    for p in periodograms:
        level = 0
        arr = p
        while stack and stack[-1][0] == level:
            _, prev = stack.pop()
            arr = prev + arr
            level += 1
        stack.append((level, arr))
        count += 1
    acc: np.ndarray | None = None
    for _, arr in reversed(stack):
        acc = arr if acc is None else arr + acc
    return acc / count


def averaged_psd(
    samples: np.ndarray,
    fs: float,
    rbw_hz: float,
    n_averages: int,
    overlap_fraction: float = DEFAULT_OVERLAP,
) -> SpectrumSegment:
    """Mean of ``n_averages`` Hann-tapered periodograms over the full range.

    Segments of length N = round(1.5 * fs / rbw) advance by
    N * (1 - overlap); each is mean-detrended, tapered and normalized to
    one-sided power per Hz (2 / (fs * sum(w^2)), DC and Nyquist bins not
    doubled), then averaged in the power domain.
    """
    samples = np.asarray(samples, dtype=float)
    if n_averages < 1:
        raise DomainError("n_averages must be >= 1")
    n_seg = segment_length_for_rbw(rbw_hz, fs)
    hop = _hop(n_seg, overlap_fraction)
    needed = _segment_count_samples(n_seg, n_averages, overlap_fraction)
    if samples.size < needed:
        raise InsufficientDataError(
            f"need {needed} samples for {n_averages} averages at RBW {rbw_hz} Hz "
            f"(segment length {n_seg}), have {samples.size}"
        )
    window = hann_window(n_seg)
    scale = 2.0 / (fs * np.sum(window * window))
    nyquist_bin = n_seg % 2 == 0

    def periodograms():
        for k in range(n_averages):
            seg = samples[k * hop:k * hop + n_seg]
            seg = seg - seg.mean()
            spec = _fft.rfft(seg * window)
            p = (spec.real * spec.real + spec.imag * spec.imag) * scale
            p[0] *= 0.5
            if nyquist_bin:
                p[-1] *= 0.5
            yield p

    psd = _pairwise_mean(periodograms())
    freqs = _fft.rfftfreq(n_seg, 1.0 / fs)
    actual_rbw = HANN_ENBW_FACTOR * fs / n_seg
    return SpectrumSegment(
        f_lo=0.0,
        f_hi=fs / 2.0,
        rbw_hz=actual_rbw,
        n_averages=n_averages,
        frequencies=freqs,
        psd=psd,
    )


def band_select(segment: SpectrumSegment, f_lo: float, f_hi: float) -> SpectrumSegment:
    """Restrict a segment to bins with f_lo <= f <= f_hi."""
    sel = (segment.frequencies >= f_lo) & (segment.frequencies <= f_hi)
    return SpectrumSegment(
        f_lo=f_lo,
        f_hi=f_hi,
        rbw_hz=segment.rbw_hz,
        n_averages=segment.n_averages,
        frequencies=segment.frequencies[sel],
        psd=segment.psd[sel],
        floored=None if segment.floored is None else segment.floored[sel],
    )


def run_plan(
    samples: np.ndarray,
    fs: float,
    plan: WindowPlan,
    provenance: str = "",
    overlap_fraction: float = DEFAULT_OVERLAP,
) -> StitchedSpectrum:
    """Estimate one SpectrumSegment per plan band and stitch them in order."""
    samples = np.asarray(samples, dtype=float)
    if plan.max_frequency_hz > fs / 2.0:
        raise ConfigError(
            f"plan reaches {plan.max_frequency_hz} Hz but Nyquist is {fs / 2.0} Hz"
        )
    segments = []
    for i, band in enumerate(plan.bands):
        try:
            full = averaged_psd(samples, fs, band.rbw_hz, band.n_averages,
                                overlap_fraction)
        except InsufficientDataError as exc:
            raise InsufficientDataError(
                f"band {i} ({band.f_lo}-{band.f_hi} Hz): {exc}"
            ) from exc
        segments.append(band_select(full, band.f_lo, band.f_hi))
    return StitchedSpectrum(segments=segments, provenance=provenance)


def _check_same_grid(a: SpectrumSegment, b: SpectrumSegment) -> None:
    if a.frequencies.shape != b.frequencies.shape or not np.array_equal(
        a.frequencies, b.frequencies
    ):
        raise GridMismatchError(
            f"segments do not share a bin grid "
            f"({a.f_lo}-{a.f_hi} Hz vs {b.f_lo}-{b.f_hi} Hz)"
        )


def to_db_rel_vacuum(
    spectrum: StitchedSpectrum,
    vacuum_ref: StitchedSpectrum | float,
) -> StitchedSpectrum:
    """Per-bin 10*log10(psd / reference).

    The reference is either a matching-grid spectrum or an analytic flat
    level (a positive number).
    """
    if spectrum.units != "rel_vacuum":
        raise DomainError("spectrum is already in dB")
    out_segments = []
    if isinstance(vacuum_ref, StitchedSpectrum):
        if len(vacuum_ref.segments) != len(spectrum.segments):
            raise GridMismatchError("reference has a different number of segments")
        refs: Sequence = vacuum_ref.segments
    else:
        level = float(vacuum_ref)
        if not level > 0.0:
            raise DomainError("analytic vacuum reference must be positive")
        refs = [level] * len(spectrum.segments)
    for seg, ref in zip(spectrum.segments, refs):
        if isinstance(ref, SpectrumSegment):
            _check_same_grid(seg, ref)
            ref_psd = ref.psd
            if np.any(ref_psd <= 0.0):
                raise DomainError("reference spectrum has non-positive bins")
        else:
            ref_psd = ref
        with np.errstate(divide="ignore"):
            db = 10.0 * np.log10(seg.psd / ref_psd)
        out_segments.append(
            SpectrumSegment(
                f_lo=seg.f_lo,
                f_hi=seg.f_hi,
                rbw_hz=seg.rbw_hz,
                n_averages=seg.n_averages,
                frequencies=seg.frequencies.copy(),
                psd=db,
                floored=None if seg.floored is None else seg.floored.copy(),
            )
        )
    return StitchedSpectrum(
        segments=out_segments,
        provenance=spectrum.provenance,
        units="db_rel_vacuum",
    )


def subtract_dark(
    signal: SpectrumSegment,
    dark: SpectrumSegment,
    floor_value: float | None = None,
) -> SpectrumSegment:
    """Per-bin power subtraction, clamping non-positive results.

    Bins where the dark estimate meets or exceeds the signal are clamped
    to ``floor_value`` (default: smallest positive difference times 1e-3)
    and flagged in ``floored``.
    """
    _check_same_grid(signal, dark)
    diff = signal.psd - dark.psd
    floored = diff <= 0.0
    if floor_value is None:
        positive = diff[~floored]
        floor_value = float(positive.min()) * 1e-3 if positive.size else 0.0
    out = np.where(floored, floor_value, diff)
    return SpectrumSegment(
        f_lo=signal.f_lo,
        f_hi=signal.f_hi,
        rbw_hz=signal.rbw_hz,
        n_averages=signal.n_averages,
        frequencies=signal.frequencies.copy(),
        psd=out,
        floored=floored,
    )


def subtract_dark_spectrum(
    signal: StitchedSpectrum,
    dark: StitchedSpectrum,
    floor_value: float | None = None,
) -> StitchedSpectrum:
    """Segment-wise :func:`subtract_dark` over a stitched spectrum."""
    if len(signal.segments) != len(dark.segments):
        raise GridMismatchError("signal and dark have different segment counts")
    return StitchedSpectrum(
        segments=[
            subtract_dark(s, d, floor_value)
            for s, d in zip(signal.segments, dark.segments)
        ],
        provenance=signal.provenance,
        units=signal.units,
    )


def n_floored(spectrum: StitchedSpectrum) -> int:
    return sum(
        int(seg.floored.sum()) for seg in spectrum.segments
        if seg.floored is not None
    )


def fig2_plan() -> WindowPlan:
    """Five-band vacuum-measurement plan (0.8 Hz - 3.2 kHz)."""
    return WindowPlan(bands=(
        Band(0.8, 3.2, 0.015625, 75),
        Band(10.0, 50.0, 0.25, 100),
        Band(50.0, 200.0, 1.0, 100),
        Band(200.0, 800.0, 2.0, 400),
        Band(800.0, 3200.0, 4.0, 400),
    ))


def fig3_plan() -> WindowPlan:
    """Five-band squeezing-measurement plan (1 Hz - 3.2 kHz)."""
    return WindowPlan(bands=(
        Band(1.0, 10.0, 0.0625, 30),
        Band(10.0, 50.0, 0.25, 100),
        Band(50.0, 200.0, 1.0, 100),
        Band(200.0, 800.0, 2.0, 400),
        Band(800.0, 3200.0, 4.0, 400),
    ))
