"""Seeded generation of balanced-homodyne difference-photocurrent records.

Units convention
----------------
Samples are normalized photocurrent units chosen so that the one-sided
PSD of the vacuum quantum noise at the reference LO power equals 1
("vacuum-relative" units, 0 dB).  Consequences:

* quantum noise at LO power P has flat PSD (P / P_ref) * V(theta),
* parasitic scattered-light noise beats against the LO like the vacuum
  does, so its vacuum-relative PSD is also scaled by (P / P_ref),
* electronic dark noise and mains pickup are independent of LO power and
  enter with their absolute (= vacuum-relative at P_ref) PSD.

A white target PSD S corresponds to sample variance S * fs / 2.

Determinism
-----------
Every stochastic component draws from its own generator seeded from
``(scenario seed, component tag)``, so composed output is bit-identical
for a given scenario regardless of which components are evaluated first
or how generation is scheduled.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import fft as _fft

from .errors import ConfigError, DomainError
from .noise_models import (
    LossBudget,
    OpoParams,
    quadrature_pair,
    quadrature_variance,
    total_loss,
)

#: Default LO power normalization reference, watts.
LO_POWER_REF_W = 464e-6

#: Default sample rate: >= 2 x 3.2 kHz with margin, power of two for the FFT.
DEFAULT_SAMPLE_RATE_HZ = 16384.0

#: Samples dropped from each edge of a shaped-noise block to suppress
#: circular-convolution artifacts.
COLORED_GUARD_SAMPLES = 65536

# Sub-seed tags; values are arbitrary but frozen (part of the output contract).
_COMPONENT_TAGS = {
    "quantum": 1,
    "dark": 2,
    "parasitic": 3,
    "dark_reference": 4,
}


@dataclass(frozen=True)
class HomodyneConfig:
    """LO power, measured quadrature angle and fringe visibility.

    ``visibility`` is carried for bookkeeping; its physical effect on the
    detected squeezing belongs in the loss budget as the squared value.
    """

    lo_power_w: float
    lo_power_ref_w: float = LO_POWER_REF_W
    theta: float = 0.0
    visibility: float = 1.0

    def __post_init__(self):
        if not self.lo_power_w > 0.0:
            raise DomainError(f"LO power must be positive, got {self.lo_power_w}")
        if not self.lo_power_ref_w > 0.0:
            raise DomainError("LO reference power must be positive")
        if not (0.0 < self.visibility <= 1.0):
            raise DomainError(f"visibility must be in (0, 1], got {self.visibility}")

    @property
    def power_ratio(self) -> float:
        return self.lo_power_w / self.lo_power_ref_w


@dataclass(frozen=True)
class DarkNoiseModel:
    """Electronic dark noise: flat floor plus a 1/f rise below ``knee_hz``.

    PSD(f) = floor * (1 + knee / f), in vacuum-relative units at the
    reference LO power; independent of the actual LO power.
    """

    floor_rel_vacuum: float
    knee_hz: float

    def __post_init__(self):
        if self.floor_rel_vacuum < 0.0:
            raise DomainError("dark floor must be >= 0")
        if self.knee_hz < 0.0:
            raise DomainError("dark knee frequency must be >= 0")

    @property
    def is_degenerate(self) -> bool:
        """True for the zero-dark model produced by a degenerate calibration."""
        return self.floor_rel_vacuum == 0.0

    def psd(self, f_hz: np.ndarray | float) -> np.ndarray | float:
        f = np.asarray(f_hz, dtype=float)
        out = self.floor_rel_vacuum * (1.0 + self.knee_hz / f)
        return float(out) if np.isscalar(f_hz) else out


@dataclass(frozen=True)
class MainsModel:
    """Deterministic mains pickup: harmonics of the line frequency.

    ``harmonics`` is a tuple of (order, amplitude, phase) with distinct
    positive integer orders; amplitudes are in normalized photocurrent
    units, phases in radians.
    """

    fundamental_hz: float = 50.0
    harmonics: tuple[tuple[int, float, float], ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "harmonics", tuple(tuple(h) for h in self.harmonics))
        if not self.fundamental_hz > 0.0:
            raise DomainError("mains fundamental must be positive")
        orders = [h[0] for h in self.harmonics]
        if any(n < 1 or n != int(n) for n in orders):
            raise DomainError("harmonic orders must be positive integers")
        if len(set(orders)) != len(orders):
            raise DomainError("harmonic orders must be distinct")


@dataclass(frozen=True)
class ParasiticModel:
    """Scattered-light interference noise with a power-law spectrum.

    PSD(f) = psd_at_1hz * max(f, f_min)^(-alpha), in vacuum-relative
    units.  The contribution scales with LO power exactly as the vacuum
    noise does, so expressed relative to vacuum it is power-independent.
    """

    psd_at_1hz_rel_vacuum: float
    exponent_alpha: float = 2.0
    f_min_hz: float = 0.1

    def __post_init__(self):
        if self.psd_at_1hz_rel_vacuum < 0.0:
            raise DomainError("parasitic PSD must be >= 0")
        if self.exponent_alpha < 0.0:
            raise DomainError("parasitic exponent must be >= 0")
        if not self.f_min_hz > 0.0:
            raise DomainError("parasitic f_min must be positive")

    def psd(self, f_hz: np.ndarray | float) -> np.ndarray | float:
        f = np.maximum(np.asarray(f_hz, dtype=float), self.f_min_hz)
        out = self.psd_at_1hz_rel_vacuum * f ** (-self.exponent_alpha)
        return float(out) if np.isscalar(f_hz) else out


@dataclass(frozen=True)
class SimScenario:
    """Complete generative description of one simulated run.

    Absent ``opo`` means a plain vacuum state at the signal port.
    ``lo_blocked`` models a dark-reference measurement (LO shutter
    closed): quantum and parasitic contributions vanish, electronics
    remain.
    """

    homodyne: HomodyneConfig
    opo: OpoParams | None = None
    loss_budget: LossBudget | None = None
    dark: DarkNoiseModel | None = None
    mains: MainsModel | None = None
    parasitic: ParasiticModel | None = None
    sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ
    duration_s: float = 1.0
    seed: int = 0
    lo_blocked: bool = False

    def __post_init__(self):
        if not self.sample_rate_hz > 0.0:
            raise ConfigError("sample rate must be positive")
        if not self.duration_s > 0.0:
            raise ConfigError("duration must be positive")
        if (self.opo is None) != (self.loss_budget is None):
            raise ConfigError("opo and loss_budget must be given together")
        if self.opo is not None:
            # Flat-spectrum assumption must hold over the whole synthesized band.
            self.opo.check_band(self.sample_rate_hz / 2.0)

    @property
    def n_samples(self) -> int:
        return int(round(self.duration_s * self.sample_rate_hz))


def scenario_variance(scenario: SimScenario) -> float:
    """Quadrature variance V(theta) of the quantum component (1 for vacuum)."""
    if scenario.opo is None:
        return 1.0
    loss = total_loss(scenario.loss_budget)
    pair = quadrature_pair(scenario.opo, loss)
    return quadrature_variance(pair, scenario.homodyne.theta)


def scenario_to_dict(scenario: SimScenario) -> dict:
    """JSON-ready dict; key names carry explicit unit suffixes."""
    d: dict = {
        "lo_power_w": scenario.homodyne.lo_power_w,
        "lo_power_ref_w": scenario.homodyne.lo_power_ref_w,
        "theta_rad": scenario.homodyne.theta,
        "visibility": scenario.homodyne.visibility,
        "sample_rate_hz": scenario.sample_rate_hz,
        "duration_s": scenario.duration_s,
        "seed": int(scenario.seed),
        "lo_blocked": bool(scenario.lo_blocked),
    }
    if scenario.opo is not None:
        d["opo"] = {
            "gain": scenario.opo.gain,
            "cavity_linewidth_hz": scenario.opo.cavity_linewidth_hz,
            "pump_power_mw": scenario.opo.pump_power_mw,
        }
        d["loss_budget"] = [[name, eta] for name, eta in scenario.loss_budget.entries]
    if scenario.dark is not None:
        d["dark"] = {
            "floor_rel_vacuum": scenario.dark.floor_rel_vacuum,
            "knee_hz": scenario.dark.knee_hz,
        }
    if scenario.mains is not None:
        d["mains"] = {
            "fundamental_hz": scenario.mains.fundamental_hz,
            "harmonics": [[n, a, p] for n, a, p in scenario.mains.harmonics],
        }
    if scenario.parasitic is not None:
        d["parasitic"] = {
            "psd_at_1hz_rel_vacuum": scenario.parasitic.psd_at_1hz_rel_vacuum,
            "exponent_alpha": scenario.parasitic.exponent_alpha,
            "f_min_hz": scenario.parasitic.f_min_hz,
        }
    return d


def scenario_from_dict(d: dict) -> SimScenario:
    try:
        homodyne = HomodyneConfig(
            lo_power_w=float(d["lo_power_w"]),
            lo_power_ref_w=float(d.get("lo_power_ref_w", LO_POWER_REF_W)),
            theta=float(d.get("theta_rad", 0.0)),
            visibility=float(d.get("visibility", 1.0)),
        )
        opo = None
        budget = None
        if d.get("opo") is not None:
            o = d["opo"]
            opo = OpoParams(
                gain=float(o["gain"]),
                cavity_linewidth_hz=float(o.get("cavity_linewidth_hz", 27e6)),
                pump_power_mw=o.get("pump_power_mw"),
            )
            budget = LossBudget(
                entries=tuple(
                    (str(name), float(eta)) for name, eta in d["loss_budget"]
                )
            )
        dark = None
        if d.get("dark") is not None:
            dark = DarkNoiseModel(
                floor_rel_vacuum=float(d["dark"]["floor_rel_vacuum"]),
                knee_hz=float(d["dark"]["knee_hz"]),
            )
        mains = None
        if d.get("mains") is not None:
            mains = MainsModel(
                fundamental_hz=float(d["mains"]["fundamental_hz"]),
                harmonics=tuple(
                    (int(n), float(a), float(p))
                    for n, a, p in d["mains"]["harmonics"]
                ),
            )
        parasitic = None
        if d.get("parasitic") is not None:
            p = d["parasitic"]
            parasitic = ParasiticModel(
                psd_at_1hz_rel_vacuum=float(p["psd_at_1hz_rel_vacuum"]),
                exponent_alpha=float(p.get("exponent_alpha", 2.0)),
                f_min_hz=float(p.get("f_min_hz", 0.1)),
            )
        return SimScenario(
            homodyne=homodyne,
            opo=opo,
            loss_budget=budget,
            dark=dark,
            mains=mains,
            parasitic=parasitic,
            sample_rate_hz=float(d.get("sample_rate_hz", DEFAULT_SAMPLE_RATE_HZ)),
            duration_s=float(d["duration_s"]),
            seed=int(d.get("seed", 0)),
            lo_blocked=bool(d.get("lo_blocked", False)),
        )
    except KeyError as exc:
        raise ConfigError(f"scenario is missing required key {exc}") from exc


def scenario_digest(scenario: SimScenario) -> str:
    """Short stable hash identifying scenario + seed."""
    canonical = json.dumps(scenario_to_dict(scenario), sort_keys=True)
    return hashlib.sha256(canonical.encode()).hexdigest()[:16]


def _component_rng(seed: int, tag: str) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([_COMPONENT_TAGS[tag], int(seed)]))


def _colored_gaussian(
    psd_fn: Callable[[np.ndarray], np.ndarray],
    fs: float,
    n: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Gaussian noise with one-sided PSD ``psd_fn(f)``.

    White Gaussian noise is shaped in the frequency domain by the square
    root of the target PSD over one full-length block; guard samples at
    the block edges absorb circular-convolution wrap-around.  A unit-
    variance white input has one-sided PSD 2/fs, so the shaping amplitude
    is sqrt(psd * fs / 2).
    """
    if n == 0:
        return np.zeros(0)
    guard = COLORED_GUARD_SAMPLES
    m = _fft.next_fast_len(n + 2 * guard)
    white = rng.standard_normal(m)
    spec = _fft.rfft(white)
    f = _fft.rfftfreq(m, 1.0 / fs)
    amp = np.empty_like(f)
    amp[1:] = np.sqrt(psd_fn(f[1:]) * fs / 2.0)
    amp[0] = 0.0  # zero-mean output
    out = _fft.irfft(spec * amp, n=m)
    return out[guard:guard + n]


def synth_quantum_noise(scenario: SimScenario, n_samples: int) -> np.ndarray:
    """Quantum (vacuum or squeezed) noise of the difference photocurrent.

    White, zero-mean Gaussian; one-sided PSD (P / P_ref) * V(theta) in
    vacuum-relative units.  Returns zeros when the LO is blocked.
    """
    if scenario.lo_blocked:
        return np.zeros(n_samples)
    level = scenario.homodyne.power_ratio * scenario_variance(scenario)
    std = math.sqrt(level * scenario.sample_rate_hz / 2.0)
    rng = _component_rng(scenario.seed, "quantum")
    return rng.standard_normal(n_samples) * std


def synth_dark(model: DarkNoiseModel, fs: float, n: int, seed: int) -> np.ndarray:
    """Electronic dark noise record; PSD floor * (1 + knee/f)."""
    if model.floor_rel_vacuum == 0.0:
        return np.zeros(n)
    rng = np.random.default_rng(np.random.SeedSequence([_COMPONENT_TAGS["dark"], int(seed)]))
    return _colored_gaussian(model.psd, fs, n, rng)


def synth_mains(model: MainsModel, fs: float, n: int) -> np.ndarray:
    """Deterministic sum of mains-harmonic sinusoids."""
    for order, _, _ in model.harmonics:
        f = order * model.fundamental_hz
        if f >= fs / 2.0:
            raise ConfigError(
                f"mains harmonic {order} at {f} Hz aliases at fs = {fs} Hz"
            )
    t = np.arange(n) / fs
    out = np.zeros(n)
    for order, amplitude, phase in model.harmonics:
        out += amplitude * np.cos(2.0 * np.pi * order * model.fundamental_hz * t + phase)
    return out


def synth_parasitic(model: ParasiticModel, fs: float, n: int, seed: int) -> np.ndarray:
    """Scattered-light noise record in vacuum-relative units.

    The caller (``compose_scenario``) applies the sqrt(P / P_ref)
    amplitude scaling that converts to absolute normalized units.
    """
    if model.psd_at_1hz_rel_vacuum == 0.0:
        return np.zeros(n)
    rng = np.random.default_rng(
        np.random.SeedSequence([_COMPONENT_TAGS["parasitic"], int(seed)])
    )
    return _colored_gaussian(model.psd, fs, n, rng)


def compose_scenario(scenario: SimScenario) -> np.ndarray:
    """Sum of the independently seeded component records for a scenario."""
    n = scenario.n_samples
    fs = scenario.sample_rate_hz
    out = synth_quantum_noise(scenario, n)
    if scenario.dark is not None:
        out = out + synth_dark(scenario.dark, fs, n, scenario.seed)
    if scenario.mains is not None:
        out = out + synth_mains(scenario.mains, fs, n)
    if scenario.parasitic is not None and not scenario.lo_blocked:
        amp = math.sqrt(scenario.homodyne.power_ratio)
        out = out + amp * synth_parasitic(scenario.parasitic, fs, n, scenario.seed)
    return out
