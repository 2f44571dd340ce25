"""Closed-form quadrature-variance model of a lossy sub-threshold OPO.

All variances are dimensionless, normalized so that the vacuum state has
unit variance (0 dB).  A parametric gain g deamplifies one quadrature and
complementarily amplifies the orthogonal one; a total optical loss l
admixes vacuum:

    V_sq  = l + (1 - l) / g
    V_anti = l + (1 - l) * g

The model is frequency-flat and is only valid well inside the OPO cavity
linewidth; band edges are checked against ``flat_band_limit_hz`` instead
of extrapolating with cavity dynamics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import ConfigError, DomainError

#: Fraction of the cavity linewidth below which the spectrum is treated as flat.
FLAT_BAND_FRACTION = 1e-3


@dataclass(frozen=True)
class OpoParams:
    """Parametric gain and cavity linewidth of the squeezer.

    ``pump_power_mw`` is an annotation only; no formula consumes it.
    """

    gain: float
    cavity_linewidth_hz: float = 27e6
    pump_power_mw: float | None = None

    def __post_init__(self):
        if not self.gain >= 1.0:
            raise DomainError(f"parametric gain must be >= 1, got {self.gain}")
        if not self.cavity_linewidth_hz > 0.0:
            raise DomainError(
                f"cavity linewidth must be positive, got {self.cavity_linewidth_hz}"
            )

    @property
    def flat_band_limit_hz(self) -> float:
        """Highest frequency at which the flat-spectrum model is trusted."""
        return FLAT_BAND_FRACTION * self.cavity_linewidth_hz

    def check_band(self, f_hi_hz: float) -> None:
        """Reject analysis bands that leave the flat-spectrum regime."""
        if f_hi_hz > self.flat_band_limit_hz:
            raise ConfigError(
                f"band edge {f_hi_hz} Hz exceeds flat-spectrum limit "
                f"{self.flat_band_limit_hz} Hz ({FLAT_BAND_FRACTION} x linewidth)"
            )


@dataclass(frozen=True)
class LossBudget:
    """Ordered chain of named efficiencies.

    Each entry is ``(name, efficiency)`` with efficiency in (0, 1].  By
    convention the chain includes escape efficiency, propagation
    efficiency, the squared fringe visibility and the photodiode quantum
    efficiency.  Fringe visibility enters squared so the composition rule
    stays a plain product; see :func:`visibility_efficiency`.
    """

    entries: tuple[tuple[str, float], ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(tuple(e) for e in self.entries))
        for name, eta in self.entries:
            if not (0.0 < eta <= 1.0):
                raise DomainError(
                    f"efficiency {name!r} = {eta} outside (0, 1]"
                )


@dataclass(frozen=True)
class QuadraturePair:
    """Variances of the squeezed and antisqueezed quadratures (vacuum = 1)."""

    v_squeezed: float
    v_antisqueezed: float

    def __post_init__(self):
        if not (self.v_squeezed > 0.0 and self.v_antisqueezed > 0.0):
            raise DomainError("quadrature variances must be positive")


@dataclass(frozen=True)
class ValueInterval:
    """Ordered (lo, nominal, hi) triple used for uncertainty bookkeeping."""

    lo: float
    nominal: float
    hi: float

    def __post_init__(self):
        if not (self.lo <= self.nominal <= self.hi):
            raise DomainError(
                f"interval must satisfy lo <= nominal <= hi, got "
                f"({self.lo}, {self.nominal}, {self.hi})"
            )

    def contains(self, value: float) -> bool:
        return self.lo <= value <= self.hi


def visibility_efficiency(visibility: float) -> float:
    """Detection efficiency of an imperfect mode overlap: visibility squared."""
    if not (0.0 < visibility <= 1.0):
        raise DomainError(f"visibility must be in (0, 1], got {visibility}")
    return visibility * visibility


def total_loss(budget: LossBudget) -> float:
    """Total loss l = 1 - product of efficiencies.  Empty chain -> 0."""
    eta = 1.0
    for _, e in budget.entries:
        eta *= e
    return 1.0 - eta


def _check_gain_loss(gain: float, loss: float) -> None:
    if not gain >= 1.0:
        raise DomainError(f"gain must be >= 1, got {gain}")
    if not (0.0 <= loss <= 1.0):
        raise DomainError(f"loss must be in [0, 1], got {loss}")


def squeezed_variance(opo: OpoParams, loss: float) -> float:
    """Variance of the deamplified quadrature: l + (1 - l)/g."""
    _check_gain_loss(opo.gain, loss)
    return loss + (1.0 - loss) / opo.gain


def antisqueezed_variance(opo: OpoParams, loss: float) -> float:
    """Variance of the complementarily amplified quadrature: l + (1 - l)*g."""
    _check_gain_loss(opo.gain, loss)
    return loss + (1.0 - loss) * opo.gain


def quadrature_pair(opo: OpoParams, loss: float) -> QuadraturePair:
    return QuadraturePair(
        v_squeezed=squeezed_variance(opo, loss),
        v_antisqueezed=antisqueezed_variance(opo, loss),
    )


def quadrature_variance(pair: QuadraturePair, theta: float) -> float:
    """Variance measured at LO phase theta: V1 cos^2(theta) + V2 sin^2(theta)."""
    c = math.cos(theta)
    s = math.sin(theta)
    return pair.v_squeezed * c * c + pair.v_antisqueezed * s * s


def variance_to_db(variance: float) -> float:
    """Power dB relative to vacuum; vacuum (1.0) maps to 0 dB."""
    if not variance > 0.0:
        raise DomainError(f"variance must be positive, got {variance}")
    return 10.0 * math.log10(variance)


def db_to_variance(db: float) -> float:
    """Inverse of :func:`variance_to_db`."""
    return 10.0 ** (db / 10.0)


def squeezing_interval(gain: ValueInterval, loss: ValueInterval) -> ValueInterval:
    """Squeezing level in dB with uncertainty propagated by corner evaluation.

    -10 log10(l + (1-l)/g) is monotone in both arguments on the domain
    (increasing in g, decreasing in l), so the extrema over the (g, l)
    rectangle sit at the corners.
    """

    def level_db(g: float, l: float) -> float:
        return -variance_to_db(squeezed_variance(OpoParams(gain=g), l))

    corners = [
        level_db(g, l)
        for g in (gain.lo, gain.hi)
        for l in (loss.lo, loss.hi)
    ]
    return ValueInterval(
        lo=min(corners),
        nominal=level_db(gain.nominal, loss.nominal),
        hi=max(corners),
    )
