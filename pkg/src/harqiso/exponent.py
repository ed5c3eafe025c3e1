"""Random coding error exponent for a channel described by one SNR value.

All rates are in nats per coded symbol. The exponent curve is traced
parametrically in ``rho`` in [0, 1]:

    beta   = (1 - x + sqrt((1 - x)^2 + 4A/(1 + rho)^2)) / 2,   x = A/(1 + rho)
    E_sp   = ln(beta) + (1 + rho)(1 - beta)
    R_nat  = ln(beta + x)
    E0     = E_sp + rho * R_nat

``rho = 0`` gives the capacity, ``rho = 1`` the critical rate and the cutoff
rate ``R0 = E0(1)``. Below the critical rate the exponent is the straight
line ``R0 - R``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError

LN2 = math.log(2.0)

# bisection stops when the rate residual falls below this
_RATE_TOL = 1e-12


@dataclass(frozen=True)
class ChannelParams:
    """Per-coded-symbol power SNR, kept in linear and dB form."""

    a_linear: float
    a_db: float

    def __post_init__(self):
        if not (self.a_linear > 0 and math.isfinite(self.a_linear)):
            raise DomainError(f"SNR must be positive and finite, got {self.a_linear!r}")

    @classmethod
    def from_linear(cls, a_linear: float) -> "ChannelParams":
        a_linear = float(a_linear)
        if not a_linear > 0:
            raise DomainError(f"SNR must be positive, got {a_linear!r}")
        return cls(a_linear, 10.0 * math.log10(a_linear))

    @classmethod
    def from_db(cls, a_db: float) -> "ChannelParams":
        a_db = float(a_db)
        if not math.isfinite(a_db):
            raise DomainError(f"SNR in dB must be finite, got {a_db!r}")
        return cls(10.0 ** (a_db / 10.0), a_db)


@dataclass(frozen=True)
class ExponentPoint:
    rho: float
    beta: float
    e_sp: float
    r_nat: float
    e0: float


@dataclass(frozen=True)
class ChannelLandmarks:
    r0: float
    r_crit: float
    capacity: float


def _check_rho(rho: float) -> float:
    rho = float(rho)
    if not 0.0 <= rho <= 1.0:
        raise DomainError(f"rho must lie in [0, 1], got {rho!r}")
    return rho


def beta(rho: float, channel: ChannelParams) -> float:
    rho = _check_rho(rho)
    a = channel.a_linear
    x = a / (1.0 + rho)
    return 0.5 * (1.0 - x + math.sqrt((1.0 - x) ** 2 + 4.0 * a / (1.0 + rho) ** 2))


def esp_point(rho: float, channel: ChannelParams) -> ExponentPoint:
    """Evaluate the parametric exponent curve at ``rho``."""
    b = beta(rho, channel)
    arg = b + channel.a_linear / (1.0 + rho)
    if not arg > 0:
        raise DomainError(f"rate argument non-positive at rho={rho}")
    r_nat = math.log(arg)
    # beta == 1 at rho == 0 up to rounding; pin E_sp to exactly zero there
    e_sp = 0.0 if rho == 0.0 else math.log(b) + (1.0 + rho) * (1.0 - b)
    return ExponentPoint(rho=rho, beta=b, e_sp=e_sp, r_nat=r_nat, e0=e_sp + rho * r_nat)


def landmarks(channel: ChannelParams) -> ChannelLandmarks:
    top = esp_point(1.0, channel)
    capacity = math.log1p(channel.a_linear)
    return ChannelLandmarks(r0=top.e0, r_crit=top.r_nat, capacity=capacity)


def rho_for_rate(r_nat: float, channel: ChannelParams) -> float:
    """Invert ``R_nat(rho)``; rates at or below the critical rate map to 1.

    ``R_nat`` is strictly decreasing in ``rho``, so bisection has a unique root.
    """
    lm = landmarks(channel)
    if not 0.0 <= r_nat < lm.capacity:
        raise DomainError(
            f"rate {r_nat!r} nats outside [0, capacity={lm.capacity!r})")
    if r_nat <= lm.r_crit:
        return 1.0
    lo, hi = 0.0, 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        r_mid = esp_point(mid, channel).r_nat
        if abs(r_mid - r_nat) <= _RATE_TOL:
            return mid
        if r_mid > r_nat:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-16:
            break
    return 0.5 * (lo + hi)


def error_exponent(r_nat: float, channel: ChannelParams) -> float:
    """Random coding exponent E(R) in nats."""
    r_nat = float(r_nat)
    lm = landmarks(channel)
    if not 0.0 <= r_nat < lm.capacity:
        raise DomainError(
            f"rate {r_nat!r} nats outside [0, capacity={lm.capacity!r})")
    if r_nat <= lm.r_crit:
        return lm.r0 - r_nat
    return esp_point(rho_for_rate(r_nat, channel), channel).e_sp


def error_exponent_maxform(r_nat: float, channel: ChannelParams, n_grid: int = 1_000_001) -> float:
    """Grid maximisation of ``-rho R + E0(rho)``; slow reference path."""
    import numpy as np

    rho = np.linspace(0.0, 1.0, n_grid)
    a = channel.a_linear
    x = a / (1.0 + rho)
    b = 0.5 * (1.0 - x + np.sqrt((1.0 - x) ** 2 + 4.0 * a / (1.0 + rho) ** 2))
    e0 = np.log(b) + (1.0 + rho) * (1.0 - b) + rho * np.log(b + x)
    return float(np.max(e0 - rho * r_nat))


def e0_upper(r_nat: float, channel: ChannelParams) -> float:
    """E0 at the rho matching ``r_nat``; equals R0 in the straight-line region."""
    return esp_point(rho_for_rate(r_nat, channel), channel).e0


def wer_bound(n_coded: int, r_nat: float, channel: ChannelParams) -> float:
    if int(n_coded) != n_coded or n_coded < 1:
        raise DomainError(f"block length must be a positive integer, got {n_coded!r}")
    return min(1.0, math.exp(-n_coded * error_exponent(r_nat, channel)))


def binary_to_nats(rate_bits: float) -> float:
    return rate_bits * LN2
