"""Retransmission block length optimisation around a calibrated operating point.

The procedure:

1. pick a base block ``dn_bas`` and an SNR giving ``P_-1 ≈ 0.5``, ``P_0 ≈ 0.25``;
2. estimate ``h``, ``g`` from the first three WERs and the error-floor mass
   ``theta`` (sum of WERs from the first one below 0.01);
3. scale the block by ``r`` and minimise ``phi(r) + theta / r`` where
   ``phi(r)`` is the stability sum of the scaled ``(h^r, g^(r^2))`` ladder;
4. use ``dn = round(r * dn_bas)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import wer
from .errors import ConvergenceError, DomainError, HarqError
from .exponent import ChannelParams
from .wer import MAX_TERMS, SUM_TOL, CodeFamilyGeometry, WerSeries

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class OptimizerInputs:
    p0_hat: float
    h_hat: float
    g_hat: float
    theta: float = 0.0
    dn_bas: int = 1
    r_bounds: tuple = (0.1, 8.0)

    def __post_init__(self):
        if not 0.0 < self.p0_hat <= 1.0:
            raise DomainError("p0_hat must be in (0, 1]")
        if not 0.0 < self.h_hat < 1.0:
            raise DomainError("h_hat must be in (0, 1)")
        if not 0.0 < self.g_hat <= 1.0:
            raise DomainError("g_hat must be in (0, 1]")
        if self.p0_hat / self.h_hat > 1.0:
            raise DomainError("implied p_minus1 = p0_hat / h_hat exceeds 1")
        if self.theta < 0:
            raise DomainError("theta must be non-negative")
        if self.dn_bas < 1:
            raise DomainError("dn_bas must be a positive integer")
        lo, hi = self.r_bounds
        if not 0.0 < lo < hi:
            raise DomainError("r_bounds must satisfy 0 < r_min < r_max")


@dataclass
class OptimizerResult:
    r_star: float
    dn_star: int
    objective_at_r_star: float
    at_bound: bool
    curve: list = field(default_factory=list)   # (r, phi, phi + theta / r)

    def to_dict(self) -> dict:
        return {
            "r_star": self.r_star,
            "dn_star": self.dn_star,
            "objective_at_r_star": self.objective_at_r_star,
            "at_bound": self.at_bound,
            "curve": [list(row) for row in self.curve],
        }


def golden_section(f: Callable[[float], float], a: float, b: float,
                   tol: float = 1e-4) -> tuple[float, float]:
    """Shrink ``[a, b]`` around a minimum of unimodal ``f`` to width ``<= tol``.

    Returns ``(x, f(x))`` for the best point evaluated.
    """
    a, b = min(a, b), max(a, b)
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    return (c, fc) if fc < fd else (d, fd)


def estimate_theta(series: WerSeries, floor_threshold: float = 0.01,
                   tol: float = SUM_TOL, max_terms: int = MAX_TERMS) -> float:
    """Error-floor mass: ``sum_{i >= j} P_i`` with ``j`` the first index below threshold."""
    if not 0.0 < floor_threshold < 1.0:
        raise DomainError("floor_threshold must be in (0, 1)")
    start, size = -1, 64
    while start + 1 < max_terms:
        vals = series.values(start, start + size)
        below = np.nonzero(vals < floor_threshold)[0]
        if below.size:
            j = start + int(below[0])
            lad = series.ladder(tol, max_terms)
            return float(np.sum(lad[j + 1:]))
        start += size
        size = min(size * 4, 1 << 16)
    raise ConvergenceError(f"series never drops below {floor_threshold} within {max_terms} terms")


def phi(r: float, inputs: OptimizerInputs, tol: float = SUM_TOL,
        max_terms: int = MAX_TERMS) -> float:
    """Stability sum of the ladder after scaling the block length by ``r``."""
    if not r > 0:
        raise DomainError(f"r must be positive, got {r!r}")
    p0, h, g = inputs.p0_hat, inputs.h_hat, inputs.g_hat
    log_h = r * math.log(h)
    log_g = r * r * math.log(g)
    total = 0.0
    n0, size = 0, 64
    while n0 < max_terms:
        n = np.arange(n0, n0 + size, dtype=float)
        terms = np.exp(n * log_h + 0.5 * n * (n + 1) * log_g)
        small = np.nonzero(terms < tol)[0]
        if small.size:
            total += float(np.sum(terms[: small[0]]))
            break
        total += float(np.sum(terms))
        n0 += size
        size = min(size * 4, 1 << 16)
    else:
        raise ConvergenceError(f"phi series does not decay at r={r}")
    return p0 * total + p0 * math.exp((r - 1.0) * math.log(g) - log_h)


def objective(r: float, inputs: OptimizerInputs) -> float:
    return phi(r, inputs) + inputs.theta / r


def scaled_block(r_star: float, dn_bas: int) -> int:
    """``round(r * dn_bas)`` with halves rounded up, at least 1."""
    if not r_star > 0 or dn_bas < 1:
        raise DomainError("need r_star > 0 and dn_bas >= 1")
    return max(1, math.floor(r_star * dn_bas + 0.5))


def optimize_r(inputs: OptimizerInputs, grid_step: float = 0.01,
               tol: float = 1e-4) -> OptimizerResult:
    """Coarse grid over ``r_bounds`` then golden-section inside the best cell pair."""
    lo, hi = inputs.r_bounds
    n = max(2, int(math.ceil((hi - lo) / grid_step)) + 1)
    grid = np.linspace(lo, hi, n)
    curve = []
    values = np.empty(n)
    for k, r in enumerate(grid):
        try:
            ph = phi(float(r), inputs)
            val = ph + inputs.theta / r
        except (ConvergenceError, OverflowError):
            ph = val = math.inf
        values[k] = val if math.isfinite(val) else math.inf
        curve.append((float(r), ph, val))
    if not np.any(np.isfinite(values)):
        raise HarqError("objective is not finite anywhere on r_bounds")
    k = int(np.argmin(values))
    a = float(grid[max(k - 1, 0)])
    b = float(grid[min(k + 1, n - 1)])
    r_star, f_star = golden_section(lambda r: objective(r, inputs), a, b, tol)
    if values[k] < f_star:
        r_star, f_star = float(grid[k]), float(values[k])
    at_bound = (k == 0 or k == n - 1) and (
        abs(r_star - lo) <= 2 * tol or abs(r_star - hi) <= 2 * tol)
    return OptimizerResult(
        r_star=r_star,
        dn_star=scaled_block(r_star, inputs.dn_bas),
        objective_at_r_star=f_star,
        at_bound=at_bound,
        curve=curve,
    )


def inputs_from_series(series: WerSeries, dn_bas: int = 1, r_bounds=(0.1, 8.0),
                       floor_threshold: float = 0.01) -> OptimizerInputs:
    """Estimate ``(P_0, h, g, theta)`` from a measured or modelled ladder."""
    p_m1, p0, p1 = series.p(-1), series.p(0), series.p(1)
    h, g = wer.estimate_ratios(p_m1, p0, p1)
    theta = estimate_theta(series, floor_threshold)
    return OptimizerInputs(p0_hat=p0, h_hat=h, g_hat=g, theta=theta,
                           dn_bas=dn_bas, r_bounds=tuple(r_bounds))


@dataclass(frozen=True)
class Calibration:
    channel: ChannelParams
    p_minus1: float
    p0: float


def _pair(geometry: CodeFamilyGeometry, log_a: float) -> tuple[float, float]:
    ch = ChannelParams.from_linear(math.exp(log_a))
    try:
        s = wer.AnalyticSeries(geometry, ch)
    except DomainError:
        return 1.0, 1.0
    return s.p(-1), s.p(0)


def calibrate_operating_point(geometry: CodeFamilyGeometry,
                              targets: tuple = (0.5, 0.25),
                              a_range: tuple = (1e-4, 1e3)) -> Calibration:
    """SNR whose analytic ``(P_-1, P_0)`` best matches ``targets`` in least squares.

    Bisection on ``log A`` puts ``P_-1`` on its target, then a golden-section
    search over a bracket around it refines the joint objective.
    """
    if geometry.dn < 1:
        raise DomainError("calibration needs dn >= 1")
    t_m1, t_0 = targets
    lo, hi = math.log(a_range[0]), math.log(a_range[1])

    def cost(log_a: float) -> float:
        p_m1, p0 = _pair(geometry, log_a)
        return (p_m1 - t_m1) ** 2 + (p0 - t_0) ** 2

    # P_-1 decreases with SNR
    a, b = lo, hi
    for _ in range(200):
        mid = 0.5 * (a + b)
        if _pair(geometry, mid)[0] > t_m1:
            a = mid
        else:
            b = mid
        if b - a < 1e-12:
            break
    centre = 0.5 * (a + b)
    span = 0.5
    best, fbest = golden_section(cost, max(lo, centre - span), min(hi, centre + span), 1e-10)
    if cost(centre) < fbest:
        best = centre
    p_m1, p0 = _pair(geometry, best)
    if abs(p_m1 - t_m1) > 0.2 or abs(p0 - t_0) > 0.2:
        raise HarqError(
            f"no SNR brings (P_-1, P_0) within 0.2 of {targets}; best {(p_m1, p0)}")
    return Calibration(ChannelParams.from_linear(math.exp(best)), p_m1, p0)
