"""Retransmission queue: departure time, service rate, stability, optima.

A packet whose normal-channel decode fails joins an FCFS queue and receives
one retransmission group per slot until it decodes. With nested failures
the number of groups a queued packet needs, ``S``, satisfies
``P(S > k) = P_(k-1) / P_-1``, so

    E[S] = sum_{i>=0} (P_(i-1) - P_i)(i + 1) / P_-1 = sum_{i>=-1} P_i / P_-1

and the queue is stationary iff ``lambda E[S] < 1`` with ``lambda = P_-1``.

With ``a`` servers sharing the retransmission channel the ladder is given per
subblock (one ``1/a`` share of a group), packets are spread evenly over the
servers, and the condition becomes ``sum_{i>=-1} P_i < a``.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DomainError
from .wer import MAX_TERMS, SUM_TOL, WerSeries


@dataclass(frozen=True)
class StabilityReport:
    lam: float
    mu: float
    t_out: float
    stability_sum: float
    servers: int
    stable: bool
    margin: float

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        return {k: d[k] for k in
                ("lambda", "mu", "t_out", "stability_sum", "servers", "stable", "margin")}


@dataclass(frozen=True)
class DesignPoint:
    k0_budget: float
    servers: int
    h_star: float
    p_minus1_star: float       # per server
    p_minus1_aggregate: float
    p0_star_aggregate: float

    def to_dict(self) -> dict:
        return asdict(self)


def _check_servers(servers: int) -> int:
    if int(servers) != servers or servers < 1:
        raise DomainError(f"servers must be a positive integer, got {servers!r}")
    return int(servers)


def _weighted_terms(ladder: np.ndarray) -> np.ndarray:
    """``(P_(i-1) - P_i)(i + 1)`` for ``i = 0 .. n``, with ``P_(n+1) = 0``."""
    nxt = np.append(ladder[1:], 0.0)
    return (ladder - nxt) * np.arange(1, ladder.size + 1)


def departure_time(series: WerSeries, m: int) -> float:
    """Mean number of retransmission slots for packets decoded by ``C_m``."""
    if m < 0:
        raise DomainError(f"m must be >= 0, got {m}")
    p = series.values(-1, m + 1)
    denom = p[0] - p[-1]
    if not denom > 0:
        raise DomainError(f"p(-1) - p({m}) must be positive, got {denom!r}")
    terms = (p[:-1] - p[1:]) * np.arange(1, m + 2)
    return float(np.sum(terms) / denom)


def _retx_sum(series: WerSeries, tol: float, max_terms: int) -> float:
    return float(np.sum(_weighted_terms(series.ladder(tol, max_terms))))


def service_rate(series: WerSeries, tol: float = SUM_TOL, max_terms: int = MAX_TERMS) -> float:
    """Queue service rate ``mu = P_-1 / sum_i (P_(i-1) - P_i)(i + 1)``."""
    p_minus1 = series.p(-1)
    if not p_minus1 > 0:
        raise DomainError("p(-1) must be positive")
    return p_minus1 / _retx_sum(series, tol, max_terms)


def stability_check(series: WerSeries, servers: int = 1,
                    tol: float = SUM_TOL, max_terms: int = MAX_TERMS) -> StabilityReport:
    servers = _check_servers(servers)
    ladder = series.ladder(tol, max_terms)
    total = float(np.sum(ladder))
    retx = float(np.sum(_weighted_terms(ladder)))
    lam = float(ladder[0]) if ladder.size else series.p(-1)
    mu = lam / retx if retx > 0 else math.inf
    t_out = retx / lam if lam > 0 else 0.0
    return StabilityReport(lam=lam, mu=mu, t_out=t_out, stability_sum=total,
                           servers=servers, stable=total < servers, margin=servers - total)


def optimal_design(k0_budget: float, servers: int = 1) -> DesignPoint:
    """Throughput-optimal geometric ladder under the stability budget ``k0``.

    With per-subblock ratio ``u = h^(1/a)`` the stationarity constraint is
    ``P_-1 = a k0 (1 - u)``, and ``P_0 = a k0 (1 - u) u^a`` peaks at
    ``u = a / (a + 1)``.
    """
    if not 0.0 < k0_budget < 1.0:
        raise DomainError(f"k0_budget must be in (0, 1), got {k0_budget!r}")
    a = _check_servers(servers)
    u = a / (a + 1.0)
    h_star = u**a
    per_server = k0_budget * (1.0 - u)
    return DesignPoint(
        k0_budget=k0_budget, servers=a, h_star=h_star,
        p_minus1_star=per_server,
        p_minus1_aggregate=a * per_server,
        p0_star_aggregate=a * per_server * h_star,
    )


def classical_arq_throughput(p0: float) -> float:
    """Throughput of plain full-retransmission ARQ."""
    if not 0.0 <= p0 <= 1.0:
        raise DomainError(f"p0 must be a probability, got {p0!r}")
    return 1.0 - p0


def crc_overhead(eps1: float, servers: int = 1) -> int:
    """CRC bits keeping undetected errors below ``eps1`` with ``a + 1`` decoders."""
    if not 0.0 < eps1 < 1.0:
        raise DomainError(f"eps1 must be in (0, 1), got {eps1!r}")
    a = _check_servers(servers)
    bits = -math.log2(eps1) + math.log2(a + 1)
    # absorb rounding noise on exact powers of two
    return math.ceil(bits - 1e-9)
