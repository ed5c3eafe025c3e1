"""Word error rate ladders ``P_-1, P_0, P_1, ...`` of a rate-compatible family.

Three backings share the :class:`WerSeries` interface:

* :class:`AnalyticSeries` - random coding bound of each code ``C_i``.
* :class:`GeometricSeries` - the ``(h, g)`` model, ``P_i = P_-1 h^(i+1) g^(i(i+1)/2)``.
* :class:`TableSeries` - measured values with an extrapolation rule for the tail.

Indices start at -1 (the code sent over the normal channel).
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import exponent
from .errors import ConvergenceError, DomainError
from .exponent import ChannelParams

SUM_TOL = 1e-15
MAX_TERMS = 10**6


@dataclass(frozen=True)
class CodeFamilyGeometry:
    """Sizes of the nested family ``C_-1 ⊂ C_0 ⊂ ... ⊂ C_m``.

    ``n_base`` coded bits go over the normal channel; every retransmission
    group adds ``dn`` bits. ``m_groups=None`` means the family is unbounded.
    """

    k_info: int
    dk: int
    n_base: int
    dn: int
    m_groups: Optional[int] = None

    def __post_init__(self):
        if self.k_info < 1 or self.dk < 0 or self.dn < 0:
            raise DomainError("need k_info >= 1, dk >= 0, dn >= 0")
        if self.n_base <= self.k0:
            raise DomainError(f"n_base={self.n_base} must exceed k0={self.k0}")
        if self.m_groups is not None and self.m_groups < 1:
            raise DomainError("m_groups must be a positive integer or None")

    @property
    def k0(self) -> int:
        return self.k_info + self.dk

    @property
    def k1(self) -> float:
        """``K0 ln 2``: information content in nats."""
        return self.k0 * exponent.LN2

    def n_coded(self, i: int) -> int:
        if i < -1:
            raise DomainError(f"code index must be >= -1, got {i}")
        if self.m_groups is not None:
            i = min(i, self.m_groups)
        return self.n_base + (i + 1) * self.dn

    def rate_nat(self, i: int) -> float:
        return self.k1 / self.n_coded(i)

    def redundancy(self, i: int) -> float:
        """``z_i = 1 / R_nat`` of code ``C_i``."""
        return self.n_coded(i) / self.k1


class WerSeries:
    """Base class; subclasses implement :meth:`p`."""

    def p(self, i: int) -> float:
        raise NotImplementedError

    def values(self, start: int, stop: int) -> np.ndarray:
        """``p(i)`` for ``start <= i < stop``."""
        return np.array([self.p(i) for i in range(start, stop)], dtype=float)

    def ladder(self, tol: float = SUM_TOL, max_terms: int = MAX_TERMS) -> np.ndarray:
        """``P_-1 .. P_n`` truncated at the first ``n`` with ``(n + 2) P_n < tol``.

        The weighting keeps the remainder of the ``(i + 1)``-weighted sums of
        the queueing formulas below ``tol`` as well.
        """
        chunks = []
        start, size = -1, 64
        while start - (-1) < max_terms:
            stop = min(start + size, max_terms - 1)
            vals = self.values(start, stop)
            idx = np.arange(start, stop)
            small = np.nonzero((idx + 2) * vals < tol)[0]
            if small.size:
                chunks.append(vals[: small[0]])
                return np.concatenate(chunks)
            chunks.append(vals)
            start = stop
            size = min(size * 4, 1 << 16)
        raise ConvergenceError(
            f"series still above {tol:g} after {max_terms} terms")

    def total(self, start: int = -1, tol: float = SUM_TOL, max_terms: int = MAX_TERMS) -> float:
        """``sum_{i >= start} p(i)`` under the truncation rule."""
        lad = self.ladder(tol, max_terms)
        return float(np.sum(lad[start + 1:]))


class GeometricSeries(WerSeries):
    def __init__(self, p_minus1: float, h: float, g: float = 1.0):
        if not 0.0 < p_minus1 <= 1.0:
            raise DomainError(f"p_minus1 must be in (0, 1], got {p_minus1!r}")
        if not 0.0 < h < 1.0:
            raise DomainError(f"h must be in (0, 1), got {h!r}")
        if not 0.0 < g <= 1.0:
            raise DomainError(f"g must be in (0, 1], got {g!r}")
        self.p_minus1 = float(p_minus1)
        self.h = float(h)
        self.g = float(g)

    def __repr__(self):
        return f"GeometricSeries(p_minus1={self.p_minus1!r}, h={self.h!r}, g={self.g!r})"

    def p(self, i: int) -> float:
        return geometric_p(self.p_minus1, self.h, self.g, i)

    def values(self, start: int, stop: int) -> np.ndarray:
        i = np.arange(start, stop, dtype=float)
        logp = (math.log(self.p_minus1) + (i + 1) * math.log(self.h)
                + 0.5 * i * (i + 1) * math.log(self.g))
        return np.exp(logp)


class AnalyticSeries(WerSeries):
    """``P_i = exp(-N_i E(R_i))`` for the codes of ``geometry``."""

    def __init__(self, geometry: CodeFamilyGeometry, channel: ChannelParams):
        self.geometry = geometry
        self.channel = channel
        cap = exponent.landmarks(channel).capacity
        if geometry.rate_nat(-1) >= cap:
            raise DomainError(
                f"base code rate {geometry.rate_nat(-1):.6g} nats is not below "
                f"capacity {cap:.6g} at A={channel.a_linear:.6g}")
        self.log_p = lru_cache(maxsize=None)(self._log_p)

    def __repr__(self):
        return f"AnalyticSeries({self.geometry!r}, {self.channel!r})"

    def _log_p(self, i: int) -> float:
        geo = self.geometry
        return -geo.n_coded(i) * exponent.error_exponent(geo.rate_nat(i), self.channel)

    def p(self, i: int) -> float:
        return min(1.0, math.exp(self.log_p(i)))


class TableSeries(WerSeries):
    """Tabulated WERs from index -1 on.

    ``tail="geometric"`` repeats the last observed ratio beyond the table;
    ``tail="truncate"`` treats the missing entries as zero.
    """

    TAILS = ("geometric", "truncate")

    def __init__(self, values: Sequence[float], tail: str = "geometric"):
        vals = [float(v) for v in values]
        if not vals:
            raise DomainError("table must hold at least one value")
        if tail not in self.TAILS:
            raise DomainError(f"unknown tail rule {tail!r}")
        if any(not 0.0 <= v <= 1.0 for v in vals):
            raise DomainError("table values must be probabilities")
        if any(b > a for a, b in zip(vals, vals[1:])):
            raise DomainError("table values must be non-increasing")
        if tail == "geometric" and (len(vals) < 2 or vals[-2] == 0.0):
            raise DomainError("geometric tail needs two trailing non-zero-denominator values")
        self._vals = tuple(vals)
        self.tail = tail

    def __repr__(self):
        return f"TableSeries({list(self._vals)!r}, tail={self.tail!r})"

    @property
    def table(self) -> tuple:
        return self._vals

    @property
    def last_ratio(self) -> float:
        return self._vals[-1] / self._vals[-2]

    def p(self, i: int) -> float:
        if i < -1:
            raise DomainError(f"code index must be >= -1, got {i}")
        k = i + 1
        if k < len(self._vals):
            return self._vals[k]
        if self.tail == "truncate":
            return 0.0
        return self._vals[-1] * self.last_ratio ** (k - len(self._vals) + 1)

    def values(self, start: int, stop: int) -> np.ndarray:
        k = np.arange(start + 1, stop + 1)
        n = len(self._vals)
        out = np.zeros(k.size)
        inside = k < n
        out[inside] = np.asarray(self._vals)[k[inside]]
        if self.tail == "geometric":
            out[~inside] = self._vals[-1] * self.last_ratio ** (k[~inside] - n + 1.0)
        return out

    @classmethod
    def from_csv(cls, path) -> "TableSeries":
        """Read ``index,wer`` rows with an optional ``tail=...`` footer."""
        tail = "geometric"
        values = []
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
        if not rows or [c.strip() for c in rows[0]] != ["index", "wer"]:
            raise DomainError(f"{path}: header must be 'index,wer'")
        expected = -1
        for row in rows[1:]:
            first = row[0].strip()
            if first.startswith("tail="):
                tail = first.split("=", 1)[1].strip()
                continue
            if len(row) != 2:
                raise DomainError(f"{path}: malformed row {row!r}")
            idx = int(first)
            if idx != expected:
                raise DomainError(f"{path}: expected index {expected}, got {idx}")
            values.append(float(row[1]))
            expected += 1
        return cls(values, tail=tail)

    def to_csv(self, path) -> None:
        with open(Path(path), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["index", "wer"])
            for k, v in enumerate(self._vals):
                w.writerow([k - 1, repr(v)])
            w.writerow([f"tail={self.tail}"])


def analytic_p(geometry: CodeFamilyGeometry, channel: ChannelParams, i: int) -> float:
    cap = exponent.landmarks(channel).capacity
    if geometry.rate_nat(-1) >= cap:
        raise DomainError("base code rate is not below capacity")
    return min(1.0, math.exp(-geometry.n_coded(i)
                             * exponent.error_exponent(geometry.rate_nat(i), channel)))


def geometric_p(p_minus1: float, h: float, g: float, i: int) -> float:
    """(h, g) model: ``P_0 = P_-1 h`` and ``P_i = P_(i-1) h g^i`` for ``i >= 1``."""
    if not 0.0 < p_minus1 <= 1.0 or not 0.0 < h < 1.0 or not 0.0 < g <= 1.0:
        raise DomainError("need 0 < p_minus1 <= 1, 0 < h < 1, 0 < g <= 1")
    if i < -1:
        raise DomainError(f"code index must be >= -1, got {i}")
    p = p_minus1
    for k in range(0, i + 1):
        p *= h * g**k
    return p


def estimate_ratios(p_minus1: float, p0: float, p1: float) -> tuple[float, float]:
    """Return ``(h, g)`` reproducing three consecutive WERs exactly."""
    if not p_minus1 > p0 > p1 > 0.0:
        raise DomainError("need p_minus1 > p0 > p1 > 0")
    return p0 / p_minus1, (p_minus1 * p1) / (p0 * p0)


def predicted_ratio(z: float, dz: float, k1: float, channel: ChannelParams) -> float:
    """Small-step limit of ``P_(i+1) / P_i`` around redundancy ``z``.

    Uses ``d(z E(1/z))/dz = E0(rho(z))``, with ``E0`` frozen at ``R0`` below
    the critical rate.
    """
    if not z > 0 or dz < 0 or not k1 > 0:
        raise DomainError("need z > 0, dz >= 0, k1 > 0")
    e0 = exponent.e0_upper(1.0 / z, channel)
    return math.exp(-k1 * e0 * dz)


def conditional_fail(series: WerSeries, i: int) -> float:
    """P(decode of ``C_i`` fails | every earlier attempt failed)."""
    if i < 0:
        raise DomainError(f"index must be >= 0, got {i}")
    prev = series.p(i - 1)
    if prev <= 0.0:
        raise DomainError(f"p({i - 1}) is zero; conditional probability undefined")
    return series.p(i) / prev
