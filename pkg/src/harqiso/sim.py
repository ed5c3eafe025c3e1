"""Slotted simulation of isochronous HARQ-II with a retransmission queue.

Every slot one new packet goes out on the normal channel and each HARQ
server with a non-empty queue sends one retransmission share for its head
packet. A server whose queue was empty at the start of the slot lends its
share to the new packet instead, so that packet is first decoded at code
index 0 rather than -1.

Each packet carries one latent uniform ``u``; the decode at code index ``i``
fails iff ``u < p(i)``. Because the ladder is decreasing, failures are
nested and ``P(fail at i | failed at i-1) = p(i) / p(i-1)``.

Algorithm A is the single-server case. Algorithm B runs ``a`` servers that
split the retransmission channel into ``a`` subblocks per slot; its ladder
must be given per subblock. Packets that fail on arrival are dealt
round-robin to the servers.
"""
from __future__ import annotations

import csv
import math
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DomainError
from .wer import WerSeries

_BLOCK = 1 << 16


@dataclass(slots=True)
class Packet:
    id: int
    arrival_slot: int
    latent_draw: float
    code_index: int = -1
    attempts: int = 0
    retx: int = 0
    departed_slot: Optional[int] = None


@dataclass
class SimConfig:
    series: WerSeries
    slots: int
    algorithm: str = "A"
    servers: int = 1
    seed: int = 0
    dk: int = 0
    eps0: float = 1e-3
    queue_cap: Optional[int] = None
    boost: bool = True
    warmup: float = 0.01
    trace_slots: int = 0

    def __post_init__(self):
        if self.algorithm not in ("A", "B"):
            raise DomainError(f"algorithm must be 'A' or 'B', got {self.algorithm!r}")
        if self.algorithm == "A" and self.servers != 1:
            raise DomainError("algorithm A runs exactly one server")
        if int(self.servers) != self.servers or self.servers < 1:
            raise DomainError("servers must be a positive integer")
        if self.slots < 1:
            raise DomainError("slots must be >= 1")
        if self.dk < 0:
            raise DomainError("dk must be >= 0")
        if not 0.0 < self.eps0 < 1.0:
            raise DomainError("eps0 must be in (0, 1)")
        if self.queue_cap is not None and self.queue_cap < 0:
            raise DomainError("queue_cap must be >= 0")
        if not 0.0 <= self.warmup < 1.0:
            raise DomainError("warmup must be in [0, 1)")
        if not 0 <= self.seed < 2**64:
            raise DomainError("seed must be a 64-bit unsigned integer")


@dataclass
class SimMetrics:
    slots: int
    arrivals: int
    delivered: int
    undetected_errors: int
    dropped: int
    in_system: int
    decode_attempts: int
    throughput: float
    mean_queue_len: float
    mean_queue_len_steady: float
    max_queue_len: int
    final_queue_len: int
    delay_histogram: dict
    mean_delay: float
    t_eps0: int
    service_rate_empirical: float
    mean_t_out: float
    per_server_arrivals: list
    queue_history: np.ndarray = field(repr=False, compare=False, default=None)
    trace: list = field(repr=False, compare=False, default_factory=list)

    def to_dict(self) -> dict:
        return {
            "slots": self.slots,
            "arrivals": self.arrivals,
            "delivered": self.delivered,
            "undetected_errors": self.undetected_errors,
            "dropped": self.dropped,
            "in_system": self.in_system,
            "decode_attempts": self.decode_attempts,
            "throughput": self.throughput,
            "mean_queue_len": self.mean_queue_len,
            "mean_queue_len_steady": self.mean_queue_len_steady,
            "max_queue_len": self.max_queue_len,
            "final_queue_len": self.final_queue_len,
            "delay_histogram": {str(k): v for k, v in sorted(self.delay_histogram.items())},
            "mean_delay": self.mean_delay,
            "t_eps0": self.t_eps0,
            "service_rate_empirical": self.service_rate_empirical,
            "mean_t_out": self.mean_t_out,
            "per_server_arrivals": list(self.per_server_arrivals),
        }


def decode_outcome(packet: Packet, code_index: int, series: WerSeries) -> str:
    """``"detected_failure"`` iff the packet's latent draw is below ``p(code_index)``."""
    if packet.latent_draw < series.p(code_index):
        return "detected_failure"
    return "success"


def dispatch_b(k: int, servers: int) -> int:
    """Server for the ``k``-th packet to enter any queue (round-robin)."""
    if servers < 1:
        raise DomainError("servers must be >= 1")
    return k % servers


class _Ladder:
    """Cached ``p(i)`` lookups for the hot loop."""

    def __init__(self, series: WerSeries):
        self.series = series
        self.vals = list(series.values(-1, 63))

    def __call__(self, i: int) -> float:
        k = i + 1
        vals = self.vals
        if k >= len(vals):
            n = len(vals)
            vals.extend(self.series.values(n - 1, max(2 * n, k + 1) - 1))
        return vals[k]


class Simulator:
    """Slot-by-slot state machine; :meth:`step` advances one slot."""

    def __init__(self, config: SimConfig):
        self.config = config
        self.p = _Ladder(config.series)
        seq = np.random.SeedSequence(config.seed)
        latent_seq, undetected_seq = seq.spawn(2)
        self._latent_rng = np.random.Generator(np.random.PCG64(latent_seq))
        self._undetected_rng = np.random.Generator(np.random.PCG64(undetected_seq))
        self._latent_buf = iter(())
        self._undet_buf = iter(())
        self._undetected_p = 2.0 ** -config.dk if config.dk > 0 else 0.0

        a = config.servers
        self.queues = [deque() for _ in range(a)]
        self.slot = 0
        self.next_id = 0
        self.rr = 0
        self.arrivals = 0
        self.delivered = 0
        self.undetected = 0
        self.dropped = 0
        self.attempts = 0
        self.queue_len = 0
        self.busy_slots = 0
        self.queue_departures = 0
        self.t_out_total = 0
        self.per_server_arrivals = [0] * a
        self.delays = Counter()
        self.queue_history = np.zeros(config.slots, dtype=np.int64)
        self.trace = []

    def _latent(self) -> float:
        try:
            return next(self._latent_buf)
        except StopIteration:
            self._latent_buf = iter(self._latent_rng.random(_BLOCK).tolist())
            return next(self._latent_buf)

    def _flip_undetected(self) -> bool:
        if not self._undetected_p:
            return False
        try:
            u = next(self._undet_buf)
        except StopIteration:
            self._undet_buf = iter(self._undetected_rng.random(_BLOCK).tolist())
            u = next(self._undet_buf)
        return u < self._undetected_p

    def _event(self, event, pkt, queue_len):
        if self.slot < self.config.trace_slots:
            self.trace.append((self.slot, event, pkt.id, pkt.code_index, queue_len))

    def _deliver(self, pkt: Packet, t: int):
        pkt.departed_slot = t
        self.delivered += 1
        self.delays[t - pkt.arrival_slot] += 1

    def _decode(self, pkt: Packet) -> bool:
        """Decode at the packet's current index; True when it is accepted."""
        self.attempts += 1
        pkt.attempts += 1
        k = pkt.code_index + 1
        vals = self.p.vals
        p = vals[k] if k < len(vals) else self.p(pkt.code_index)
        if pkt.latent_draw >= p:
            return True
        if self._undetected_p and self._flip_undetected():
            self.undetected += 1
            self._event("undetected", pkt, self.queue_len)
            return True
        return False

    def step(self):
        t = self.slot
        cfg = self.config
        queues = self.queues
        tracing = t < cfg.trace_slots
        decode = self._decode
        target = self.rr
        target_idle = not queues[target]

        for q in queues:
            if not q:
                continue
            head = q[0]
            head.code_index += 1
            head.retx += 1
            self.busy_slots += 1
            if decode(head):
                q.popleft()
                self.queue_len -= 1
                self.queue_departures += 1
                self.t_out_total += head.retx
                self._deliver(head, t)
                if tracing:
                    self._event("depart", head, len(q))
            elif tracing:
                self._event("retx_fail", head, len(q))

        pkt = Packet(self.next_id, t, self._latent())
        self.next_id += 1
        self.arrivals += 1
        if cfg.boost and target_idle:
            pkt.code_index = 0
        if decode(pkt):
            self._deliver(pkt, t)
            if tracing:
                self._event("decode_ok", pkt, len(queues[target]))
        elif cfg.queue_cap is not None and self.queue_len >= cfg.queue_cap:
            self.dropped += 1
            if tracing:
                self._event("drop", pkt, len(queues[target]))
        else:
            queues[target].append(pkt)
            self.queue_len += 1
            self.per_server_arrivals[target] += 1
            self.rr = dispatch_b(target + 1, cfg.servers)
            if tracing:
                self._event("enqueue", pkt, len(queues[target]))

        self.queue_history[t] = self.queue_len
        self.slot += 1

    def metrics(self) -> SimMetrics:
        cfg = self.config
        n = self.slot
        hist = self.queue_history[:n]
        w0 = int(cfg.warmup * n)
        steady = hist[w0:] if n - w0 > 0 else hist
        delays = sorted(self.delays.items())
        t_eps0 = 0
        if self.delivered:
            need = (1.0 - cfg.eps0) * self.delivered
            acc = 0
            for d, c in delays:
                acc += c
                if acc >= need:
                    t_eps0 = d
                    break
        mean_delay = (sum(d * c for d, c in delays) / self.delivered) if self.delivered else 0.0
        return SimMetrics(
            slots=n,
            arrivals=self.arrivals,
            delivered=self.delivered,
            undetected_errors=self.undetected,
            dropped=self.dropped,
            in_system=self.queue_len,
            decode_attempts=self.attempts,
            throughput=self.delivered / n if n else 0.0,
            mean_queue_len=float(hist.mean()) if n else 0.0,
            mean_queue_len_steady=float(steady.mean()) if n else 0.0,
            max_queue_len=int(hist.max()) if n else 0,
            final_queue_len=self.queue_len,
            delay_histogram=dict(delays),
            mean_delay=mean_delay,
            t_eps0=t_eps0,
            service_rate_empirical=(self.queue_departures / self.busy_slots
                                    if self.busy_slots else math.nan),
            mean_t_out=(self.t_out_total / self.queue_departures
                        if self.queue_departures else math.nan),
            per_server_arrivals=list(self.per_server_arrivals),
            queue_history=hist.copy(),
            trace=list(self.trace),
        )


def run(config: SimConfig) -> SimMetrics:
    sim = Simulator(config)
    for _ in range(config.slots):
        sim.step()
    return sim.metrics()


def step_slot(sim: Simulator, config: Optional[SimConfig] = None) -> Simulator:
    """Advance ``sim`` by one slot and return it."""
    if config is not None and config is not sim.config:
        raise DomainError("config does not belong to this simulator")
    sim.step()
    return sim


def write_trace(trace, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["slot", "event", "packet_id", "code_index", "queue_len"])
        w.writerows(trace)
