"""Deterministic discrete-event kernel, orderwire channels, mobility and call traffic.

Events are ordered by ``(time, seq)`` with ``seq`` handed out at schedule time,
so two events at the same millisecond fire in the order they were scheduled.
All randomness comes from :class:`RngStreams`, one independent substream per
name, so switching on packet loss does not perturb mobility draws.
"""

from __future__ import annotations

import heapq
import itertools
import math
import zlib
from dataclasses import dataclass, field, replace
from typing import Callable, Iterator

import numpy as np

from .core import (
    GeoPosition,
    OrderwirePacket,
    PacketKind,
    SimTime,
    VNC_HEADER_BITS,
    describe,
    distance,
    ms,
    packet_size_bits,
)

# Per-kind "packetize, transmit, receive, depacketize" latency measured on the radios.
DEFAULT_LATENCY_MS: dict[PacketKind, int] = {
    PacketKind.USER_POS: 677,
    PacketKind.NEWSWITCH: 439,
    PacketKind.HANDOFF: 473,
    PacketKind.MYCALL: 492,
    PacketKind.SWITCHPOS: 679,
    PacketKind.TOPOLOGY: 664,
    PacketKind.GVT_UPDATE: 492,
}


class SchedulingError(Exception):
    pass


class LinkAbsent(Exception):
    pass


@dataclass(order=True)
class Event:
    time: SimTime
    seq: int
    target: str = field(compare=False, default="")
    kind: str = field(compare=False, default="")
    detail: str = field(compare=False, default="")
    action: Callable[[], None] | None = field(compare=False, default=None, repr=False)
    cancelled: bool = field(compare=False, default=False)

    def cancel(self) -> None:
        self.cancelled = True


class RngStreams:
    """Named, independent numpy generators derived from a single scenario seed."""

    def __init__(self, seed: int):
        self.seed = seed
        self._streams: dict[str, np.random.Generator] = {}

    def __getitem__(self, name: str) -> np.random.Generator:
        if name not in self._streams:
            ss = np.random.SeedSequence([self.seed, zlib.crc32(name.encode())])
            self._streams[name] = np.random.default_rng(ss)
        return self._streams[name]


class Simulator:
    def __init__(self, seed: int = 0, trace: bool = False):
        self.now: SimTime = 0
        self.rng = RngStreams(seed)
        self._queue: list[Event] = []
        self._seq = itertools.count()
        self.trace_enabled = trace
        self.trace: list[str] = []
        self.dispatched = 0

    def schedule(self, e: Event) -> Event:
        if e.time < self.now:
            raise SchedulingError(f"event at {e.time} ms scheduled in the past (now {self.now})")
        heapq.heappush(self._queue, e)
        return e

    def at(self, time: SimTime, target: str, kind: str, action=None, detail: str = "") -> Event:
        return self.schedule(Event(time, next(self._seq), target, kind, detail, action))

    def after(self, delay: SimTime, target: str, kind: str, action=None, detail: str = "") -> Event:
        return self.at(self.now + delay, target, kind, action, detail)

    def pending(self) -> int:
        return sum(1 for e in self._queue if not e.cancelled)

    def peek_time(self) -> SimTime | None:
        while self._queue and self._queue[0].cancelled:
            heapq.heappop(self._queue)
        return self._queue[0].time if self._queue else None

    def run_until(self, t: SimTime) -> int:
        """Dispatch every event with time <= t; returns how many fired."""
        count = 0
        while self._queue and self._queue[0].time <= t:
            e = heapq.heappop(self._queue)
            if e.cancelled:
                continue
            self.now = e.time
            if self.trace_enabled:
                self.trace.append(f"{e.time} {e.target} {e.kind} {e.detail}".rstrip())
            if e.action is not None:
                e.action()
            count += 1
        self.now = max(self.now, t)
        self.dispatched += count
        return count


# --- orderwire ----------------------------------------------------------------


@dataclass
class ChannelModel:
    mode: str = "broadcast_aloha"
    bandwidth_bps: int = 19200
    drop: dict[PacketKind, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.mode not in ("broadcast_aloha", "reliable_p2p"):
            raise ValueError(f"unknown channel mode {self.mode!r}")
        if self.bandwidth_bps <= 0:
            raise ValueError("bandwidth must be positive")
        for k, p in self.drop.items():
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"drop probability for {k} outside [0, 1]")


@dataclass
class Transmission:
    src: str
    packet: OrderwirePacket
    start: SimTime
    end: SimTime
    virtual: bool = False
    collided: bool = False
    dropped: bool = False
    delivered: set[str] = field(default_factory=set)


@dataclass
class _Link:
    last_delivery: SimTime = 0
    up: bool = True


Receiver = Callable[[str, OrderwirePacket, str], None]  # (src, packet, "bcast" | "p2p")


class Orderwire:
    """The shared Aloha broadcast channel plus AX.25-style point-to-point links.

    Broadcasts occupy the channel for ``bits / bandwidth`` and are delivered
    ``latency[kind]`` after they start, unless another transmission overlaps in
    time (both are lost) or the per-kind drop coin fires.  Point-to-point
    deliveries are FIFO per direction.
    """

    def __init__(
        self,
        sim: Simulator,
        broadcast: ChannelModel | None = None,
        p2p: ChannelModel | None = None,
        latency_ms: dict[PacketKind, int] | None = None,
        collisions: bool = True,
        range_m: float | None = None,
        vnc: bool = False,
        vnc_contend: bool = True,
        vnc_lookahead_ms: SimTime = 10_000,
    ):
        self.sim = sim
        self.bcast_model = broadcast or ChannelModel("broadcast_aloha")
        self.p2p_model = p2p or ChannelModel("reliable_p2p", drop=dict(self.bcast_model.drop))
        self.latency = dict(DEFAULT_LATENCY_MS)
        if latency_ms:
            self.latency.update(latency_ms)
        self.collisions = collisions
        self.range_m = range_m
        self.vnc = vnc
        self.vnc_contend = vnc_contend
        self.vnc_lookahead_ms = vnc_lookahead_ms
        self._nodes: dict[str, tuple[Callable[[], GeoPosition], Receiver]] = {}
        self._alive: set[str] = set()
        self._active: list[Transmission] = []
        self._links: dict[tuple[str, str], _Link] = {}
        self.link_down_handler: Callable[[str, str], None] | None = None
        self.broadcasts = 0
        self.collided = 0
        self.bits_real = 0
        self.bits_virtual = 0
        self.log: list[Transmission] = []
        # (sent, delivered, src, dst, kind) for every completed p2p delivery
        self.p2p_log: list[tuple[SimTime, SimTime, str, str, PacketKind]] = []

    # attachment ---------------------------------------------------------
    def attach(self, node: str, position: Callable[[], GeoPosition], receiver: Receiver) -> None:
        self._nodes[node] = (position, receiver)
        self._alive.add(node)

    def detach(self, node: str) -> None:
        """Node failure: stop delivering to it and tear down its links."""
        self._alive.discard(node)
        for (a, b), link in sorted(self._links.items()):
            if node in (a, b) and link.up:
                self.close_link(a, b)

    def alive(self, node: str) -> bool:
        return node in self._alive

    # accounting ---------------------------------------------------------
    def _account(self, p: OrderwirePacket) -> int:
        bits = packet_size_bits(p)
        self.bits_real += bits
        if self.vnc:
            self.bits_virtual += bits + VNC_HEADER_BITS
        return bits

    def occupancy_ms(self, bits: int, model: ChannelModel | None = None) -> SimTime:
        bw = (model or self.bcast_model).bandwidth_bps
        return max(1, math.ceil(bits * 1000 / bw))

    def _drop(self, model: ChannelModel, kind: PacketKind) -> bool:
        p = model.drop.get(kind, 0.0)
        if p <= 0.0:
            return False
        if p >= 1.0:
            return True
        return bool(self.sim.rng["loss"].random() < p)

    # broadcast ----------------------------------------------------------
    def _occupy(self, tx: Transmission) -> None:
        now = self.sim.now
        self._active = [t for t in self._active if t.end > now]
        if self.collisions:
            for other in self._active:
                if other.start < tx.end and tx.start < other.end:
                    other.collided = tx.collided = True
        self._active.append(tx)

    def broadcast(self, src: str, p: OrderwirePacket) -> Transmission:
        now = self.sim.now
        bits = self._account(p)
        dur = self.occupancy_ms(bits)
        tx = Transmission(src, p, now, now + dur)
        self.broadcasts += 1
        self._occupy(tx)
        tx.dropped = self._drop(self.bcast_model, p.kind)
        if self.vnc and self.vnc_contend:
            vdur = self.occupancy_ms(bits + VNC_HEADER_BITS)
            self._occupy(Transmission(src, p, tx.end, tx.end + vdur, virtual=True))
        deliver_at = now + max(dur, self.latency[p.kind])
        self.sim.at(deliver_at, src, "bcast-deliver", lambda: self._deliver_broadcast(tx), describe(p))
        self.log.append(tx)
        return tx

    def _deliver_broadcast(self, tx: Transmission) -> None:
        if tx.collided:
            self.collided += 1
            return
        if tx.dropped or tx.src not in self._alive:
            return
        src_pos = self._nodes[tx.src][0]()
        for node in sorted(self._alive):
            if node == tx.src:
                continue
            pos_fn, receiver = self._nodes[node]
            if self.range_m is not None and distance(src_pos, pos_fn()) > self.range_m:
                continue
            tx.delivered.add(node)
            receiver(tx.src, tx.packet, "bcast")

    # point to point -----------------------------------------------------
    @staticmethod
    def _key(a: str, b: str) -> tuple[str, str]:
        return (a, b) if a < b else (b, a)

    def open_link(self, a: str, b: str) -> None:
        if a not in self._alive or b not in self._alive:
            raise LinkAbsent(f"cannot open {a}<->{b}: endpoint down")
        for k in ((a, b), (b, a)):
            self._links.setdefault(k, _Link()).up = True

    def has_link(self, a: str, b: str) -> bool:
        link = self._links.get((a, b))
        return link is not None and link.up

    def close_link(self, a: str, b: str) -> None:
        if not self.has_link(a, b):
            return
        self._links[(a, b)].up = False
        self._links[(b, a)].up = False
        if self.link_down_handler is not None:
            for node, peer in ((a, b), (b, a)):
                if node in self._alive:
                    self.link_down_handler(node, peer)

    def p2p_send(self, src: str, dst: str, p: OrderwirePacket) -> None:
        if not self.has_link(src, dst):
            raise LinkAbsent(f"no point-to-point link {src}->{dst}")
        now = self.sim.now
        self._account(p)
        link = self._links[(src, dst)]
        at = max(now + self.latency[p.kind], link.last_delivery)
        link.last_delivery = at
        dropped = self._drop(self.p2p_model, p.kind)

        def deliver():
            if dropped or not self.has_link(src, dst) or dst not in self._alive:
                return
            self.p2p_log.append((now, self.sim.now, src, dst, p.kind))
            self._nodes[dst][1](src, p, "p2p")

        self.sim.at(at, dst, "p2p-deliver", deliver, f"{src}->{dst} {describe(p)}")

    def links(self) -> list[tuple[str, str]]:
        return sorted({self._key(a, b) for (a, b), l in self._links.items() if l.up})

    def collision_rate(self) -> float:
        return self.collided / self.broadcasts if self.broadcasts else 0.0


# --- mobility and traffic -------------------------------------------------------


@dataclass(frozen=True)
class MobilityState:
    position: GeoPosition
    speed: float = 0.0
    direction: float = 0.0
    max_speed: float = 5.0

    def __post_init__(self):
        if not 0 <= self.speed <= self.max_speed:
            raise ValueError(f"speed {self.speed} outside [0, {self.max_speed}]")
        if not 0 <= self.direction < 360:
            raise ValueError(f"direction {self.direction} outside [0, 360)")


def mobility_step(m: MobilityState, dt: float) -> MobilityState:
    """Advance ``dt`` seconds in a straight line (direction 0 = +y, 90 = +x)."""
    if dt < 0:
        raise ValueError("dt must be non-negative")
    if m.speed == 0 or dt == 0:
        return m
    rad = math.radians(m.direction)
    d = m.speed * dt
    pos = GeoPosition(m.position.x + d * math.sin(rad), m.position.y + d * math.cos(rad))
    return replace(m, position=pos)


def resample_motion(m: MobilityState, rng: np.random.Generator) -> MobilityState:
    """New speed ~ U(0, max_speed) and direction ~ U(0, 360) after a handoff."""
    speed = float(rng.uniform(0.0, m.max_speed))
    direction = float(rng.uniform(0.0, 360.0)) % 360.0
    return replace(m, speed=speed, direction=direction)


@dataclass(frozen=True)
class TrafficModel:
    inter_setup_mean: float = 1200.0
    call_duration_mean: float = 600.0

    def __post_init__(self):
        if self.inter_setup_mean <= 0 or self.call_duration_mean <= 0:
            raise ValueError("traffic means must be positive")


def poisson_call_source(
    tm: TrafficModel, rng: np.random.Generator, start: SimTime = 0, end: SimTime | None = None
) -> Iterator[tuple[SimTime, SimTime]]:
    """Yield (setup, teardown) times of a Poisson call process in [start, end)."""
    t = float(start)
    while True:
        t += float(rng.exponential(tm.inter_setup_mean)) * 1000.0
        setup = ms(t / 1000.0)
        if end is not None and setup >= end:
            return
        dur = float(rng.exponential(tm.call_duration_mean))
        yield setup, setup + ms(dur)
