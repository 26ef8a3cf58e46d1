"""Shared value types: callsigns, plane positions, millisecond time, orderwire packets.

Time is an ``int`` count of milliseconds everywhere in the package so that event
ordering never depends on float rounding.  Positions are local-plane meters.

Packets use a fixed bit-level encoding (see ``encode``).  Field widths:

    kind tag 8 | callsign 48 | time 48 | coordinate 32 (signed mm) | frequency 8
    slot 8 | VCI 16 | VNC header 1 + 32 + 32

The high bit of the kind tag flags a trailing VNC header, so the tag still fits
in 8 bits.  TOPOLOGY carries an 8-bit node count and 8-bit link count after the
tag; HANDOFF carries an 8-bit variant byte and an 8-bit replacement-VCI count.
"""

from __future__ import annotations

import math
import string
from dataclasses import dataclass, field, replace
from enum import IntEnum
from typing import ClassVar, Iterator

SimTime = int  # milliseconds
Callsign = str

CALLSIGN_CHARS = 6
_CALLSIGN_ALPHABET = set(string.ascii_letters + string.digits + "-/")

VNC_HEADER_BITS = 65


def ms(seconds: float) -> SimTime:
    """Convert seconds to integer milliseconds (round half away from zero)."""
    return int(math.floor(seconds * 1000 + 0.5)) if seconds >= 0 else -ms(-seconds)


def seconds(t: SimTime) -> float:
    return t / 1000.0


def check_callsign(cs: str) -> str:
    if not cs or len(cs) > CALLSIGN_CHARS or not set(cs) <= _CALLSIGN_ALPHABET:
        raise ValueError(f"bad callsign {cs!r}: 1-{CALLSIGN_CHARS} chars of [A-Za-z0-9-/]")
    return cs


@dataclass(frozen=True, order=True)
class GeoPosition:
    x: float = 0.0
    y: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite position ({self.x}, {self.y})")

    def __str__(self):
        return f"({self.x:.3f},{self.y:.3f})"


def distance(a: GeoPosition, b: GeoPosition) -> float:
    return math.hypot(a.x - b.x, a.y - b.y)


def bearing(src: GeoPosition, dst: GeoPosition) -> float:
    """Compass bearing in degrees [0, 360): 0 is +y (north), 90 is +x (east)."""
    deg = math.degrees(math.atan2(dst.x - src.x, dst.y - src.y)) % 360.0
    return 0.0 if deg == 360.0 else deg


class PacketKind(IntEnum):
    MYCALL = 1
    NEWSWITCH = 2
    SWITCHPOS = 3
    TOPOLOGY = 4
    USER_POS = 5
    HANDOFF = 6
    GVT_UPDATE = 7


@dataclass(frozen=True)
class VncHeader:
    antimessage: bool
    send_time: SimTime
    receive_time: SimTime

    def __post_init__(self):
        if self.receive_time < self.send_time:
            raise ValueError("receive_time precedes send_time")


@dataclass(frozen=True, kw_only=True)
class OrderwirePacket:
    """Base of the packet union.  Every concrete kind may carry a VNC header."""

    kind: ClassVar[PacketKind]
    vnc: VncHeader | None = None


@dataclass(frozen=True)
class MyCall(OrderwirePacket):
    kind: ClassVar[PacketKind] = PacketKind.MYCALL
    callsign: Callsign
    startup_time: SimTime


@dataclass(frozen=True)
class NewSwitch(OrderwirePacket):
    kind: ClassVar[PacketKind] = PacketKind.NEWSWITCH


@dataclass(frozen=True)
class SwitchPos(OrderwirePacket):
    kind: ClassVar[PacketKind] = PacketKind.SWITCHPOS
    time: SimTime
    position: GeoPosition


@dataclass(frozen=True)
class Topology(OrderwirePacket):
    """Switch position table plus the inter-ES link list chosen by the master."""

    kind: ClassVar[PacketKind] = PacketKind.TOPOLOGY
    nodes: tuple[tuple[Callsign, GeoPosition], ...]
    links: tuple[tuple[Callsign, Callsign, int], ...] = ()


@dataclass(frozen=True)
class UserPos(OrderwirePacket):
    kind: ClassVar[PacketKind] = PacketKind.USER_POS
    callsign: Callsign
    time: SimTime
    position: GeoPosition


@dataclass(frozen=True)
class Handoff(OrderwirePacket):
    """Either an assignment (frequency, slot, ES position) or a redirect callsign."""

    kind: ClassVar[PacketKind] = PacketKind.HANDOFF
    frequency: int | None = None
    slot: int | None = None
    es_position: GeoPosition | None = None
    redirect: Callsign | None = None
    replacement_vcis: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        assignment = (self.frequency, self.slot, self.es_position)
        has_assignment = all(v is not None for v in assignment)
        if any(v is not None for v in assignment) and not has_assignment:
            raise ValueError("HANDOFF assignment needs frequency, slot and ES position")
        if has_assignment == (self.redirect is not None):
            raise ValueError("HANDOFF carries exactly one of assignment or redirect")

    @property
    def is_redirect(self) -> bool:
        return self.redirect is not None


@dataclass(frozen=True)
class GvtUpdate(OrderwirePacket):
    kind: ClassVar[PacketKind] = PacketKind.GVT_UPDATE
    reporter: Callsign
    lvt: SimTime


PACKET_TYPES: dict[PacketKind, type[OrderwirePacket]] = {
    cls.kind: cls for cls in (MyCall, NewSwitch, SwitchPos, Topology, UserPos, Handoff, GvtUpdate)
}


@dataclass(frozen=True)
class PositionEntry:
    position: GeoPosition
    time: SimTime


@dataclass
class PositionTable:
    """Callsign -> (position, time).  Used both as switch and user position table."""

    entries: dict[Callsign, PositionEntry] = field(default_factory=dict)

    def update(self, cs: Callsign, position: GeoPosition, time: SimTime) -> None:
        self.entries[cs] = PositionEntry(position, time)

    def position(self, cs: Callsign) -> GeoPosition:
        return self.entries[cs].position

    def positions(self) -> dict[Callsign, GeoPosition]:
        return {cs: e.position for cs, e in self.entries.items()}

    def copy(self) -> "PositionTable":
        return PositionTable(dict(self.entries))

    def __contains__(self, cs):
        return cs in self.entries

    def __iter__(self) -> Iterator[Callsign]:
        return iter(sorted(self.entries))

    def __len__(self):
        return len(self.entries)


SwitchPositionTable = PositionTable
UserPositionTable = PositionTable


# --- bit-level encoding -------------------------------------------------------


class _BitWriter:
    def __init__(self):
        self.value = 0
        self.nbits = 0

    def put(self, v: int, width: int) -> None:
        if not 0 <= v < (1 << width):
            raise OverflowError(f"value {v} does not fit in {width} bits")
        self.value = (self.value << width) | v
        self.nbits += width

    def put_signed(self, v: int, width: int) -> None:
        lo, hi = -(1 << (width - 1)), (1 << (width - 1))
        if not lo <= v < hi:
            raise OverflowError(f"value {v} does not fit in signed {width} bits")
        self.put(v & ((1 << width) - 1), width)

    def to_bytes(self) -> bytes:
        pad = (-self.nbits) % 8
        return (self.value << pad).to_bytes((self.nbits + pad) // 8, "big")


class _BitReader:
    def __init__(self, data: bytes):
        self.value = int.from_bytes(data, "big")
        self.total = len(data) * 8
        self.pos = 0

    def get(self, width: int) -> int:
        if self.pos + width > self.total:
            raise ValueError("truncated packet")
        shift = self.total - self.pos - width
        self.pos += width
        return (self.value >> shift) & ((1 << width) - 1)

    def get_signed(self, width: int) -> int:
        v = self.get(width)
        return v - (1 << width) if v >= (1 << (width - 1)) else v


def _put_callsign(w: _BitWriter, cs: str) -> None:
    check_callsign(cs)
    for ch in cs.ljust(CALLSIGN_CHARS):
        w.put(ord(ch), 8)


def _get_callsign(r: _BitReader) -> str:
    return "".join(chr(r.get(8)) for _ in range(CALLSIGN_CHARS)).rstrip(" ")


def _put_position(w: _BitWriter, p: GeoPosition) -> None:
    w.put_signed(round(p.x * 1000), 32)
    w.put_signed(round(p.y * 1000), 32)


def _get_position(r: _BitReader) -> GeoPosition:
    x = r.get_signed(32)
    y = r.get_signed(32)
    return GeoPosition(x / 1000, y / 1000)


def _write(p: OrderwirePacket) -> _BitWriter:
    w = _BitWriter()
    w.put(int(p.kind) | (0x80 if p.vnc is not None else 0), 8)
    if isinstance(p, MyCall):
        _put_callsign(w, p.callsign)
        w.put(p.startup_time, 48)
    elif isinstance(p, NewSwitch):
        pass
    elif isinstance(p, SwitchPos):
        w.put(p.time, 48)
        _put_position(w, p.position)
    elif isinstance(p, Topology):
        w.put(len(p.nodes), 8)
        w.put(len(p.links), 8)
        for cs, pos in p.nodes:
            _put_callsign(w, cs)
            _put_position(w, pos)
        for a, b, f in p.links:
            _put_callsign(w, a)
            _put_callsign(w, b)
            w.put(f, 8)
    elif isinstance(p, UserPos):
        _put_callsign(w, p.callsign)
        w.put(p.time, 48)
        _put_position(w, p.position)
    elif isinstance(p, Handoff):
        if p.is_redirect:
            w.put(1, 8)
            _put_callsign(w, p.redirect)
        else:
            w.put(0, 8)
            w.put(p.frequency, 8)
            w.put(p.slot, 8)
            _put_position(w, p.es_position)
        w.put(len(p.replacement_vcis), 8)
        for old, new in p.replacement_vcis:
            w.put(old, 16)
            w.put(new, 16)
    elif isinstance(p, GvtUpdate):
        _put_callsign(w, p.reporter)
        w.put(p.lvt, 48)
    else:
        raise TypeError(f"not an orderwire packet: {p!r}")
    if p.vnc is not None:
        w.put(int(p.vnc.antimessage), 1)
        w.put(p.vnc.send_time, 32)
        w.put(p.vnc.receive_time, 32)
    return w


def encode(p: OrderwirePacket) -> bytes:
    """Serialize to the canonical encoding, zero-padded to a whole byte."""
    return _write(p).to_bytes()


def packet_size_bits(p: OrderwirePacket) -> int:
    return _write(p).nbits


def decode(data: bytes) -> OrderwirePacket:
    r = _BitReader(data)
    tag = r.get(8)
    kind = PacketKind(tag & 0x7F)
    if kind is PacketKind.MYCALL:
        p = MyCall(_get_callsign(r), r.get(48))
    elif kind is PacketKind.NEWSWITCH:
        p = NewSwitch()
    elif kind is PacketKind.SWITCHPOS:
        p = SwitchPos(r.get(48), _get_position(r))
    elif kind is PacketKind.TOPOLOGY:
        n_nodes, n_links = r.get(8), r.get(8)
        nodes = tuple((_get_callsign(r), _get_position(r)) for _ in range(n_nodes))
        links = tuple((_get_callsign(r), _get_callsign(r), r.get(8)) for _ in range(n_links))
        p = Topology(nodes, links)
    elif kind is PacketKind.USER_POS:
        p = UserPos(_get_callsign(r), r.get(48), _get_position(r))
    elif kind is PacketKind.HANDOFF:
        if r.get(8):
            fields = dict(redirect=_get_callsign(r))
        else:
            fields = dict(frequency=r.get(8), slot=r.get(8), es_position=_get_position(r))
        vcis = tuple((r.get(16), r.get(16)) for _ in range(r.get(8)))
        p = Handoff(**fields, replacement_vcis=vcis)
    else:
        p = GvtUpdate(_get_callsign(r), r.get(48))
    if tag & 0x80:
        hdr = VncHeader(bool(r.get(1)), r.get(32), r.get(32))
        p = with_vnc(p, hdr)
    return p


def with_vnc(p: OrderwirePacket, header: VncHeader | None) -> OrderwirePacket:
    return replace(p, vnc=header)


def describe(p: OrderwirePacket) -> str:
    """Compact one-token rendering used in logs."""
    k = p.kind.name
    if isinstance(p, MyCall):
        return f"{k}({p.callsign},{p.startup_time})"
    if isinstance(p, SwitchPos):
        return f"{k}{p.position}"
    if isinstance(p, UserPos):
        return f"{k}({p.callsign}){p.position}"
    if isinstance(p, Topology):
        return f"{k}(n={len(p.nodes)},l={len(p.links)})"
    if isinstance(p, Handoff):
        if p.is_redirect:
            return f"{k}(->{p.redirect})"
        return f"{k}(f={p.frequency},s={p.slot})"
    if isinstance(p, GvtUpdate):
        return f"{k}({p.reporter},{p.lvt})"
    return k
