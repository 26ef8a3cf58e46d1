"""Closed-form configuration-time and orderwire-capacity models."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from math import comb
from typing import Iterable

from .core import VNC_HEADER_BITS


@dataclass(frozen=True)
class TimingConstants:
    """Packet latencies (s) from the radio timing runs plus platform fit constants.

    ``k_bf`` is back-solved from 7.5 s of beam steering for four RNs and
    ``k_el`` so that ``k_el * 2**(m*b)`` is the 2 s weight-table build for
    four beams of QPSK.
    """

    user_pos: float = 0.677
    newswitch: float = 0.439
    handoff: float = 0.473
    mycall: float = 0.492
    switchpos: float = 0.679
    topology: float = 0.664
    topology_per_es: float = 0.1
    k_top: float = 0.01
    k_bf: float = 7.5 / 4
    k_el: float = 2.0 / 2 ** (2 * 4)
    m: int = 2
    b: int = 4

    def __post_init__(self):
        for name in ("user_pos", "newswitch", "handoff", "mycall", "switchpos", "topology",
                     "topology_per_es", "k_top", "k_bf", "k_el"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.m < 1 or self.b < 1:
            raise ValueError("m and b must be >= 1")

    @property
    def table_time(self) -> float:
        return self.k_el * 2 ** (self.m * self.b)


DEFAULT_TIMING = TimingConstants()


def phase1_time(n: int, T: float, L: int, R: int, tc: TimingConstants = DEFAULT_TIMING) -> float:
    """ES-ES configuration: election/discovery, topology search, TOPOLOGY distribution."""
    if n < 1:
        raise ValueError("need at least one ES")
    discovery = max(T, tc.newswitch * (n - 1) + tc.mycall * (n - 1))
    search = tc.k_top * (n * n + (L + 1) ** R)
    distribute = tc.topology + tc.topology_per_es * (n - 1)
    return discovery + search + distribute


MAX_PHASE2_RNS = 60


def phase2_time(u: int, tc: TimingConstants = DEFAULT_TIMING) -> float:
    """RN configuration at one ES with ``u`` RNs; beamforming repeats for every RN subset."""
    if u < 0:
        raise ValueError("u must be non-negative")
    if u > MAX_PHASE2_RNS:
        raise OverflowError(f"phase2_time is only evaluated up to {MAX_PHASE2_RNS} RNs")
    total = tc.user_pos * u
    for r in range(1, u + 1):
        total += comb(u, r) * (tc.k_bf * r + tc.table_time)
    return total


def phase3_time(u: int, tc: TimingConstants = DEFAULT_TIMING) -> float:
    """Handoff: one HANDOFF packet, then phase II again at the new ES with u+1 RNs."""
    if u < 0:
        raise ValueError("u must be non-negative")
    return tc.handoff + phase2_time(u + 1, tc)


@dataclass(frozen=True)
class AlohaModel:
    bandwidth_bps: float = 19200.0
    efficiency: float = 0.18
    packet_bits: int = 400
    vnc_enabled: bool = False

    def __post_init__(self):
        if not 0 < self.efficiency < 1:
            raise ValueError("efficiency must lie in (0, 1)")
        if self.bandwidth_bps <= 0 or self.packet_bits <= 0:
            raise ValueError("bandwidth and packet size must be positive")

    @property
    def effective_packet_bits(self) -> float:
        """Bits on air per real update; VNC adds one 65-bit-longer virtual twin."""
        if self.vnc_enabled:
            return 2 * self.packet_bits + VNC_HEADER_BITS
        return float(self.packet_bits)


def vnc_load_factor(packet_bits: int) -> float:
    return (2 * packet_bits + VNC_HEADER_BITS) / packet_bits


def aloha_max_update_rate(num_rn: int, a: AlohaModel, handoff_fraction: float = 0.0) -> float:
    """Largest per-RN position update rate (updates/minute) the Aloha channel carries."""
    if num_rn < 1:
        raise ValueError("need at least one RN")
    if handoff_fraction < 0:
        raise ValueError("handoff_fraction must be non-negative")
    usable = a.efficiency * a.bandwidth_bps
    per_second = usable / (a.effective_packet_bits * num_rn * (1 + handoff_fraction))
    return per_second * 60.0


def offered_load_bps(num_rn: int, rate_per_min: float, a: AlohaModel, handoff_fraction: float = 0.0) -> float:
    return num_rn * rate_per_min / 60.0 * a.effective_packet_bits * (1 + handoff_fraction)


# --- CSV emitters ---------------------------------------------------------------


def _csv(header: list[str], rows: Iterable[Iterable]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([f"{v:.6f}" if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def p1_csv(ns: Iterable[int], T: float, L: int, R: int | None, tc: TimingConstants = DEFAULT_TIMING) -> str:
    """``n,p1_seconds``; with ``R=None`` every ES pair is a constrained link."""
    rows = ((n, phase1_time(n, T, L, n * (n - 1) // 2 if R is None else R, tc)) for n in ns)
    return _csv(["n", "p1_seconds"], rows)


def p2_csv(us: Iterable[int], tc: TimingConstants = DEFAULT_TIMING) -> str:
    return _csv(["u", "p2_seconds", "p3_seconds"], ((u, phase2_time(u, tc), phase3_time(u, tc)) for u in us))


def aloha_csv(num_rns: Iterable[int], a: AlohaModel, handoff_fraction: float = 0.0) -> str:
    plain = AlohaModel(a.bandwidth_bps, a.efficiency, a.packet_bits, False)
    vnc = AlohaModel(a.bandwidth_bps, a.efficiency, a.packet_bits, True)
    rows = (
        (n, aloha_max_update_rate(n, plain, handoff_fraction), aloha_max_update_rate(n, vnc, handoff_fraction))
        for n in num_rns
    )
    return _csv(["num_rn", "updates_per_min_novnc", "updates_per_min_vnc"], rows)
