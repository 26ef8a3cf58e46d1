"""Network Control Protocol state machines for edge switches (ES) and remote nodes (RN).

``step_es`` and ``step_rn`` are pure: they copy the state, apply one event and
return the new state with a list of actions (broadcasts, point-to-point sends,
timers, link changes, metric marks).  The scenario runner owns sequencing and
turns actions into kernel events.

The state names are reconstructed from the protocol narrative; the published
state diagrams are not available in machine-readable form.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Callable, Mapping

from .core import (
    Callsign,
    GeoPosition,
    Handoff,
    MyCall,
    NewSwitch,
    OrderwirePacket,
    PositionTable,
    SimTime,
    SwitchPos,
    Topology,
    UserPos,
    check_callsign,
    describe,
    distance,
    ms,
)
from .kernel import DEFAULT_LATENCY_MS
from .core import PacketKind
from .topology import (
    BeamAllocationError,
    BeamConstraints,
    BeamPlan,
    TopologyInfeasible,
    TopologySolution,
    allocate_beams,
    candidate_links,
    nearest_neighbor_topology,
    solve_topology,
    topology_cost_seconds,
)

ES_STATES = ("Booting", "AwaitingPeers", "Master", "Slave", "Configured", "Failed")
RN_STATES = ("Booting", "AwaitingHandoff", "Connected")
TIMER_EVENTS = ("TIMER_MYCALL", "TIMER_NEWSWITCH", "TIMER_TOPOLOGY_WAIT", "TIMER_TOPOLOGY_DONE",
                "TIMER_RETRY", "TIMER_UPDATE")
RX_EVENTS = tuple(f"RX_{k.name}" for k in PacketKind)
ES_EVENTS = ("BOOT", "GPS_POLL", "LINK_DOWN", "FAIL") + TIMER_EVENTS[:4] + RX_EVENTS
RN_EVENTS = ("BOOT", "GPS_POLL", "LINK_DOWN") + TIMER_EVENTS[4:] + RX_EVENTS


# --- events and actions ---------------------------------------------------------


@dataclass(frozen=True)
class NcpEvent:
    name: str
    time: SimTime
    position: GeoPosition = GeoPosition()
    src: Callsign | None = None
    packet: OrderwirePacket | None = None
    via: str = ""  # "bcast" or "p2p" for received packets

    @staticmethod
    def rx(time, position, src, packet, via) -> "NcpEvent":
        return NcpEvent(f"RX_{packet.kind.name}", time, position, src, packet, via)

    def token(self) -> str:
        return f"{self.name}:{self.src}" if self.src else self.name


@dataclass(frozen=True)
class Broadcast:
    packet: OrderwirePacket
    jitter: bool = False

    def render(self):
        return f"bcast:{describe(self.packet)}" + ("~" if self.jitter else "")


@dataclass(frozen=True)
class Send:
    dst: Callsign
    packet: OrderwirePacket
    delay: SimTime = 0

    def render(self):
        return f"send:{self.dst}:{describe(self.packet)}" + (f"@+{self.delay}" if self.delay else "")


@dataclass(frozen=True)
class OpenLink:
    peer: Callsign

    def render(self):
        return f"open:{self.peer}"


@dataclass(frozen=True)
class CloseLink:
    peer: Callsign

    def render(self):
        return f"close:{self.peer}"


@dataclass(frozen=True)
class StartTimer:
    name: str
    delay: SimTime
    arg: str | None = None

    def render(self):
        return f"timer:{self.name}" + (f":{self.arg}" if self.arg else "") + f"={self.delay}"


@dataclass(frozen=True)
class CancelTimer:
    name: str
    arg: str | None = None

    def render(self):
        return f"cancel:{self.name}" + (f":{self.arg}" if self.arg else "")


@dataclass(frozen=True)
class Mark:
    what: str
    detail: str = ""

    def render(self):
        return f"mark:{self.what}" + (f"={self.detail}" if self.detail else "")


Action = Broadcast | Send | OpenLink | CloseLink | StartTimer | CancelTimer | Mark


@dataclass(frozen=True)
class FsmTransition:
    time: SimTime
    node: Callsign
    role: str
    from_state: str
    event: str
    to_state: str
    actions: tuple[str, ...] = ()

    def line(self) -> str:
        parts = [str(self.time), self.node, self.role, self.from_state, self.event, self.to_state]
        return " ".join(parts + list(self.actions))

    @classmethod
    def parse(cls, line: str) -> "FsmTransition":
        f = line.split()
        return cls(int(f[0]), f[1], f[2], f[3], f[4], f[5], tuple(f[6:]))


# --- configuration -------------------------------------------------------------


@dataclass(frozen=True)
class NcpConfig:
    mycall_timer_ms: SimTime = 20_000
    backoff_factor: int = 2
    backoff_cap: int = 16
    fix_newswitch_retry: bool = False
    fix_topology_wait: bool = False
    newswitch_retry_ms: SimTime = 2 * (DEFAULT_LATENCY_MS[PacketKind.NEWSWITCH]
                                       + DEFAULT_LATENCY_MS[PacketKind.SWITCHPOS])
    constraints: BeamConstraints = BeamConstraints()
    k_top: float = 1e-7
    topology_per_es_ms: SimTime = 100
    real_topology: bool = True
    tolerance_m: float = 0.0
    max_beams: int = 4
    slots_per_beam: int = 4
    rn_retry_ms: SimTime = 3_000
    rn_update_ms: SimTime = 2_000
    beamform_delay_ms: SimTime = 0
    master_beacon: bool = True

    @classmethod
    def with_fixes(cls, enabled: bool, **kw) -> "NcpConfig":
        return cls(fix_newswitch_retry=enabled, fix_topology_wait=enabled, **kw)


# --- pure helpers ---------------------------------------------------------------


def elect_master(candidates: Mapping[Callsign, SimTime]) -> Callsign:
    """Oldest startup time wins; equal times go to the smallest callsign."""
    if not candidates:
        raise ValueError("no candidates")
    return min(candidates, key=lambda cs: (candidates[cs], cs))


def mycall_backoff(t_current: SimTime, factor: int = 2, cap: SimTime | None = None) -> SimTime:
    if t_current <= 0:
        raise ValueError("timer must be positive")
    t = t_current * factor
    return min(t, cap) if cap is not None else t


def handoff_check(
    rn: Callsign,
    current: Callsign,
    table: PositionTable | Mapping[Callsign, GeoPosition],
    pos: GeoPosition,
    tolerance: float = 0.0,
    rlink: float | None = None,
) -> Callsign | None:
    """Return an ES nearer than ``current`` by more than ``tolerance`` meters, else None."""
    positions = table.positions() if isinstance(table, PositionTable) else dict(table)
    if current not in positions:
        return None
    d_cur = distance(pos, positions[current])
    best = None
    for cs in sorted(positions):
        if cs == current:
            continue
        d = distance(pos, positions[cs])
        if rlink is not None and d > rlink:
            continue
        if best is None or d < best[0]:
            best = (d, cs)
    if best is not None and d_cur - best[0] > tolerance:
        return best[1]
    return None


def topology_wait_estimate_ms(mycall_count: int, cfg: NcpConfig) -> SimTime:
    """How long a slave waits for TOPOLOGY, sized from the MYCALLs it has heard."""
    n = mycall_count + 1
    r = n * (n - 1) // 2
    est = topology_cost_seconds(n, cfg.constraints.fmax, r, cfg.k_top) + 1.0
    return min(ms(est), 3_600_000) + cfg.mycall_timer_ms


# --- ES state machine -----------------------------------------------------------


@dataclass
class EsState:
    callsign: Callsign
    phase: str = "Booting"
    startup_time: SimTime = 0
    mycall_timer_T: SimTime = 20_000
    mycall_round: int = 0
    mycall_seen: dict[Callsign, SimTime] = field(default_factory=dict)
    switch_table: PositionTable = field(default_factory=PositionTable)
    user_table: PositionTable = field(default_factory=PositionTable)
    topology: TopologySolution | None = None
    beam_plan: BeamPlan | None = None
    master: Callsign | None = None
    contacts: set[Callsign] = field(default_factory=set)
    members: set[Callsign] = field(default_factory=set)
    pending_switchpos: set[Callsign] = field(default_factory=set)
    computing: bool = False
    dirty: bool = False
    solution_in_progress: TopologySolution | None = None
    topology_version: int = 0
    awaiting_topology: bool = False
    last_announced: GeoPosition | None = None

    def clone(self) -> "EsState":
        c = copy.copy(self)
        c.mycall_seen = dict(self.mycall_seen)
        c.switch_table = self.switch_table.copy()
        c.user_table = self.user_table.copy()
        c.contacts = set(self.contacts)
        c.members = set(self.members)
        c.pending_switchpos = set(self.pending_switchpos)
        return c

    @property
    def key(self) -> tuple[SimTime, Callsign]:
        return (self.startup_time, self.callsign)

    def oldest_known(self) -> bool:
        """Is this ES the election winner among every MYCALL it has heard?"""
        cands = dict(self.mycall_seen)
        cands[self.callsign] = self.startup_time
        return elect_master(cands) == self.callsign


def _mycall(s: EsState) -> MyCall:
    return MyCall(s.callsign, s.startup_time)


def _contact(s: EsState, peer: Callsign, cfg: NcpConfig, acts: list) -> None:
    acts += [OpenLink(peer), Send(peer, NewSwitch())]
    s.pending_switchpos.add(peer)
    if cfg.fix_newswitch_retry:
        acts.append(StartTimer("NEWSWITCH", cfg.newswitch_retry_ms, peer))


def _drop_pending(s: EsState, acts: list) -> None:
    for peer in sorted(s.pending_switchpos):
        acts.append(CancelTimer("NEWSWITCH", peer))
    s.pending_switchpos.clear()


def _restart_election(s: EsState, cfg: NcpConfig, acts: list, *, close: set[Callsign] = frozenset()) -> None:
    for peer in sorted(close):
        acts.append(CloseLink(peer))
    _drop_pending(s, acts)
    s.phase = "AwaitingPeers"
    s.master = None
    s.members = set()
    s.contacts = set()
    s.mycall_seen = {}
    s.topology = None
    s.computing = s.dirty = False
    s.solution_in_progress = None
    s.mycall_round = 1
    acts += [CancelTimer("TOPOLOGY_DONE"), CancelTimer("TOPOLOGY_WAIT"),
             Broadcast(_mycall(s), jitter=True), StartTimer("MYCALL", s.mycall_timer_T)]


def _become_master(s: EsState, ev: NcpEvent, cfg: NcpConfig, acts: list) -> None:
    s.phase = "Master"
    s.master = s.callsign
    s.switch_table.update(s.callsign, ev.position, ev.time)
    s.last_announced = ev.position
    s.members.add(s.callsign)
    acts.append(Mark("master", s.callsign))
    for peer in sorted(s.mycall_seen):
        if peer not in s.pending_switchpos and peer not in s.members:
            _contact(s, peer, cfg, acts)
    if not s.pending_switchpos:
        _start_topology(s, ev, cfg, acts)
    if cfg.master_beacon:
        acts.append(StartTimer("MYCALL", s.mycall_timer_T))


def _start_topology(s: EsState, ev: NcpEvent, cfg: NcpConfig, acts: list) -> None:
    if s.computing:
        s.dirty = True
        return
    positions = {cs: s.switch_table.position(cs) for cs in s.members}
    try:
        if cfg.real_topology:
            sol = solve_topology(positions, cfg.constraints)
        else:
            sol = nearest_neighbor_topology(positions, cfg.constraints)
    except TopologyInfeasible as exc:
        acts.append(Mark("topology_infeasible", exc.reason))
        return
    r = len(candidate_links(positions, cfg.constraints))
    cost = ms(topology_cost_seconds(len(positions), cfg.constraints.fmax, r, cfg.k_top))
    s.computing = True
    s.solution_in_progress = sol
    acts += [StartTimer("TOPOLOGY_DONE", cost), Mark("reconfig_start", str(s.topology_version + 1))]


def _topology_stale(s: EsState) -> bool:
    """Does the switch table differ from the topology last computed (or in progress)?"""
    ref = s.solution_in_progress if s.computing else s.topology
    if ref is None:
        return True
    return ref.positions() != {cs: s.switch_table.position(cs) for cs in s.members}


def _topology_packet(sol: TopologySolution) -> Topology:
    return Topology(sol.nodes, sol.links)


def _es_boot(s, ev, cfg, acts):
    if s.phase != "Booting":
        return
    s.phase = "AwaitingPeers"
    s.startup_time = ev.time
    s.mycall_timer_T = cfg.mycall_timer_ms
    s.mycall_round = 1
    s.last_announced = ev.position
    acts += [Broadcast(_mycall(s)), StartTimer("MYCALL", s.mycall_timer_T)]


def _es_rx_mycall(s, ev, cfg, acts):
    pkt: MyCall = ev.packet
    peer = pkt.callsign
    if s.phase == "Booting" or peer == s.callsign:
        return
    s.mycall_seen[peer] = pkt.startup_time
    if s.phase == "AwaitingPeers":
        if s.oldest_known() and peer not in s.pending_switchpos:
            _contact(s, peer, cfg, acts)
    elif s.phase == "Master":
        if (pkt.startup_time, peer) < s.key:
            # a lost election: an older ES was never heard before
            acts.append(Mark("yield", peer))
            _restart_election(s, cfg, acts, close=s.members - {s.callsign})
            s.mycall_seen[peer] = pkt.startup_time
            return
        acts += [Mark("late_mycall", peer), Mark("reconfig_trigger", peer)]
        if s.members != {s.callsign} or s.topology is not None:
            cap = cfg.mycall_timer_ms * cfg.backoff_cap
            s.mycall_timer_T = mycall_backoff(s.mycall_timer_T, cfg.backoff_factor, cap)
        if peer not in s.pending_switchpos:
            _contact(s, peer, cfg, acts)


def _es_timer_mycall(s, ev, cfg, acts):
    if s.phase == "AwaitingPeers":
        if s.oldest_known() and (s.mycall_seen or s.mycall_round >= 2):
            _become_master(s, ev, cfg, acts)
        else:
            s.mycall_round += 1
            acts += [Broadcast(_mycall(s), jitter=True), StartTimer("MYCALL", s.mycall_timer_T)]
    elif s.phase == "Master" and cfg.master_beacon:
        # the beacon lets a master elected from a partial view discover an older one
        acts += [Broadcast(_mycall(s), jitter=True), StartTimer("MYCALL", s.mycall_timer_T)]


def _es_rx_newswitch(s, ev, cfg, acts):
    src = ev.src
    if s.phase == "Booting":
        return
    if s.phase == "Master":
        # only an older ES contacts a master; merge under it
        acts.append(Mark("yield", src))
        for peer in sorted(s.members - {s.callsign}):
            acts.append(CloseLink(peer))
        _drop_pending(s, acts)
        s.members = set()
        s.topology = None
        s.computing = s.dirty = False
        acts += [CancelTimer("TOPOLOGY_DONE"), CancelTimer("MYCALL")]
    if s.phase in ("AwaitingPeers", "Master"):
        # release anyone this node had gathered provisionally so they re-elect
        for peer in sorted((s.members | s.pending_switchpos) - {s.callsign, src}):
            acts.append(CloseLink(peer))
        s.members = set()
        s.switch_table = PositionTable()
        s.phase = "Slave"
        _drop_pending(s, acts)
        acts.append(CancelTimer("MYCALL"))
    s.master = src
    s.contacts.add(src)
    s.last_announced = ev.position
    s.awaiting_topology = True
    acts.append(Send(src, SwitchPos(ev.time, ev.position)))
    if cfg.fix_topology_wait:
        acts.append(StartTimer("TOPOLOGY_WAIT", topology_wait_estimate_ms(len(s.mycall_seen), cfg)))


def _es_timer_newswitch(s, ev, cfg, acts):
    peer = ev.src
    if s.phase in ("AwaitingPeers", "Master") and peer in s.pending_switchpos:
        acts += [Mark("newswitch_retry", peer), OpenLink(peer), Send(peer, NewSwitch()),
                 StartTimer("NEWSWITCH", cfg.newswitch_retry_ms, peer)]


def _es_rx_switchpos(s, ev, cfg, acts):
    src = ev.src
    pkt: SwitchPos = ev.packet
    if s.phase not in ("AwaitingPeers", "Master"):
        return
    if s.phase == "AwaitingPeers" and src not in s.pending_switchpos:
        return
    s.switch_table.update(src, pkt.position, pkt.time)
    was_pending = src in s.pending_switchpos
    s.pending_switchpos.discard(src)
    s.members.add(src)
    if was_pending:
        acts.append(CancelTimer("NEWSWITCH", src))
    if s.phase != "Master" or s.pending_switchpos:
        return
    if _topology_stale(s):
        _start_topology(s, ev, cfg, acts)
    elif not s.computing:
        # retransmitted SWITCHPOS: the slave is missing the current TOPOLOGY
        acts.append(Send(src, _topology_packet(s.topology)))


def _es_timer_topology_done(s, ev, cfg, acts):
    if s.phase != "Master" or not s.computing:
        return
    s.computing = False
    sol = s.solution_in_progress
    s.solution_in_progress = None
    live = {cs for cs, _ in sol.nodes}
    s.topology = sol
    s.topology_version += 1
    pkt = _topology_packet(sol)
    dsts = sorted((s.members & live) - {s.callsign})
    for k, dst in enumerate(dsts):
        acts.append(Send(dst, pkt, delay=(k + 1) * cfg.topology_per_es_ms))
    acts.append(Mark("topology_done", f"{s.topology_version}:{len(sol.nodes)}"))
    if s.dirty:
        s.dirty = False
        _start_topology(s, ev, cfg, acts)


def _es_rx_topology(s, ev, cfg, acts):
    if s.phase in ("Booting", "Master"):
        return
    pkt: Topology = ev.packet
    sol = TopologySolution(pkt.nodes, pkt.links)
    s.topology = sol
    s.switch_table = PositionTable()
    for cs, pos in pkt.nodes:
        s.switch_table.update(cs, pos, ev.time)
    s.phase = "Configured"
    s.master = ev.src
    s.contacts.add(ev.src)
    s.awaiting_topology = False
    acts += [CancelTimer("TOPOLOGY_WAIT"), CancelTimer("MYCALL"), Mark("topology_rx", str(len(pkt.nodes)))]


def _es_timer_topology_wait(s, ev, cfg, acts):
    if s.phase not in ("Slave", "Configured") or not s.awaiting_topology:
        return
    pkt = SwitchPos(ev.time, ev.position)
    acts.append(Mark("switchpos_retry"))
    for peer in sorted(s.contacts):
        acts += [OpenLink(peer), Send(peer, pkt)]
    acts.append(StartTimer("TOPOLOGY_WAIT", topology_wait_estimate_ms(len(s.mycall_seen), cfg)))


def _es_gps_poll(s, ev, cfg, acts):
    if s.last_announced is None or s.phase in ("Booting", "AwaitingPeers"):
        return
    if distance(ev.position, s.last_announced) <= cfg.tolerance_m:
        return
    s.last_announced = ev.position
    acts.append(Mark("moved", str(ev.position)))
    if s.phase == "Master":
        s.switch_table.update(s.callsign, ev.position, ev.time)
        acts.append(Mark("reconfig_trigger", s.callsign))
        _start_topology(s, ev, cfg, acts)
    else:
        acts.append(Broadcast(_mycall(s)))


def _es_link_down(s, ev, cfg, acts):
    peer = ev.src
    if peer in s.user_table:
        del s.user_table.entries[peer]
        _replan(s, ev.position, cfg)
        return
    if s.phase in ("Slave", "Configured") and peer == s.master:
        acts.append(Mark("master_lost", peer))
        _restart_election(s, cfg, acts)
    elif s.phase in ("Slave", "Configured"):
        s.contacts.discard(peer)
    elif s.phase in ("Master", "AwaitingPeers") and (peer in s.members or peer in s.pending_switchpos):
        s.members.discard(peer)
        s.mycall_seen.pop(peer, None)
        if peer in s.pending_switchpos:
            s.pending_switchpos.discard(peer)
            acts.append(CancelTimer("NEWSWITCH", peer))
        s.switch_table.entries.pop(peer, None)
        acts += [Mark("member_lost", peer), Mark("reconfig_trigger", peer)]
        if s.phase == "Master" and not s.pending_switchpos:
            _start_topology(s, ev, cfg, acts)


def _replan(s: EsState, here: GeoPosition, cfg: NcpConfig, extra: dict | None = None) -> BeamPlan:
    users = s.user_table.positions()
    if extra:
        users.update(extra)
    plan = allocate_beams(here, users, cfg.constraints, cfg.max_beams, cfg.slots_per_beam)
    s.beam_plan = plan
    return plan


def es_candidates(s: EsState, here: GeoPosition) -> dict[Callsign, GeoPosition]:
    """ES positions this node can rank RNs against; a deprived ES only knows itself."""
    table = s.switch_table.positions() if s.topology is not None or s.phase == "Master" else {}
    table[s.callsign] = here
    return table


def _es_rx_user_pos(s, ev, cfg, acts):
    if s.phase not in ("Master", "Slave", "Configured"):
        return
    pkt: UserPos = ev.packet
    rn = pkt.callsign
    here = ev.position
    if cfg.fix_topology_wait and s.phase != "Master" and s.topology is None:
        acts.append(Mark("refused", rn))
        return
    table = es_candidates(s, here)
    rlink = cfg.constraints.rlink

    if rn in s.user_table:
        s.user_table.update(rn, pkt.position, ev.time)
        target = handoff_check(rn, s.callsign, table, pkt.position, cfg.tolerance_m, rlink)
        if target is not None:
            del s.user_table.entries[rn]
            try:
                _replan(s, here, cfg)
            except BeamAllocationError:
                pass
            acts += [Send(rn, Handoff(redirect=target)), Mark("handoff_start", f"{rn}>{target}")]
            return
        try:
            _replan(s, here, cfg)
        except (BeamAllocationError, ValueError):
            acts.append(Mark("steer_failed", rn))
        return

    ranked = sorted((distance(p, pkt.position), cs) for cs, p in table.items()
                    if distance(p, pkt.position) <= rlink)
    names = [cs for _, cs in ranked]
    if s.callsign not in names:
        return
    if ev.via == "bcast" and names[0] != s.callsign:
        return
    try:
        plan = _replan(s, here, cfg, {rn: pkt.position})
    except BeamAllocationError:
        idx = names.index(s.callsign)
        if idx + 1 < len(names):
            nxt = names[idx + 1]
            acts += [OpenLink(rn), Send(rn, Handoff(redirect=nxt)), Mark("redirect", f"{rn}>{nxt}")]
        else:
            acts.append(Mark("reject", rn))
        return
    s.user_table.update(rn, pkt.position, ev.time)
    _, freq, slot = plan.lookup(rn)
    deprived = s.phase != "Master" and s.topology is None
    acts += [OpenLink(rn), Send(rn, Handoff(frequency=freq, slot=slot, es_position=here),
                                delay=cfg.beamform_delay_ms),
             Mark("associate", rn + (":deprived" if deprived else ""))]


def _ignore(s, ev, cfg, acts):
    pass


_ES_HANDLERS: dict[str, Callable] = {
    "BOOT": _es_boot,
    "GPS_POLL": _es_gps_poll,
    "LINK_DOWN": _es_link_down,
    "TIMER_MYCALL": _es_timer_mycall,
    "TIMER_NEWSWITCH": _es_timer_newswitch,
    "TIMER_TOPOLOGY_WAIT": _es_timer_topology_wait,
    "TIMER_TOPOLOGY_DONE": _es_timer_topology_done,
    "RX_MYCALL": _es_rx_mycall,
    "RX_NEWSWITCH": _es_rx_newswitch,
    "RX_SWITCHPOS": _es_rx_switchpos,
    "RX_TOPOLOGY": _es_rx_topology,
    "RX_USER_POS": _es_rx_user_pos,
    "RX_HANDOFF": _ignore,
    "RX_GVT_UPDATE": _ignore,
}


def step_es(s: EsState, ev: NcpEvent, cfg: NcpConfig) -> tuple[EsState, list[Action]]:
    """Apply one event to an ES.  Packets that make no sense in the current phase are ignored."""
    handler = _ES_HANDLERS.get(ev.name)
    if handler is None:
        raise ValueError(f"event {ev.name!r} is not in the ES alphabet")
    s = s.clone()
    acts: list[Action] = []
    handler(s, ev, cfg, acts)
    return s, acts


# --- RN state machine -----------------------------------------------------------


@dataclass
class RnState:
    callsign: Callsign
    phase: str = "Booting"
    associated_es: Callsign | None = None
    assigned: tuple[int, int] | None = None
    retry_count: int = 0
    retry_timer: SimTime = 3_000
    update_timer: SimTime = 2_000
    previous_es: Callsign | None = None
    redirect_target: Callsign | None = None

    def clone(self) -> "RnState":
        return copy.copy(self)


def _user_pos(s: RnState, ev: NcpEvent) -> UserPos:
    return UserPos(s.callsign, ev.time, ev.position)


def _rn_rebroadcast(s: RnState, ev: NcpEvent, acts: list) -> None:
    s.phase = "AwaitingHandoff"
    s.redirect_target = None
    acts += [Broadcast(_user_pos(s, ev)), StartTimer("RETRY", s.retry_timer)]


def _rn_boot(s, ev, cfg, acts):
    if s.phase != "Booting":
        return
    s.retry_timer = cfg.rn_retry_ms
    s.update_timer = cfg.rn_update_ms
    _rn_rebroadcast(s, ev, acts)


def _rn_timer_retry(s, ev, cfg, acts):
    if s.phase != "AwaitingHandoff":
        return
    s.retry_count += 1
    _rn_rebroadcast(s, ev, acts)


def _valid_redirect(s: RnState, target: str, src: str) -> bool:
    try:
        check_callsign(target)
    except ValueError:
        return False
    return target not in (s.callsign, src)


def _rn_rx_handoff(s, ev, cfg, acts):
    pkt: Handoff = ev.packet
    src = ev.src
    if s.phase == "Booting":
        return
    if pkt.is_redirect:
        if s.phase == "Connected" and src != s.associated_es:
            return
        if not _valid_redirect(s, pkt.redirect, src):
            s.retry_count += 1
            acts.append(Mark("redirect_unknown", pkt.redirect))
            if s.phase == "Connected":
                s.previous_es = s.associated_es
                s.associated_es, s.assigned = None, None
                acts.append(CancelTimer("UPDATE"))
            _rn_rebroadcast(s, ev, acts)
            return
        if s.phase == "Connected":
            s.previous_es = s.associated_es
            s.associated_es, s.assigned = None, None
            acts.append(CancelTimer("UPDATE"))
        s.phase = "AwaitingHandoff"
        s.redirect_target = pkt.redirect
        acts += [OpenLink(pkt.redirect), Send(pkt.redirect, _user_pos(s, ev)),
                 StartTimer("RETRY", s.retry_timer)]
        return
    if s.phase == "Connected":
        if src == s.associated_es:
            s.assigned = (pkt.frequency, pkt.slot)
        return
    s.phase = "Connected"
    s.associated_es = src
    s.assigned = (pkt.frequency, pkt.slot)
    s.retry_count = 0
    s.redirect_target = None
    acts += [CancelTimer("RETRY"), OpenLink(src), StartTimer("UPDATE", s.update_timer)]
    if s.previous_es is not None and s.previous_es != src:
        acts += [CloseLink(s.previous_es), Mark("handoff_done", f"{s.previous_es}>{src}")]
    else:
        acts.append(Mark("connected", src))
    s.previous_es = None


def _rn_timer_update(s, ev, cfg, acts):
    if s.phase != "Connected":
        return
    acts += [Send(s.associated_es, _user_pos(s, ev)), StartTimer("UPDATE", s.update_timer)]


def _rn_link_down(s, ev, cfg, acts):
    peer = ev.src
    if s.phase == "Connected" and peer == s.associated_es:
        acts += [Mark("es_lost", peer), CancelTimer("UPDATE")]
        s.associated_es, s.assigned, s.previous_es = None, None, None
        _rn_rebroadcast(s, ev, acts)
    elif s.phase == "AwaitingHandoff" and peer == s.redirect_target:
        acts.append(Mark("redirect_unknown", peer))
        s.retry_count += 1
        _rn_rebroadcast(s, ev, acts)


_RN_HANDLERS: dict[str, Callable] = {
    "BOOT": _rn_boot,
    "GPS_POLL": _ignore,
    "LINK_DOWN": _rn_link_down,
    "TIMER_RETRY": _rn_timer_retry,
    "TIMER_UPDATE": _rn_timer_update,
    "RX_HANDOFF": _rn_rx_handoff,
}


def step_rn(s: RnState, ev: NcpEvent, cfg: NcpConfig) -> tuple[RnState, list[Action]]:
    if ev.name not in RN_EVENTS:
        raise ValueError(f"event {ev.name!r} is not in the RN alphabet")
    s = s.clone()
    acts: list[Action] = []
    _RN_HANDLERS.get(ev.name, _ignore)(s, ev, cfg, acts)
    return s, acts
