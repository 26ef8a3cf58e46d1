"""Scenario runner: wires the kernel, the orderwire and the NCP machines together.

The runner owns everything the pure state machines cannot: event sequencing,
timers, link set-up, mobility, failure injection and metric collection.  A run
produces the FSM transition log plus a :class:`RunMetrics` record.
"""

from __future__ import annotations

import csv
import difflib
import io
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from .config import ScenarioConfig, serialize_config
from .core import (
    Callsign,
    GeoPosition,
    GvtUpdate,
    OrderwirePacket,
    PacketKind,
    SimTime,
    Topology,
    ms,
)
from .handoff import PositionPredictor
from .kernel import (
    ChannelModel,
    LinkAbsent,
    MobilityState,
    Orderwire,
    Simulator,
    TrafficModel,
    mobility_step,
    poisson_call_source,
    resample_motion,
)
from .ncp import (
    Broadcast,
    CancelTimer,
    CloseLink,
    EsState,
    FsmTransition,
    Mark,
    NcpConfig,
    NcpEvent,
    OpenLink,
    RnState,
    Send,
    StartTimer,
    step_es,
    step_rn,
)
from .topology import BeamConstraints

EXIT_OK, EXIT_FAILURE_DIAGNOSED, EXIT_CONFIG = 0, 2, 3
PREDICTION_TOLERANCE_M = 1.0


# --- layout and motion ----------------------------------------------------------


def grid_layout(n: int, spacing: float) -> list[GeoPosition]:
    """Row-major, near-square grid with ``spacing`` meters between neighbours."""
    cols = max(1, math.ceil(math.sqrt(n)))
    return [GeoPosition((i % cols) * spacing, (i // cols) * spacing) for i in range(n)]


def _fold(v: float, lo: float, hi: float) -> tuple[float, bool]:
    """Mirror ``v`` into [lo, hi]; the flag says whether the velocity flipped."""
    w = hi - lo
    if w <= 0:
        return lo, False
    k = math.floor((v - lo) / w)
    r = (v - lo) - k * w
    return (lo + r, False) if k % 2 == 0 else (hi - r, True)


@dataclass
class Motion:
    state: MobilityState
    anchor: SimTime = 0
    bounds: tuple[float, float, float, float] | None = None  # xmin, xmax, ymin, ymax

    def position(self, now: SimTime) -> GeoPosition:
        if now > self.anchor and self.state.speed > 0:
            m = mobility_step(self.state, (now - self.anchor) / 1000.0)
            if self.bounds is not None:
                x0, x1, y0, y1 = self.bounds
                x, fx = _fold(m.position.x, x0, x1)
                y, fy = _fold(m.position.y, y0, y1)
                d = m.direction
                if fx:
                    d = (360.0 - d) % 360.0
                if fy:
                    d = (180.0 - d) % 360.0
                m = MobilityState(GeoPosition(x, y), m.speed, d, m.max_speed)
            self.state = m
        self.anchor = max(self.anchor, now)
        return self.state.position


# --- metrics --------------------------------------------------------------------


@dataclass
class RunMetrics:
    config_complete_ms: SimTime | None = None
    full_config_times: list[SimTime] = field(default_factory=list)
    reconfig_starts: list[SimTime] = field(default_factory=list)
    reconfig_completions: list[SimTime] = field(default_factory=list)
    overlapping_reconfigs: int = 0
    link_usage: Counter = field(default_factory=Counter)  # (beam, slot) -> samples in use
    tuples_in_use: Counter = field(default_factory=Counter)  # distinct tuples -> samples
    handoffs: int = 0
    handoff_latencies_ms: list[SimTime] = field(default_factory=list)
    rollbacks: int = 0
    rollback_depths_ms: list[SimTime] = field(default_factory=list)
    collision_rate: float = 0.0
    partition: bool = False
    deadlock: bool = False
    deprived_associations: int = 0
    associations: dict[Callsign, Callsign] = field(default_factory=dict)
    masters: list[tuple[SimTime, Callsign]] = field(default_factory=list)
    marks: Counter = field(default_factory=Counter)
    calls_carried: int = 0
    calls_blocked: int = 0
    gvt_reports: int = 0
    bits_real: int = 0
    bits_virtual: int = 0
    final_masters: list[Callsign] = field(default_factory=list)
    events: int = 0

    def usage_cdf(self) -> list[tuple[int, float]]:
        """CDF of the number of distinct (beam, slot) tuples in use at a sample instant."""
        total = sum(self.tuples_in_use.values())
        if not total:
            return []
        acc, out = 0, []
        for k in sorted(self.tuples_in_use):
            acc += self.tuples_in_use[k]
            out.append((k, acc / total))
        return out

    @property
    def failed(self) -> bool:
        return self.partition or self.deadlock

    def csv_rows(self) -> list[tuple[str, str]]:
        rows = [
            ("config_complete_s", "" if self.config_complete_ms is None else f"{self.config_complete_ms / 1000:.3f}"),
            ("reconfigurations", str(len(self.reconfig_starts))),
            ("overlapping_reconfigurations", str(self.overlapping_reconfigs)),
            ("handoffs", str(self.handoffs)),
            ("mean_handoff_latency_s", _mean_s(self.handoff_latencies_ms)),
            ("rollbacks", str(self.rollbacks)),
            ("collision_rate", f"{self.collision_rate:.6f}"),
            ("partition", str(int(self.partition))),
            ("deadlock", str(int(self.deadlock))),
            ("deprived_associations", str(self.deprived_associations)),
            ("calls_carried", str(self.calls_carried)),
            ("calls_blocked", str(self.calls_blocked)),
            ("bits_real", str(self.bits_real)),
            ("bits_virtual", str(self.bits_virtual)),
        ]
        return rows


def _mean_s(vals_ms: list[int]) -> str:
    return f"{sum(vals_ms) / len(vals_ms) / 1000:.3f}" if vals_ms else ""


METRICS_HEADER = ["metric", "value"]
LINK_USAGE_HEADER = ["tuples_in_use", "samples", "cdf"]


def metrics_csv(m: RunMetrics) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(METRICS_HEADER)
    w.writerows(m.csv_rows())
    return buf.getvalue()


def link_usage_csv(m: RunMetrics) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(LINK_USAGE_HEADER)
    for k, c in m.usage_cdf():
        w.writerow([k, m.tuples_in_use[k], f"{c:.6f}"])
    return buf.getvalue()


# --- the runner -----------------------------------------------------------------


def ncp_config_from(cfg: ScenarioConfig) -> NcpConfig:
    return NcpConfig.with_fixes(
        cfg.fixes_enabled,
        mycall_timer_ms=ms(cfg.mycall_timer),
        constraints=BeamConstraints(cfg.rlink, cfg.fmax, cfg.imult, cfg.twidth, cfg.rwidth),
        k_top=cfg.k_top,
        real_topology=cfg.use_real_topology,
        tolerance_m=cfg.tolerance,
        max_beams=cfg.max_beams,
        slots_per_beam=cfg.slots_per_beam,
        rn_retry_ms=ms(cfg.rn_retry),
        rn_update_ms=ms(cfg.rn_update),
        beamform_delay_ms=ms(cfg.beamform_delay),
    )


class Scenario:
    def __init__(self, cfg: ScenarioConfig, boot_order: list[Callsign] | None = None):
        self.cfg = cfg
        self.ncp = ncp_config_from(cfg)
        self.sim = Simulator(cfg.seed)
        drop = cfg.drop_map()
        self.ow = Orderwire(
            self.sim,
            ChannelModel("broadcast_aloha", drop=drop),
            ChannelModel("reliable_p2p", drop=dict(drop)),
            collisions=cfg.collision_model == "aloha",
            vnc=cfg.vnc_enabled,
            vnc_contend=cfg.vnc_contend,
            vnc_lookahead_ms=ms(cfg.lookahead),
        )
        self.ow.link_down_handler = self._on_link_down
        self.metrics = RunMetrics()
        self.log: list[str] = []
        self.states: dict[Callsign, EsState | RnState] = {}
        self.motion: dict[Callsign, Motion] = {}
        self.dead: set[Callsign] = set()
        self._timers: dict[tuple, object] = {}
        self._closing: Callsign | None = None
        self._configured = False
        self._handoff_started: dict[Callsign, SimTime] = {}
        self._episodes: list[list] = []  # [trigger time, completion time or None]
        self._captured = 0
        self._computing_eps: list[int] = []
        self._pending_fail: set[tuple[Callsign, Callsign]] = set()
        self._predictors: dict[Callsign, PositionPredictor] = {}

        self.es_names = [f"ES{i + 1}" for i in range(cfg.num_es)]
        self.rn_names = [f"RN{i + 1}" for i in range(cfg.num_rn)]
        if boot_order is not None and sorted(boot_order) != sorted(self.es_names):
            raise ValueError("boot_order must be a permutation of the ES callsigns")
        self.boot_order = list(boot_order) if boot_order is not None else list(self.es_names)
        es_pos = grid_layout(cfg.num_es, cfg.es_dist)
        xs, ys = [p.x for p in es_pos], [p.y for p in es_pos]
        d = cfg.es_dist
        self.area = (min(xs) - d, max(xs) + d, min(ys) - d, max(ys) + d)
        for name, pos in zip(self.es_names, es_pos):
            mstate = MobilityState(pos, cfg.es_speed, cfg.es_dir, max(cfg.max_speed, cfg.es_speed))
            self._attach(name, EsState(name), Motion(mstate))
        place = self.sim.rng["placement"]
        x0, x1, y0, y1 = self.area
        for name in self.rn_names:
            pos = GeoPosition(float(place.uniform(x0, x1)), float(place.uniform(y0, y1)))
            mstate = MobilityState(pos, cfg.rn_speed, cfg.rn_dir, max(cfg.max_speed, cfg.rn_speed))
            self._attach(name, RnState(name), Motion(mstate, bounds=self.area))

    # plumbing ----------------------------------------------------------------
    def _attach(self, name: str, state, motion: Motion) -> None:
        self.states[name] = state
        self.motion[name] = motion
        self.ow.attach(name, lambda n=name: self.position(n), lambda src, p, via, n=name: self._rx(n, src, p, via))

    def position(self, node: Callsign) -> GeoPosition:
        return self.motion[node].position(self.sim.now)

    def is_es(self, node: Callsign) -> bool:
        return isinstance(self.states[node], EsState)

    def _rx(self, node: Callsign, src: Callsign, p: OrderwirePacket, via: str) -> None:
        if node in self.dead or self.states[node].phase == "Booting":
            return  # radio not powered yet
        if p.kind == PacketKind.GVT_UPDATE:
            self.metrics.gvt_reports += 1
            return
        self.dispatch(node, NcpEvent.rx(self.sim.now, self.position(node), src, p, via))

    def _on_link_down(self, node: Callsign, peer: Callsign) -> None:
        if node == self._closing or node in self.dead:
            return
        self._notify_link_down(node, peer)

    def _notify_link_down(self, node: Callsign, peer: Callsign) -> None:
        key = (node, peer)
        if key in self._pending_fail:
            return
        self._pending_fail.add(key)

        def fire():
            self._pending_fail.discard(key)
            if node not in self.dead:
                self.dispatch(node, NcpEvent("LINK_DOWN", self.sim.now, self.position(node), peer))

        self.sim.after(0, node, "link-down", fire, peer)

    # dispatch ----------------------------------------------------------------
    def dispatch(self, node: Callsign, ev: NcpEvent) -> None:
        if node in self.dead:
            return
        before = self.states[node]
        if isinstance(before, EsState):
            after, acts = step_es(before, ev, self.ncp)
            role = "ES"
        else:
            after, acts = step_rn(before, ev, self.ncp)
            role = "RN"
        self.states[node] = after
        if not (ev.name == "GPS_POLL" and not acts):
            tr = FsmTransition(ev.time, node, role, before.phase, ev.token(), after.phase,
                               tuple(a.render() for a in acts))
            self.log.append(tr.line())
        self.metrics.events += 1
        for a in acts:
            self._execute(node, a, acts)

    def _execute(self, node: Callsign, a, acts: list) -> None:
        sim = self.sim
        if isinstance(a, Broadcast):
            if a.jitter and self.cfg.jitter > 0:
                delay = int(sim.rng["jitter"].integers(0, ms(self.cfg.jitter) + 1))
                sim.after(delay, node, "bcast", lambda: self._broadcast(node, a.packet))
            else:
                self._broadcast(node, a.packet)
        elif isinstance(a, Send):
            if a.delay:
                sim.after(a.delay, node, "send", lambda: self._send(node, a.dst, a.packet))
            else:
                self._send(node, a.dst, a.packet)
        elif isinstance(a, OpenLink):
            try:
                self.ow.open_link(node, a.peer)
            except LinkAbsent:
                self._notify_link_down(node, a.peer)
        elif isinstance(a, CloseLink):
            self._closing = node
            try:
                self.ow.close_link(node, a.peer)
            finally:
                self._closing = None
        elif isinstance(a, StartTimer):
            self._start_timer(node, a)
        elif isinstance(a, CancelTimer):
            ev = self._timers.pop((node, a.name, a.arg), None)
            if ev is not None:
                ev.cancel()
        elif isinstance(a, Mark):
            self._mark(node, a, acts)

    def _broadcast(self, node: Callsign, p: OrderwirePacket) -> None:
        if node not in self.dead:
            self.ow.broadcast(node, p)

    def _send(self, node: Callsign, dst: Callsign, p: OrderwirePacket) -> None:
        if node in self.dead:
            return
        try:
            self.ow.p2p_send(node, dst, p)
        except LinkAbsent:
            self._notify_link_down(node, dst)

    def _start_timer(self, node: Callsign, a: StartTimer) -> None:
        key = (node, a.name, a.arg)
        old = self._timers.pop(key, None)
        if old is not None:
            old.cancel()

        def fire():
            self._timers.pop(key, None)
            self.dispatch(node, NcpEvent(f"TIMER_{a.name}", self.sim.now, self.position(node), a.arg))

        self._timers[key] = self.sim.after(a.delay, node, f"timer-{a.name}", fire, a.arg or "")

    # metrics -----------------------------------------------------------------
    def _mark(self, node: Callsign, a: Mark, acts: list) -> None:
        m = self.metrics
        now = self.sim.now
        m.marks[a.what] += 1
        if a.what == "reconfig_trigger":
            self._open_episode(now)
        elif a.what == "reconfig_start":
            if self._captured == len(self._episodes):
                self._open_episode(now)  # initial configuration has no trigger
            self._computing_eps = list(range(self._captured, len(self._episodes)))
            self._captured = len(self._episodes)
        elif a.what == "topology_done":
            sends = [x.delay for x in acts if isinstance(x, Send) and isinstance(x.packet, Topology)]
            done = now + (max(sends) + self.ow.latency[PacketKind.TOPOLOGY] if sends else 0)
            for i in self._computing_eps:
                self._episodes[i][1] = done
            self._computing_eps = []
            m.reconfig_completions.append(done)
            self._check_configured()
        elif a.what == "topology_rx":
            self._check_configured()
        elif a.what == "master":
            m.masters.append((now, node))
            self._check_configured()
        elif a.what == "associate":
            rn, _, tag = a.detail.partition(":")
            if tag == "deprived":
                m.deprived_associations += 1
        elif a.what == "handoff_start":
            rn = a.detail.split(">")[0]
            self._handoff_started[rn] = now
        elif a.what == "handoff_done":
            m.handoffs += 1
            started = self._handoff_started.pop(node, None)
            if started is not None:
                m.handoff_latencies_ms.append(now - started)
            mo = self.motion[node]
            mo.position(now)
            mo.state = resample_motion(mo.state, self.sim.rng["mobility"])

    def _open_episode(self, now: SimTime) -> None:
        """A reconfiguration runs from its trigger until its TOPOLOGY deliveries finish."""
        if any(done is None or done > now for _, done in self._episodes):
            self.metrics.overlapping_reconfigs += 1
        self._episodes.append([now, None])
        self.metrics.reconfig_starts.append(now)

    def _check_configured(self) -> None:
        alive = [n for n in self.es_names if n not in self.dead]
        want = set(alive)
        ok = True
        for n in alive:
            topo = self.states[n].topology
            if topo is None or {cs for cs, _ in topo.nodes} != want:
                ok = False
                break
        if ok and not self._configured:
            now = self.sim.now
            self.metrics.full_config_times.append(now)
            if self.metrics.config_complete_ms is None:
                self.metrics.config_complete_ms = now
        self._configured = ok

    # scheduled side processes -----------------------------------------------
    def _boot(self, node: Callsign) -> None:
        self.dispatch(node, NcpEvent("BOOT", self.sim.now, self.position(node)))

    def _gps_poll(self, node: Callsign) -> None:
        if node in self.dead:
            return
        self.dispatch(node, NcpEvent("GPS_POLL", self.sim.now, self.position(node)))
        self.sim.after(ms(self.cfg.gps_poll), node, "gps", lambda: self._gps_poll(node))

    def _fail_master(self) -> None:
        masters = sorted(n for n in self.es_names if n not in self.dead and self.states[n].phase == "Master")
        if not masters:
            return
        node = masters[0]
        st = self.states[node]
        self.log.append(FsmTransition(self.sim.now, node, "ES", st.phase, "FAIL", "Failed").line())
        st = st.clone()
        st.phase = "Failed"
        self.states[node] = st
        self.dead.add(node)
        for key in [k for k in self._timers if k[0] == node]:
            self._timers.pop(key).cancel()
        self.ow.detach(node)
        self._configured = False
        self._check_configured()

    def _sample_usage(self) -> None:
        tuples = 0
        for n in self.es_names:
            if n in self.dead:
                continue
            plan = self.states[n].beam_plan
            if plan is None:
                continue
            for rn, (b, _f, slot) in plan.assignment.items():
                if rn in self.states[n].user_table:
                    self.metrics.link_usage[(b, slot)] += 1
                    tuples += 1
        if tuples:
            self.metrics.tuples_in_use[tuples] += 1
        self.sim.after(1000, "-", "sample", self._sample_usage)

    def _gvt_round(self) -> None:
        for n in self.rn_names + self.es_names:
            st = self.states[n]
            if n in self.dead:
                continue
            peer = st.associated_es if isinstance(st, RnState) else (
                st.master if st.phase in ("Slave", "Configured") else None)
            if peer and self.ow.has_link(n, peer):
                lvt = self.sim.now + ms(self.cfg.lookahead)
                self.ow.p2p_send(n, peer, GvtUpdate(n, lvt))
            if isinstance(st, RnState) and st.phase == "Connected":
                self._predict(n)
        self.sim.after(ms(self.cfg.gvt_interval), "-", "gvt", self._gvt_round)

    def _predict(self, rn: Callsign) -> None:
        now = self.sim.now
        pr = self._predictors.get(rn)
        if pr is None:
            pr = self._predictors[rn] = PositionPredictor(rn, ms(self.cfg.lookahead), PREDICTION_TOLERANCE_M)
        mo = self.motion[rn]
        pos = mo.position(now)
        rad = math.radians(mo.state.direction)
        v = mo.state.speed / 1000.0
        for frm, to, k in pr.tick(now, pos, (v * math.sin(rad), v * math.cos(rad))):
            self.metrics.rollbacks += 1
            self.metrics.rollback_depths_ms.append(int(frm - to))
            self.log.append(FsmTransition(now, rn, "VNC", str(int(frm)), "ROLLBACK", str(int(to)),
                                          (f"antimessages={k}",)).line())

    def _call(self, rn: Callsign) -> None:
        st = self.states[rn]
        if st.phase == "Connected":
            self.metrics.calls_carried += 1
        else:
            self.metrics.calls_blocked += 1

    # run -----------------------------------------------------------------------
    def run(self) -> RunMetrics:
        cfg, sim = self.cfg, self.sim
        end = cfg.end_time_ms
        stagger = ms(cfg.startup_stagger)
        for i, n in enumerate(self.boot_order):
            sim.at(i * stagger, n, "boot", lambda n=n: self._boot(n))
            if cfg.es_speed > 0:
                # receivers are not phase-locked: each ES polls at its own offset
                phase = int(sim.rng["gps"].integers(0, ms(cfg.gps_poll)))
                sim.at(i * stagger + ms(cfg.gps_poll) + phase, n, "gps", lambda n=n: self._gps_poll(n))
        rn0 = ms(cfg.rn_start)
        traffic = TrafficModel(cfg.vc_call_time, cfg.vc_call_duration)
        for j, n in enumerate(self.rn_names):
            sim.at(rn0 + j * stagger + stagger // 2, n, "boot", lambda n=n: self._boot(n))
            for setup, _teardown in poisson_call_source(traffic, sim.rng["traffic"], 0, end):
                sim.at(setup, n, "call", lambda n=n: self._call(n))
        if self.rn_names:
            sim.at(1000, "-", "sample", self._sample_usage)
        if cfg.vnc_enabled:
            sim.at(ms(cfg.gvt_interval), "-", "gvt", self._gvt_round)
        if cfg.fail_master_at >= 0:
            sim.at(ms(cfg.fail_master_at), "-", "fail", self._fail_master)
        sim.run_until(end)
        return self._finish()

    def _finish(self) -> RunMetrics:
        m = self.metrics
        alive = [n for n in self.es_names if n not in self.dead]
        masters = [n for n in alive if self.states[n].phase == "Master"]
        m.final_masters = masters
        m.deadlock = any(self.states[n].pending_switchpos for n in masters) and not self._configured
        master_done = any(self.states[n].topology is not None for n in masters)
        m.partition = master_done and any(
            self.states[n].topology is None for n in alive if n not in masters)
        m.associations = {
            n: self.states[n].associated_es
            for n in self.rn_names
            if self.states[n].phase == "Connected"
        }
        m.collision_rate = self.ow.collision_rate()
        m.bits_real = self.ow.bits_real
        m.bits_virtual = self.ow.bits_virtual
        return m

    # outputs -------------------------------------------------------------------
    def transitions_text(self) -> str:
        return "\n".join(self.log) + ("\n" if self.log else "")

    def summary(self) -> str:
        m = self.metrics
        lines = [
            f"seed {self.cfg.seed}",
            f"edge switches {self.cfg.num_es}, remote nodes {self.cfg.num_rn}",
            f"end time {self.cfg.end_time_ms / 1000:.1f} s, events {m.events}",
            "configuration complete: "
            + ("never" if m.config_complete_ms is None else f"{m.config_complete_ms / 1000:.3f} s"),
            f"masters at end: {' '.join(m.final_masters) or 'none'}",
            f"reconfigurations: {len(m.reconfig_starts)} ({m.overlapping_reconfigs} overlapping)",
            f"handoffs: {m.handoffs}",
            f"associations: {len(m.associations)} of {self.cfg.num_rn}",
            f"collision rate: {m.collision_rate:.4f}",
        ]
        if m.deadlock:
            lines.append("DIAGNOSIS deadlock: master still waiting for SWITCHPOS")
        if m.partition:
            lines.append("DIAGNOSIS partition: an edge switch never received TOPOLOGY")
            if m.deprived_associations:
                lines.append(f"  deprived edge switch answered USER_POS {m.deprived_associations} times")
        return "\n".join(lines) + "\n"

    def write_outputs(self, out: str | Path) -> None:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "transitions.log").write_text(self.transitions_text())
        (out / "metrics.csv").write_text(metrics_csv(self.metrics))
        (out / "link_usage.csv").write_text(link_usage_csv(self.metrics))
        (out / "summary.txt").write_text(self.summary())
        (out / "scenario.cfg").write_text(serialize_config(self.cfg))


def run_scenario(cfg: ScenarioConfig, out: str | Path | None = None,
                 boot_order: list[Callsign] | None = None) -> tuple[RunMetrics, list[str]]:
    sc = Scenario(cfg, boot_order)
    m = sc.run()
    if out is not None:
        sc.write_outputs(out)
    return m, sc.log


def exit_code(m: RunMetrics) -> int:
    return EXIT_FAILURE_DIAGNOSED if m.failed else EXIT_OK


# --- golden comparison ----------------------------------------------------------


def _normalize(lines: list[str], ignore_nodes: set[str] | None) -> list[str]:
    out = []
    for ln in lines:
        ln = ln.strip()
        if not ln:
            continue
        tr = FsmTransition.parse(ln)
        if ignore_nodes and tr.node in ignore_nodes:
            continue
        out.append(tr.line())
    return out


def compare_golden(log: list[str], golden: list[str], ignore_nodes: set[str] | None = None) -> list[str]:
    """Unified diff of the two transition logs after parsing; empty means identical."""
    a = _normalize(golden, ignore_nodes)
    b = _normalize(log, ignore_nodes)
    return list(difflib.unified_diff(a, b, "golden", "log", lineterm="", n=1))
