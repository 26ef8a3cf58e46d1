"""RN handoff between ESs with and without predictive (VNC) configuration.

The RN follows a piecewise-linear track.  Every ``step_ms`` of real time its
actual position decides the serving ES (nearest, ties to the lower callsign).

Without VNC the handoff is only noticed at real time, so the RN's traffic stops
for the USER_POS report, the HANDOFF packet and a new round of beamforming at
the target ES.

With VNC a predictor dead-reckons the track ``lookahead_ms`` ahead and feeds a
Time Warp process whose state is the predicted serving ES.  Any handoff in that
predicted state is prepared early as a PNNI branch.  At real time each
prediction is verified (ES categorically, position within tolerance); a miss
cancels the prediction, rolls the process back, aborts the prepared branch and
replaces the message with the observed value.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field

from .core import GeoPosition, distance
from .perf import DEFAULT_TIMING, TimingConstants, phase3_time
from .pnni import HandoffDeferred, MobilePnni, PeerGroupTree, example_tree
from .vnc import INF, LogicalProcess, VncMessage, external, within_tolerance

LP_ID = "HANDOFF"


@dataclass(frozen=True)
class Track:
    """Waypoints ``(time_ms, position)``; the RN moves linearly between them and stops after the last."""

    points: tuple[tuple[int, GeoPosition], ...]

    def __post_init__(self):
        times = [t for t, _ in self.points]
        if not times or times != sorted(times) or len(set(times)) != len(times):
            raise ValueError("waypoint times must be strictly increasing")

    def _segment(self, t: float) -> int:
        times = [p[0] for p in self.points]
        return max(0, min(bisect.bisect_right(times, t) - 1, len(times) - 1))

    def position(self, t: float) -> GeoPosition:
        i = self._segment(t)
        t0, p0 = self.points[i]
        if i == len(self.points) - 1 or t <= t0:
            return p0
        t1, p1 = self.points[i + 1]
        f = (t - t0) / (t1 - t0)
        return GeoPosition(p0.x + f * (p1.x - p0.x), p0.y + f * (p1.y - p0.y))

    def velocity(self, t: float) -> tuple[float, float]:
        """Metres per millisecond on the segment in force at ``t``."""
        i = self._segment(t)
        if i == len(self.points) - 1:
            return (0.0, 0.0)
        (t0, p0), (t1, p1) = self.points[i], self.points[i + 1]
        return ((p1.x - p0.x) / (t1 - t0), (p1.y - p0.y) / (t1 - t0))

    def dead_reckon(self, now: float, ahead: float) -> GeoPosition:
        p = self.position(now)
        vx, vy = self.velocity(now)
        return GeoPosition(p.x + vx * ahead, p.y + vy * ahead)


@dataclass
class HandoffSetup:
    es_positions: dict[str, GeoPosition] = field(default_factory=lambda: {
        "ES1": GeoPosition(0.0, 0.0), "ES2": GeoPosition(1000.0, 0.0)})
    es_lns: dict[str, str] = field(default_factory=lambda: {"ES1": "A.1.1", "ES2": "A.2.2"})
    root: str = "A.3.1"
    rn: str = "RN1"
    rn_vcis: tuple[int, ...] = (42, 43)
    busy_vcis: dict[str, tuple[int, ...]] = field(default_factory=lambda: {"A.2.2": (42,)})
    step_ms: int = 1000
    end_ms: int = 120_000
    lookahead_ms: int = 10_000
    tolerance_m: float = 1.0
    rns_at_target: int = 0  # RNs already served by the target ES (U in the handoff cost)
    timing: TimingConstants = DEFAULT_TIMING

    def nearest(self, pos: GeoPosition) -> str:
        return min(self.es_positions, key=lambda es: (distance(pos, self.es_positions[es]), es))

    def blind_interruption_s(self) -> float:
        """USER_POS report, HANDOFF and beamforming at the target, all after the fact."""
        return self.timing.user_pos + phase3_time(self.rns_at_target, self.timing)


def straight_track(x0: float = 105.0, speed_mps: float = 10.0, end_ms: int = 120_000) -> Track:
    return Track(((0, GeoPosition(x0, 0.0)), (end_ms, GeoPosition(x0 + speed_mps * end_ms / 1000, 0.0))))


def turning_track() -> Track:
    """Heads for ES2, turns back just short of the midpoint, then crosses later."""
    return Track((
        (0, GeoPosition(105.0, 0.0)),
        (38_000, GeoPosition(485.0, 0.0)),
        (50_000, GeoPosition(365.0, 0.0)),
        (120_000, GeoPosition(1065.0, 0.0)),
    ))


@dataclass
class HandoffRun:
    vnc: bool
    handoffs: list[tuple[int, str, str]]  # final process state: (time, from, to)
    real_handoffs: list[tuple[int, str, str]]
    interruptions_s: list[float]
    rollbacks: int = 0
    antimessages: int = 0
    branch_aborts: int = 0
    deferred: int = 0
    gvt_history: list[float] = field(default_factory=list)
    log: list[str] = field(default_factory=list)

    @property
    def max_interruption_s(self) -> float:
        return max(self.interruptions_s, default=0.0)


def _tree() -> PeerGroupTree:
    return example_tree()


def _handler(setup: HandoffSetup):
    def handle(state, m: VncMessage):
        _, pos = m.payload
        es = setup.nearest(pos)
        if es != state["serving"]:
            state["handoffs"].append((m.header.receive_time, state["serving"], es))
            state["serving"] = es
        return state, []
    return handle


def _real_handoffs(setup: HandoffSetup, track: Track) -> list[tuple[int, str, str]]:
    out, serving = [], setup.nearest(track.position(0))
    for t in range(0, setup.end_ms + 1, setup.step_ms):
        es = setup.nearest(track.position(t))
        if es != serving:
            out.append((t, serving, es))
            serving = es
    return out


def _pnni(setup: HandoffSetup, start_es: str) -> MobilePnni:
    m = MobilePnni(_tree())
    for ln, vcis in setup.busy_vcis.items():
        for v in vcis:
            m.vcis.claim(ln, v, "other")
    m.attach(setup.rn, setup.es_lns[start_es], setup.root, list(setup.rn_vcis))
    return m


def run_without_vnc(track: Track, setup: HandoffSetup | None = None) -> HandoffRun:
    setup = setup or HandoffSetup()
    real = _real_handoffs(setup, track)
    pn = _pnni(setup, setup.nearest(track.position(0)))
    for t, _, new in real:
        pn.prepare(setup.rn, setup.es_lns[new])
        pn.complete(setup.rn)
    return HandoffRun(False, list(real), real, [setup.blind_interruption_s() for _ in real],
                      log=[s.line() for s in pn.log])


class _VncDriver:
    def __init__(self, setup: HandoffSetup, track: Track):
        self.s = setup
        self.track = track
        start = setup.nearest(track.position(0))
        self.pn = _pnni(setup, start)
        self.aborts = 0
        self.deferred = 0
        self.lp = LogicalProcess(LP_ID, _handler(setup), {"serving": start, "handoffs": []},
                                 tolerance=setup.tolerance_m, on_undo=self._undone)
        self.pending: dict[int, VncMessage] = {}  # receive_time -> message awaiting verification
        self.n = 0
        self.antis = 0
        self.serving = start
        self.prepared_for: str | None = None
        self.log: list[str] = []
        self.now = 0

    # bookkeeping ---------------------------------------------------------------
    def _undone(self, m: VncMessage, before) -> None:
        _, pos = m.payload
        if self.s.nearest(pos) != before["serving"] and self.prepared_for is not None:
            self._cancel(self.now)

    def _cancel(self, t) -> None:
        if self.pn.cancel(self.s.rn):
            self.aborts += 1
            self.log.append(f"{t} {LP_ID} abort_prepared {self.prepared_for}")
        self.prepared_for = None

    def _send(self, rt: int, now: int, pos: GeoPosition) -> VncMessage:
        self.n += 1
        m = external(self.n, LP_ID, rt, (self.s.nearest(pos), pos), send_time=now)
        self.lp.receive(m)
        self.lp.run()
        return m

    def _reconcile(self, now: int) -> None:
        """Keep exactly the branch the process currently predicts for the next handoff."""
        nxt = next((h for h in self.lp.state["handoffs"] if h[0] >= now and h[1] == self.serving), None)
        want = nxt[2] if nxt else None
        if want == self.prepared_for:
            return
        if self.prepared_for is not None:
            self._cancel(now)
        if want is not None:
            try:
                self.pn.prepare(self.s.rn, self.s.es_lns[want])
                self.prepared_for = want
                self.log.append(f"{now} {LP_ID} prepared {want} for {nxt[0]}")
            except HandoffDeferred:
                self.deferred += 1

    # main loop ----------------------------------------------------------------
    def run(self) -> HandoffRun:
        s, tr = self.s, self.track
        step, lam, end = s.step_ms, s.lookahead_ms, s.end_ms
        for rt in range(0, min(lam, end) + 1, step):
            self.pending[rt] = self._send(rt, 0, tr.dead_reckon(0, rt))
        real, interruptions, gvts = [], [], []
        for now in range(0, end + 1, step):
            self.now = now
            ahead = now + lam
            if now > 0 and ahead <= end:
                self.pending[ahead] = self._send(ahead, now, tr.dead_reckon(now, lam))
            self._reconcile(now)
            # verification: real time has reached this prediction's receive time
            pred = self.pending.pop(now)
            actual = tr.position(now)
            observed = (s.nearest(actual), actual)
            if not within_tolerance(pred.payload, observed, self.lp.tolerance):
                antis, _ = self.lp.receive(pred.anti())
                self.antis += 1 + len(antis)
                self.log.append(f"{now} {LP_ID} miss predicted={pred.payload[0]}@{pred.payload[1]} "
                                f"actual={observed[0]}@{actual}")
                self._send(now, now, actual)
                self._reconcile(now)
            # the real RN
            es = observed[0]
            if es != self.serving:
                real.append((now, self.serving, es))
                if self.prepared_for == es:
                    interruptions.append(0.0)
                else:
                    if self.prepared_for is not None:
                        self._cancel(now)
                    self.pn.prepare(s.rn, s.es_lns[es])
                    interruptions.append(s.blind_interruption_s())
                self.pn.complete(s.rn)
                self.prepared_for = None
                self.serving = es
                self.log.append(f"{now} {s.rn} handoff {real[-1][1]}->{es} interruption={interruptions[-1]:.3f}")
            gvt = min(now, self.lp.report()) if self.lp.report() < INF else now
            gvts.append(gvt)
            self.lp.fossil_collect(gvt)
        for frm, to, k in self.lp.rollback_log:
            self.log.append(f"ROLLBACK {LP_ID} {frm} {to} antimessages={k}")
        self.log += [sig.line() for sig in self.pn.log]
        return HandoffRun(True, list(self.lp.state["handoffs"]), real, interruptions,
                          self.lp.rollbacks, self.antis, self.aborts, self.deferred, gvts, self.log)


def run_with_vnc(track: Track, setup: HandoffSetup | None = None) -> HandoffRun:
    return _VncDriver(setup or HandoffSetup(), track).run()


class PositionPredictor:
    """Per-RN Time Warp process fed with dead-reckoned positions ``lookahead_ms`` ahead.

    ``tick`` is called periodically with the RN's true state; it verifies every
    prediction whose receive time has arrived, repairs misses, then predicts again.
    """

    def __init__(self, rn: str, lookahead_ms: int, tolerance_m: float = 1.0):
        self.rn = rn
        self.lookahead_ms = lookahead_ms
        self.lp = LogicalProcess(f"VNC-{rn}", lambda st, m: ({"pos": m.payload}, []), {"pos": None},
                                 tolerance=tolerance_m)
        self.pending: dict[int, VncMessage] = {}
        self.n = 0

    def _send(self, rt: int, now: int, pos: GeoPosition) -> VncMessage:
        self.n += 1
        m = external(self.n, self.lp.id, rt, pos, send_time=now)
        self.lp.receive(m)
        self.lp.run()
        return m

    def tick(self, now: int, pos: GeoPosition, velocity: tuple[float, float]) -> list[tuple[float, float, int]]:
        """Returns the rollbacks ``(from_lvt, to_time, antimessages)`` this tick caused."""
        before = len(self.lp.rollback_log)
        for rt in sorted(t for t in self.pending if t <= now):
            pred = self.pending.pop(rt)
            if rt == now and not within_tolerance(pred.payload, pos, self.lp.tolerance):
                self.lp.receive(pred.anti())
                self._send(now, now, pos)
        vx, vy = velocity
        ahead = self.lookahead_ms
        rt = now + ahead
        self.pending[rt] = self._send(rt, now, GeoPosition(pos.x + vx * ahead, pos.y + vy * ahead))
        self.lp.fossil_collect(now)
        return self.lp.rollback_log[before:]
