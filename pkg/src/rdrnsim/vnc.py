"""Virtual Network Configuration: Time Warp execution of configuration processes.

Logical processes (LPs) run ahead of real time on predicted inputs.  Each
processed message keeps the state that preceded it, so a straggler (a message
older than the LP's last processed one) or an antimessage for something already
processed rolls the LP back, emits antimessages for everything it sent since,
and leaves the undone inputs queued for re-execution.

Message identity is causal: external inputs get ``(n,)`` and the k-th output of
processing message ``m`` gets ``m.id + (k,)``.  Messages are processed in
``(receive_time, id)`` order, which is the same total order a sequential
simulator would use, so a quiesced Time Warp run must end in the sequential
state.  An incarnation number distinguishes a re-sent message from the one it
replaces, so an antimessage only ever annihilates its own twin.
"""

from __future__ import annotations

import bisect
import copy
import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Iterable, Iterator

from .core import GeoPosition, GvtUpdate, OrderwirePacket, SimTime, VncHeader, distance, with_vnc

INF = math.inf


class RollbackError(RuntimeError):
    """A rollback tried to undo committed (verified or fossil-collected) work."""


@dataclass(frozen=True)
class VncMessage:
    id: tuple[int, ...]
    src: str
    dst: str
    header: VncHeader
    payload: Any = None
    incarnation: int = 0

    @property
    def key(self) -> tuple:
        return (self.header.receive_time, self.id)

    @property
    def match(self) -> tuple:
        return (self.id, self.incarnation)

    @property
    def is_anti(self) -> bool:
        return self.header.antimessage

    def anti(self) -> "VncMessage":
        return replace(self, header=replace(self.header, antimessage=True))


def external(n: int, dst: str, receive_time: SimTime, payload: Any, send_time: SimTime | None = None) -> VncMessage:
    st = receive_time if send_time is None else send_time
    return VncMessage((n,), "env", dst, VncHeader(False, st, receive_time), payload)


Handler = Callable[[Any, VncMessage], tuple[Any, list[tuple[str, SimTime, Any]]]]


@dataclass
class _Record:
    msg: VncMessage
    before: Any
    outputs: list[VncMessage]


class LogicalProcess:
    """One Time Warp process.  ``handler(state, msg) -> (state, [(dst, delay, payload)])``."""

    def __init__(self, lp_id: str, handler: Handler, state: Any, tolerance: float = 0.0,
                 on_undo: Callable[[VncMessage, Any], None] | None = None):
        self.id = lp_id
        self.handler = handler
        self.state = state
        self.initial_state = copy.deepcopy(state)
        self.tolerance = tolerance
        self.on_undo = on_undo
        self.lvt: float = -INF
        self.queue: list[VncMessage] = []  # unprocessed, sorted by key
        self.done: list[_Record] = []  # processed, in key order
        self.orphans: dict[tuple, VncMessage] = {}  # antimessages that beat their twin
        self.committed: float = -INF  # nothing with receive_time < committed may be undone
        self.fossils = 0
        self.rollbacks = 0
        self.rollback_log: list[tuple[float, float, int]] = []  # (from lvt, to time, antimessages)
        self.outbox: list[VncMessage] = []
        self.committed_ids: list[tuple] = []
        self._incarnation = itertools.count(1)

    # queue helpers ------------------------------------------------------------
    def _insert(self, m: VncMessage) -> None:
        keys = [q.key for q in self.queue]
        self.queue.insert(bisect.bisect_right(keys, m.key), m)

    def _last_key(self):
        return self.done[-1].msg.key if self.done else None

    def snapshot_times(self) -> list[SimTime]:
        return [r.msg.header.receive_time for r in self.done]

    def report(self) -> float:
        """Earliest time this LP could still change: its GVT contribution."""
        return self.queue[0].header.receive_time if self.queue else INF

    # receive ------------------------------------------------------------------
    def receive(self, m: VncMessage) -> tuple[list[VncMessage], bool]:
        """Accept a message; returns (antimessages to send, whether a rollback happened)."""
        if m.dst != self.id:
            raise ValueError(f"message for {m.dst} delivered to {self.id}")
        if m.header.receive_time < self.committed:
            raise RollbackError(f"{self.id}: message at {m.header.receive_time} is below GVT {self.committed}")
        if m.is_anti:
            return self._receive_anti(m)
        if m.match in self.orphans:
            del self.orphans[m.match]
            return [], False
        antis: list[VncMessage] = []
        rolled = False
        last = self._last_key()
        if last is not None and m.key < last:
            antis = self._undo_while(lambda r: r.msg.key > m.key, m.header.receive_time)
            rolled = True
        self._insert(m)
        return antis, rolled

    def _receive_anti(self, m: VncMessage) -> tuple[list[VncMessage], bool]:
        for i, q in enumerate(self.queue):
            if q.match == m.match:
                del self.queue[i]
                return [], False
        for r in self.done:
            if r.msg.match == m.match:
                antis = self._undo_while(lambda rr: rr.msg.key >= m.key, m.header.receive_time)
                for i, q in enumerate(self.queue):
                    if q.match == m.match:
                        del self.queue[i]
                        break
                return antis, True
        self.orphans[m.match] = m
        return [], False

    # processing ---------------------------------------------------------------
    def has_work(self) -> bool:
        return bool(self.queue)

    def step(self) -> list[VncMessage]:
        """Process the earliest unprocessed message; returns the messages it sends."""
        m = self.queue.pop(0)
        before = copy.deepcopy(self.state)
        new_state, outs = self.handler(copy.deepcopy(self.state), m)
        sent = []
        now = m.header.receive_time
        for k, (dst, delay, payload) in enumerate(outs):
            if delay < 0:
                raise ValueError("output delay must be non-negative")
            sent.append(VncMessage(m.id + (k,), self.id, dst, VncHeader(False, now, now + delay),
                                   payload, next(self._incarnation)))
        self.state = new_state
        self.lvt = now
        self.done.append(_Record(m, before, sent))
        return sent

    def run(self) -> list[VncMessage]:
        out = []
        while self.queue:
            out += self.step()
        return out

    # rollback -----------------------------------------------------------------
    def _undo_while(self, pred, to_time) -> list[VncMessage]:
        antis: list[VncMessage] = []
        from_lvt = self.lvt
        while self.done and pred(self.done[-1]):
            r = self.done.pop()
            if r.msg.header.receive_time < self.committed:
                raise RollbackError(
                    f"{self.id}: undoing message at {r.msg.header.receive_time} below commit point {self.committed}")
            self.state = r.before
            antis += [o.anti() for o in reversed(r.outputs)]
            self._insert(r.msg)
            if self.on_undo is not None:
                self.on_undo(r.msg, r.before)
        self.lvt = self.done[-1].msg.header.receive_time if self.done else -INF
        self.rollbacks += 1
        self.rollback_log.append((from_lvt, to_time, len(antis)))
        return antis

    def rollback(self, to: SimTime) -> list[VncMessage]:
        """Undo everything with receive_time > ``to``; returns the antimessages to send."""
        if not self.done or self.done[-1].msg.header.receive_time <= to:
            return []
        return self._undo_while(lambda r: r.msg.header.receive_time > to, to)

    def rollback_before(self, t: SimTime) -> list[VncMessage]:
        """Undo everything with receive_time >= ``t``."""
        if not self.done or self.done[-1].msg.header.receive_time < t:
            return []
        return self._undo_while(lambda r: r.msg.header.receive_time >= t, t)

    def fossil_collect(self, gvt: float) -> int:
        """Drop undo records older than ``gvt``; they can never be rolled back again."""
        self.committed = max(self.committed, gvt)
        keep = [r for r in self.done if r.msg.header.receive_time >= gvt]
        freed = len(self.done) - len(keep)
        self.committed_ids += [r.msg.id for r in self.done[:freed]]
        self.done = keep
        self.fossils += freed
        return freed

    def processed_ids(self) -> list[tuple]:
        return self.committed_ids + [r.msg.id for r in self.done]


def receive_message(lp: LogicalProcess, m: VncMessage) -> tuple[LogicalProcess, bool]:
    """Deliver ``m`` and process forward.  The antimessages generated go to ``lp.outbox``."""
    antis, rolled = lp.receive(m)
    lp.outbox.extend(antis + lp.run())
    return lp, rolled


# --- GVT ----------------------------------------------------------------------


@dataclass(frozen=True)
class GvtState:
    reported_lvts: dict[str, float] = field(default_factory=dict)
    gvt: float = -INF
    real_time: float = 0.0

    @property
    def lookahead(self) -> float:
        return self.gvt - self.real_time


def update_gvt(g: GvtState, reports: dict[str, float], in_flight: Iterable[float] = (),
               real_time: float | None = None) -> GvtState:
    """Centralized GVT: min over reports and in-flight receive times, never decreasing."""
    if not reports:
        raise ValueError("need at least one LVT report")
    candidate = min(itertools.chain(reports.values(), in_flight))
    return GvtState(dict(reports), max(g.gvt, candidate), g.real_time if real_time is None else real_time)


# --- verification against real time -------------------------------------------


def within_tolerance(predicted: Any, actual: Any, tolerance: float) -> bool:
    """Positions compare by distance, numbers by difference, everything else categorically."""
    if isinstance(predicted, GeoPosition) and isinstance(actual, GeoPosition):
        return distance(predicted, actual) <= tolerance
    if isinstance(predicted, (int, float)) and isinstance(actual, (int, float)) \
            and not isinstance(predicted, bool):
        return abs(predicted - actual) <= tolerance
    if isinstance(predicted, tuple) and isinstance(actual, tuple) and len(predicted) == len(actual):
        return all(within_tolerance(p, a, tolerance) for p, a in zip(predicted, actual))
    return predicted == actual


@dataclass(frozen=True)
class Verdict:
    ok: bool
    antimessages: tuple[VncMessage, ...] = ()


def verify_real(lp: LogicalProcess, predicted: VncMessage, actual_value: Any) -> Verdict:
    """Check a message ``lp`` sent against what really happened at its receive time.

    Inside tolerance the message is confirmed.  Otherwise the sender is rolled
    back to the message's send time; the antimessages returned include the one
    cancelling ``predicted`` itself.
    """
    if within_tolerance(predicted.payload, actual_value, lp.tolerance):
        return Verdict(True)
    antis = lp.rollback_before(predicted.header.send_time)
    if not any(a.match == predicted.match for a in antis):
        antis.append(predicted.anti())
    return Verdict(False, tuple(antis))


# --- orderwire load -------------------------------------------------------------


def vnc_packet_stream(
    real: Iterable[tuple[SimTime, OrderwirePacket]],
    enabled: bool = True,
    lookahead_ms: SimTime = 10_000,
    gvt_interval_ms: SimTime = 1_000,
    reporter: str = "MASTER",
) -> Iterator[tuple[SimTime, OrderwirePacket]]:
    """Interleave one virtual twin per real packet plus periodic GVT_UPDATE packets."""
    if not enabled:
        yield from real
        return
    next_gvt = gvt_interval_ms
    for t, p in real:
        while next_gvt <= t:
            yield next_gvt, with_vnc(GvtUpdate(reporter, next_gvt), VncHeader(False, next_gvt, next_gvt))
            next_gvt += gvt_interval_ms
        yield t, p
        yield t, with_vnc(p, VncHeader(False, t, t + lookahead_ms))


# --- a small executive for exhaustive schedule exploration -----------------------


@dataclass
class RunResult:
    states: dict[str, Any]
    processed: dict[str, list[tuple]]
    rollbacks: int
    unmatched_antimessages: int
    gvt_history: list[float]
    messages: int


class Executive:
    """Drives LPs under a chosen delivery discipline for in-flight messages.

    ``policy`` is ``immediate`` (deliver as soon as sent), ``fifo`` or ``lifo``
    (sent messages wait in a network queue and interleave with processing).
    """

    POLICIES = ("immediate", "fifo", "lifo")

    def __init__(self, lps: dict[str, LogicalProcess], policy: str = "fifo"):
        if policy not in self.POLICIES:
            raise ValueError(f"unknown policy {policy!r}")
        self.lps = lps
        self.policy = policy
        self.network: list[VncMessage] = []
        self.gvt = GvtState()
        self.gvt_history: list[float] = []
        self.messages = 0
        self._future: list[VncMessage] = []

    def send(self, msgs: list[VncMessage]) -> None:
        self.messages += len(msgs)
        if self.policy == "immediate":
            for m in msgs:
                self.deliver(m)
        else:
            self.network.extend(msgs)

    def deliver(self, m: VncMessage) -> None:
        antis, _ = self.lps[m.dst].receive(m)
        self.send(antis)

    def _pop_network(self) -> VncMessage:
        return self.network.pop(0) if self.policy == "fifo" else self.network.pop()

    def _update_gvt(self) -> None:
        reports = {k: lp.report() for k, lp in self.lps.items()}
        in_flight = [m.header.receive_time for m in self.network]
        in_flight += [m.header.receive_time for m in self._future]  # the environment's pending sends
        self.gvt = update_gvt(self.gvt, reports, in_flight)
        self.gvt_history.append(self.gvt.gvt)
        if self.gvt.gvt > -INF:
            for lp in self.lps.values():
                lp.fossil_collect(self.gvt.gvt)

    def step(self) -> bool:
        """One unit of work: process one message or deliver one; False when quiescent."""
        busy = sorted((lp.report(), k) for k, lp in self.lps.items() if lp.has_work())
        if self.network and (not busy or len(self.network) % 2 == 1):
            self.deliver(self._pop_network())
        elif busy:
            self.send(self.lps[busy[0][1]].step())
        else:
            return False
        self._update_gvt()
        return True

    def inject(self, m: VncMessage) -> None:
        self.messages += 1
        self.deliver(m)

    def run(self, externals: Iterable[VncMessage], steps_between: int = 1, limit: int = 100_000) -> RunResult:
        self._future = list(externals)
        while self._future:
            m = self._future.pop(0)
            self.inject(m)
            for _ in range(steps_between):
                if not self.step():
                    break
        n = 0
        while self.step():
            n += 1
            if n > limit:
                raise RuntimeError("executive did not quiesce")
        # quiescent: everything is final
        self.gvt = update_gvt(self.gvt, {k: INF for k in self.lps})
        self.gvt_history.append(self.gvt.gvt)
        unmatched = sum(len(lp.orphans) for lp in self.lps.values())
        return RunResult(
            states={k: lp.state for k, lp in self.lps.items()},
            processed={k: sorted(lp.processed_ids()) for k, lp in self.lps.items()},
            rollbacks=sum(lp.rollbacks for lp in self.lps.values()),
            unmatched_antimessages=unmatched,
            gvt_history=self.gvt_history,
            messages=self.messages,
        )


def sequential_run(handlers: dict[str, Handler], initial: dict[str, Any],
                   externals: Iterable[VncMessage], limit: int = 100_000) -> tuple[dict[str, Any], dict[str, list]]:
    """Reference execution: one global queue in (receive_time, id) order."""
    import heapq

    states = {k: copy.deepcopy(v) for k, v in initial.items()}
    processed: dict[str, list] = {k: [] for k in initial}
    heap = [(m.key, m) for m in externals]
    heapq.heapify(heap)
    n = 0
    while heap:
        _, m = heapq.heappop(heap)
        st, outs = handlers[m.dst](copy.deepcopy(states[m.dst]), m)
        states[m.dst] = st
        processed[m.dst].append(m.id)
        now = m.header.receive_time
        for k, (dst, delay, payload) in enumerate(outs):
            c = VncMessage(m.id + (k,), m.dst, dst, VncHeader(False, now, now + delay), payload)
            heapq.heappush(heap, (c.key, c))
        n += 1
        if n > limit:
            raise RuntimeError("sequential run did not terminate")
    return states, {k: sorted(v) for k, v in processed.items()}
