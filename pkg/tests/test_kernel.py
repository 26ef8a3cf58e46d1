import numpy as np
import pytest
from hypothesis import given, strategies as st

from rdrnsim.core import GeoPosition, MyCall, NewSwitch, PacketKind, SwitchPos, Topology
from rdrnsim.kernel import (
    DEFAULT_LATENCY_MS,
    ChannelModel,
    LinkAbsent,
    MobilityState,
    Orderwire,
    SchedulingError,
    Simulator,
    TrafficModel,
    mobility_step,
    poisson_call_source,
    resample_motion,
)


def test_events_fire_in_time_then_insertion_order():
    sim = Simulator()
    seen = []
    for name, t in [("c", 5), ("a", 1), ("b", 5), ("d", 1)]:
        sim.at(t, name, "x", lambda n=name: seen.append(n))
    sim.run_until(10)
    assert seen == ["a", "d", "c", "b"]
    assert sim.now == 10


def test_cannot_schedule_in_past():
    sim = Simulator()
    sim.run_until(100)
    with pytest.raises(SchedulingError):
        sim.at(50, "x", "late")


def test_cancelled_events_skip():
    sim = Simulator()
    hit = []
    e = sim.at(3, "x", "k", lambda: hit.append(1))
    e.cancel()
    assert sim.pending() == 0
    sim.run_until(10)
    assert hit == []


@pytest.mark.property
@given(st.lists(st.integers(0, 1000), max_size=40))
def test_dispatch_order_is_sorted(times):
    sim = Simulator()
    out = []
    for i, t in enumerate(times):
        sim.at(t, "n", "k", lambda t=t, i=i: out.append((t, i)))
    sim.run_until(2000)
    assert out == sorted(out)


def test_named_streams_independent_and_reproducible():
    a, b = Simulator(7), Simulator(7)
    a.rng["loss"].random(100)  # drawing from one stream leaves the others untouched
    assert a.rng["mobility"].random() == b.rng["mobility"].random()
    assert Simulator(8).rng["mobility"].random() != Simulator(7).rng["mobility"].random()


def _net(**kw):
    sim = Simulator(1)
    ow = Orderwire(sim, **kw)
    got = []
    for n, x in (("A", 0), ("B", 10), ("C", 20)):
        ow.attach(n, lambda x=x: GeoPosition(x, 0), lambda src, p, via, n=n: got.append((sim.now, n, src, p.kind, via)))
    return sim, ow, got


def test_broadcast_delivered_after_kind_latency():
    sim, ow, got = _net()
    ow.broadcast("A", MyCall("A", 0))
    sim.run_until(10_000)
    assert got == [(492, "B", "A", PacketKind.MYCALL, "bcast"), (492, "C", "A", PacketKind.MYCALL, "bcast")]


def test_overlapping_broadcasts_collide():
    sim, ow, got = _net()
    ow.broadcast("A", MyCall("A", 0))
    ow.broadcast("B", MyCall("B", 0))
    sim.run_until(10_000)
    assert got == []
    assert ow.collision_rate() == 1.0


def test_collisions_off_delivers_both():
    sim, ow, got = _net(collisions=False)
    ow.broadcast("A", MyCall("A", 0))
    ow.broadcast("B", MyCall("B", 0))
    sim.run_until(10_000)
    assert len(got) == 4


@pytest.mark.parametrize("pkt", [NewSwitch(), SwitchPos(0, GeoPosition()), Topology((("A", GeoPosition()),))])
def test_p2p_latency_table(pkt):
    sim, ow, got = _net()
    ow.open_link("A", "B")
    ow.p2p_send("A", "B", pkt)
    sim.run_until(10_000)
    assert got == [(DEFAULT_LATENCY_MS[pkt.kind], "B", "A", pkt.kind, "p2p")]
    assert ow.p2p_log[0][:2] == (0, DEFAULT_LATENCY_MS[pkt.kind])


def test_p2p_is_fifo_per_direction():
    sim, ow, got = _net()
    ow.open_link("A", "B")
    ow.p2p_send("A", "B", SwitchPos(0, GeoPosition()))  # 679 ms
    ow.p2p_send("A", "B", NewSwitch())  # 439 ms, must not overtake
    sim.run_until(10_000)
    assert [g[3] for g in got] == [PacketKind.SWITCHPOS, PacketKind.NEWSWITCH]


def test_p2p_without_link_raises():
    sim, ow, _ = _net()
    with pytest.raises(LinkAbsent):
        ow.p2p_send("A", "B", NewSwitch())
    ow.detach("B")
    with pytest.raises(LinkAbsent):
        ow.open_link("A", "B")


def test_close_link_notifies_both_ends():
    sim, ow, _ = _net()
    downs = []
    ow.link_down_handler = lambda node, peer: downs.append((node, peer))
    ow.open_link("A", "B")
    ow.close_link("A", "B")
    assert downs == [("A", "B"), ("B", "A")]
    assert not ow.has_link("A", "B")


def test_drop_probability_one_loses_kind_only():
    sim = Simulator(1)
    ow = Orderwire(sim, ChannelModel(drop={PacketKind.NEWSWITCH: 1.0}))
    got = []
    for n in "AB":
        ow.attach(n, lambda: GeoPosition(), lambda s, p, v: got.append(p.kind))
    ow.open_link("A", "B")
    ow.p2p_send("A", "B", NewSwitch())
    ow.p2p_send("A", "B", SwitchPos(0, GeoPosition()))
    sim.run_until(10_000)
    assert got == [PacketKind.SWITCHPOS]


def test_vnc_doubles_load_plus_header():
    sim, ow, _ = _net(vnc=True)
    ow.broadcast("A", MyCall("A", 0))
    assert ow.bits_virtual == ow.bits_real + 65


def test_channel_model_validation():
    with pytest.raises(ValueError):
        ChannelModel("carrier_pigeon")
    with pytest.raises(ValueError):
        ChannelModel(drop={PacketKind.MYCALL: 1.5})


def test_mobility_linear_and_compass():
    m = MobilityState(GeoPosition(0, 0), speed=2.0, direction=90.0)
    assert mobility_step(m, 3.0).position.x == pytest.approx(6.0)
    assert mobility_step(m, 3.0).position.y == pytest.approx(0.0, abs=1e-9)


def test_resample_is_seeded():
    m = MobilityState(GeoPosition(), 1.0, 0.0, max_speed=5.0)
    a = resample_motion(m, Simulator(3).rng["mobility"])
    b = resample_motion(m, Simulator(3).rng["mobility"])
    assert (a.speed, a.direction) == (b.speed, b.direction)
    assert 0 <= a.speed <= 5 and 0 <= a.direction < 360


def test_poisson_calls_in_window_and_mean():
    rng = np.random.default_rng(0)
    calls = list(poisson_call_source(TrafficModel(10.0, 5.0), rng, 0, 10_000_000))
    assert all(0 <= s < 10_000_000 and e >= s for s, e in calls)
    assert len(calls) == pytest.approx(1000, rel=0.1)
