import math

import pytest
from hypothesis import given, strategies as st

from rdrnsim.core import GeoPosition
from rdrnsim.handoff import (
    HandoffSetup,
    PositionPredictor,
    Track,
    run_with_vnc,
    run_without_vnc,
    straight_track,
    turning_track,
)
from rdrnsim.perf import phase3_time

P = GeoPosition


def test_track_interpolates():
    tr = Track(((0, P(0, 0)), (1000, P(10, 0)), (2000, P(10, 10))))
    assert tr.position(500) == P(5, 0)
    assert tr.position(5000) == P(10, 10)
    assert tr.velocity(500) == pytest.approx((0.01, 0.0))
    assert tr.dead_reckon(500, 200) == P(7, 0)


def test_track_rejects_unsorted_points():
    with pytest.raises(ValueError):
        Track(((1000, P()), (0, P(1, 1))))


def test_nearest_ties_to_lower_callsign():
    s = HandoffSetup()
    assert s.nearest(P(500, 0)) == "ES1"
    assert s.nearest(P(501, 0)) == "ES2"


def test_blind_cost_matches_model():
    s = HandoffSetup()
    assert s.blind_interruption_s() == pytest.approx(0.677 + phase3_time(0))
    assert HandoffSetup(rns_at_target=3).blind_interruption_s() > s.blind_interruption_s()


def test_straight_track_prediction_hides_handoff():
    s = HandoffSetup()
    blind = run_without_vnc(straight_track(), s)
    vnc = run_with_vnc(straight_track(), s)
    assert blind.handoffs == vnc.handoffs == [(40_000, "ES1", "ES2")]
    assert blind.max_interruption_s == pytest.approx(s.blind_interruption_s())
    assert vnc.max_interruption_s == 0.0 and vnc.rollbacks == 0


def test_turning_track_rolls_back_but_agrees():
    s = HandoffSetup()
    blind = run_without_vnc(turning_track(), s)
    vnc = run_with_vnc(turning_track(), s)
    assert vnc.rollbacks > 0 and vnc.antimessages > 0
    assert vnc.handoffs == blind.handoffs == vnc.real_handoffs
    assert vnc.branch_aborts > 0
    assert all(b >= a for a, b in zip(vnc.gvt_history, vnc.gvt_history[1:]))
    assert any("ROLLBACK" in line for line in vnc.log)


def test_no_lookahead_means_no_benefit():
    s = HandoffSetup(lookahead_ms=0)
    vnc = run_with_vnc(straight_track(), s)
    assert vnc.handoffs == [(40_000, "ES1", "ES2")]


@pytest.mark.property
@given(st.floats(0, 900), st.floats(1, 30))
def test_straight_runs_agree(x0, speed):
    tr = straight_track(x0, speed)
    s = HandoffSetup()
    assert run_with_vnc(tr, s).handoffs == run_without_vnc(tr, s).handoffs


def test_position_predictor_rolls_back_on_turn():
    pp = PositionPredictor("RN1", 5000, 1.0)
    assert pp.tick(0, P(0, 0), (0.01, 0.0)) == []
    for t in range(1000, 4000, 1000):
        assert pp.tick(t, P(t / 100, 0), (0.01, 0.0)) == []
    logged = []
    for t in range(4000, 12000, 1000):
        logged += pp.tick(t, P(30, (t - 3000) / 100), (0.0, 0.01))
    assert logged and all(to < frm for frm, to, _ in logged)
