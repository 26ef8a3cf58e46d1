from math import comb

import pytest
from hypothesis import given, strategies as st

from rdrnsim.perf import (
    MAX_PHASE2_RNS,
    AlohaModel,
    TimingConstants,
    aloha_csv,
    aloha_max_update_rate,
    offered_load_bps,
    p1_csv,
    p2_csv,
    phase1_time,
    phase2_time,
    phase3_time,
    vnc_load_factor,
)

TC = TimingConstants()


def test_phase1_hand_value():
    # max(20, 0.439*2 + 0.492*2) + 0.01*(9 + 4**3) + 0.664 + 0.1*2
    assert phase1_time(3, 20, 3, 3) == pytest.approx(20 + 0.73 + 0.864, abs=1e-9)


def test_phase1_discovery_dominates_for_many_es():
    # 60 ESs: discovery 59*(0.439+0.492) beats T
    assert phase1_time(60, 20, 1, 0) == pytest.approx(59 * 0.931 + 0.01 * (3600 + 1) + 0.664 + 5.9, abs=1e-9)


def test_phase2_hand_values():
    assert phase2_time(0) == 0.0
    assert phase2_time(1) == pytest.approx(0.677 + 1.875 + 2.0, abs=1e-9)
    # u=4: 4*0.677 + sum C(4,r)*(1.875 r + 2)
    expect = 4 * 0.677 + sum(comb(4, r) * (1.875 * r + 2) for r in range(1, 5))
    assert phase2_time(4) == pytest.approx(expect, abs=1e-9)
    assert phase2_time(4) == pytest.approx(92.708, abs=1e-9)


def test_phase3_hand_value():
    assert phase3_time(0) == pytest.approx(5.025, abs=1e-9)


@pytest.mark.property
@given(st.integers(0, 12))
def test_phase3_is_handoff_plus_phase2(u):
    assert phase3_time(u) - phase2_time(u + 1) == pytest.approx(0.473, abs=1e-9)


def test_phase2_guard():
    with pytest.raises(OverflowError):
        phase2_time(MAX_PHASE2_RNS + 1)
    with pytest.raises(ValueError):
        phase2_time(-1)


def test_table_time_constant():
    assert TC.table_time == pytest.approx(2.0)


def test_aloha_hand_value():
    assert aloha_max_update_rate(10, AlohaModel()) == pytest.approx(51.84, abs=1e-9)


@pytest.mark.property
@given(st.integers(1, 200), st.integers(50, 2000), st.booleans(), st.floats(0, 3))
def test_aloha_saturates_channel(n, bits, vnc, hf):
    a = AlohaModel(packet_bits=bits, vnc_enabled=vnc)
    rate = aloha_max_update_rate(n, a, hf)
    assert offered_load_bps(n, rate, a, hf) == pytest.approx(0.18 * 19200, rel=1e-9)


def test_vnc_factor():
    assert vnc_load_factor(400) == pytest.approx(2.1625)
    assert vnc_load_factor(130) == 2.5  # the boundary packet size sits exactly on the upper edge
    assert all(2.0 < vnc_load_factor(b) < 2.5 for b in range(131, 5000, 37))


def test_aloha_model_validation():
    with pytest.raises(ValueError):
        AlohaModel(efficiency=1.2)


def test_csv_headers():
    assert p1_csv([2], 20, 3, None).splitlines()[0] == "n,p1_seconds"
    assert p2_csv([0]).splitlines()[0] == "u,p2_seconds,p3_seconds"
    assert aloha_csv([5], AlohaModel()).splitlines()[0] == "num_rn,updates_per_min_novnc,updates_per_min_vnc"
