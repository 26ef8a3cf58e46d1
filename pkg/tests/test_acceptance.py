"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` or ``python3 tests/test_acceptance.py``.
"""

import itertools
import sys
import time

import numpy as np
import pytest

from rdrnsim.config import ScenarioConfig, load_config
from rdrnsim.core import GeoPosition, PacketKind, bearing, distance
from rdrnsim.handoff import HandoffSetup, run_with_vnc, run_without_vnc, straight_track, turning_track
from rdrnsim.perf import (
    AlohaModel,
    TimingConstants,
    aloha_max_update_rate,
    offered_load_bps,
    phase1_time,
    phase2_time,
    phase3_time,
    vnc_load_factor,
)
from rdrnsim.scenario import Scenario, run_scenario
from rdrnsim.topology import BeamAllocationError, BeamConstraints, TopologyInfeasible, allocate_beams, candidate_links, solve_topology
from rdrnsim.vnc import Executive

from oracles import brute_force_topology, pnni_random_case, tw_check, tw_schedules

pytestmark = pytest.mark.acceptance


@pytest.fixture
def report(capsys):
    """Print one verdict line straight to the terminal, then assert it."""
    t0 = time.perf_counter()

    def emit(n, title, ok, detail="", budget_s=None):
        took = time.perf_counter() - t0
        in_time = budget_s is None or took < budget_s
        verdict = "PASS" if ok and in_time else "FAIL"
        extra = f" ({detail})" if detail else ""
        slow = "" if in_time else f" [over {budget_s:g} s budget]"
        with capsys.disabled():
            print(f"\n[{verdict}] criterion {n:2d}: {title}{extra} {took:.2f}s{slow}")
        assert ok, detail
        assert in_time, f"took {took:.1f} s, budget {budget_s} s"

    return emit


def test_01_equations(report):
    tc = TimingConstants()
    errs = [
        abs(phase1_time(1, 20, 3, 3, TimingConstants(k_top=1e-300)) - 20.664),
        abs(phase1_time(3, 20, 3, 3, tc) - 21.594),
        abs(phase2_time(0, tc) - 0.0),
        abs(phase2_time(1, tc) - 4.552),
        abs(phase2_time(4, tc) - 92.708),
        abs(phase3_time(0, tc) - 5.025),
    ]
    errs += [abs(phase3_time(u, tc) - phase2_time(u + 1, tc) - 0.473) for u in range(11)]
    worst = max(errs)
    report(1, "closed-form phase times", worst <= 1e-9, f"max error {worst:.1e} s", 1)


def test_02_timing_table(report):
    cfg = ScenarioConfig(num_es=2, collision_model="none", end_time=600)
    sc = Scenario(cfg)
    sc.run()
    want = {PacketKind.NEWSWITCH: 439, PacketKind.SWITCHPOS: 679, PacketKind.TOPOLOGY: 664}
    seen = {k: sorted({d - s for s, d, _, _, kind in sc.ow.p2p_log if kind == k}) for k in want}
    ok = all(seen[k] == [v] for k, v in want.items())
    detail = ", ".join(f"{k.name} {seen[k]}" for k in want)
    report(2, "p2p delivery delays match the timing table", ok, detail, 1)


def test_03_phase1_cross_check(report, configs_dir):
    base = load_config(configs_dir / "mycall_timer.cfg")
    tc = TimingConstants(k_top=base.k_top)
    rows = []
    for n in range(2, 7):
        m, _ = run_scenario(base.with_(num_es=n))
        p1 = phase1_time(n, base.mycall_timer, base.fmax, n * (n - 1) // 2, tc)
        sim = None if m.config_complete_ms is None else m.config_complete_ms / 1000
        rows.append((n, sim, p1))
    ok = all(sim is not None and abs(sim - p1) <= 0.10 * p1 for _, sim, p1 in rows)
    detail = "; ".join(f"N={n} sim {sim} vs {p1:.3f}" for n, sim, p1 in rows)
    report(3, "simulated Phase I within 10% of the model", ok, detail, 10)


def test_04_aloha(report):
    a = AlohaModel()
    conserve = max(
        abs(offered_load_bps(n, aloha_max_update_rate(n, a), a) / (0.18 * 19200) - 1)
        for n in range(1, 61)
    )
    r5 = aloha_max_update_rate(5, a)
    inverse = max(abs(aloha_max_update_rate(n, a) * n / (r5 * 5) - 1) for n in range(5, 31))
    bad = [b for b in range(130, 4097) if not 2.0 < vnc_load_factor(b) < 2.5]
    ok = conserve <= 1e-6 and inverse <= 1e-12 and not bad
    detail = (f"load error {conserve:.1e}, 1/N error {inverse:.1e}, "
              f"factor outside (2, 2.5) at {bad[:3]} (factor {vnc_load_factor(130)} at 130 bits)"
              if bad else f"load error {conserve:.1e}, 1/N error {inverse:.1e}")
    report(4, "Aloha capacity and VNC load factor", ok, detail, 1)


FAILURE_CASES = [
    # (kind, drop, fixes, expectation)
    ("MYCALL", 0.5, False, "complete"),
    ("NEWSWITCH", 1.0, False, "deadlock"),
    ("NEWSWITCH", 0.5, True, "complete"),
    ("TOPOLOGY", 1.0, False, "partition"),
    ("TOPOLOGY", 1.0, True, "no_early_association"),
]


def test_05_failure_matrix(report, configs_dir):
    base = load_config(configs_dir / "comm_failures.cfg").with_(drop_topology=0.0)
    lines, ok = [], True
    for kind, p, fixes, expect in FAILURE_CASES:
        good = 0
        for s in range(100):
            m, _ = run_scenario(base.with_(seed=s + 1, fixes_enabled=fixes, **{f"drop_{kind.lower()}": p}))
            done = m.config_complete_ms is not None
            if expect == "complete":
                good += done and not m.failed
            elif expect == "deadlock":
                good += (not done) and m.deadlock
            elif expect == "partition":
                good += m.partition and m.deprived_associations > 0
            else:
                good += m.deprived_associations == 0
        ok &= good == 100
        lines.append(f"{kind}={p} fixes {'on' if fixes else 'off'} {expect} {good}/100")
    report(5, "packet-loss failure matrix", ok, "; ".join(lines), 60)


def test_06_election(report):
    runs = bad = 0
    for n in range(1, 5):
        names = [f"ES{i + 1}" for i in range(n)]
        for perm in itertools.permutations(names):
            cfg = ScenarioConfig(num_es=n, collision_model="none", end_time=1500)
            sc = Scenario(cfg, list(perm))
            m = sc.run()
            masters = [x for x in names if sc.states[x].phase == "Master"]
            runs += 1
            if masters != [perm[0]] or [x for _, x in m.masters] != [perm[0]]:
                bad += 1
    report(6, "one master, the earliest booter", bad == 0, f"{runs} boot orders, {bad} wrong", 10)


def test_07_beams_and_topology(report):
    rng = np.random.default_rng(7)
    placements = double = outside = 0
    while placements < 1000:
        es = GeoPosition(0.0, 0.0)
        k = int(rng.integers(1, 9))
        rns = {f"RN{i + 1}": GeoPosition(float(rng.uniform(-700, 700)), float(rng.uniform(-700, 700)))
               for i in range(k)}
        c = BeamConstraints(twidth=float(rng.uniform(5, 90)))
        try:
            plan = allocate_beams(es, rns, c, max_beams=8, slots_per_beam=8)
        except BeamAllocationError:
            continue
        placements += 1
        tuples = [(b, s) for b, _, s in plan.assignment.values()]
        double += len(tuples) != len(set(tuples))
        for rn, (b, _, _) in plan.assignment.items():
            outside += not plan.beams[b].contains(bearing(es, rns[rn]))
    instances = mismatched = 0
    for _ in range(300):
        n = int(rng.integers(2, 5))
        pos = {f"ES{i + 1}": GeoPosition(float(rng.uniform(0, 60)), float(rng.uniform(0, 60))) for i in range(n)}
        c = BeamConstraints(rlink=float(rng.uniform(20, 90)), fmax=int(rng.integers(1, 4)),
                            imult=float(rng.uniform(0.5, 3)), twidth=float(rng.uniform(10, 120)))
        if len(candidate_links(pos, c)) > 6:
            continue
        instances += 1
        try:
            expect = brute_force_topology(pos, c)
        except TopologyInfeasible:
            expect = None
        try:
            got = solve_topology(pos, c).links
        except TopologyInfeasible:
            got = None
        mismatched += got != expect
    ok = double == 0 and outside == 0 and mismatched == 0
    detail = (f"{placements} placements, {double} double-assigned, {outside} outside sector; "
              f"{instances} solver instances, {mismatched} differ from brute force")
    report(7, "beam/slot exclusivity and labeling search", ok, detail, 30)


def test_08_time_warp(report):
    runs = failures = rollbacks = 0
    for policy in Executive.POLICIES:
        for steps in (0, 1, 3):
            for order, effective in tw_schedules():
                try:
                    problems, res = tw_check(order, effective, policy, steps)
                    rollbacks += res.rollbacks
                except Exception as e:  # a RollbackError means committed work was undone
                    problems = [repr(e)]
                runs += 1
                failures += bool(problems)
    detail = f"{runs} schedules, {failures} failing, {rollbacks} rollbacks exercised"
    report(8, "Time Warp equals sequential execution", failures == 0 and rollbacks > 0, detail, 60)


def test_09_vnc_handoff(report):
    s = HandoffSetup()
    blind, vnc = run_without_vnc(straight_track(), s), run_with_vnc(straight_track(), s)
    floor = 0.473 + phase2_time(s.rns_at_target + 1)
    perfect = vnc.max_interruption_s == 0.0 and blind.max_interruption_s >= floor
    tb, tv = run_without_vnc(turning_track(), s), run_with_vnc(turning_track(), s)
    wrong = tv.rollbacks > 0 and tv.handoffs == tb.handoffs
    detail = (f"perfect: {vnc.max_interruption_s:.3f} s vs {blind.max_interruption_s:.3f} s (floor {floor:.3f}); "
              f"wrong: {tv.rollbacks} rollbacks, handoffs equal {tv.handoffs == tb.handoffs}")
    report(9, "predictive handoff hides the interruption", perfect and wrong, detail)


def test_10_pnni(report):
    ok_cases = deferred = bad = 0
    seed = 0
    while ok_cases < 100:
        status, problems = pnni_random_case(seed)
        seed += 1
        if status == "deferred":
            deferred += 1
            continue
        ok_cases += 1
        bad += bool(problems)
    detail = f"{ok_cases} handoffs, {bad} violating, {deferred} deferred for lack of a long enough path"
    report(10, "mobile PNNI scope, branches and cell order", bad == 0, detail, 30)


def test_11_mobile_es(report, configs_dir):
    base = load_config(configs_dir / "mobile_es.cfg")
    rows = []
    for s in range(5):
        m0, _ = run_scenario(base.with_(seed=base.seed + s, tolerance=0.0))
        m5, _ = run_scenario(base.with_(seed=base.seed + s, tolerance=5.0))
        rows.append((m0.overlapping_reconfigs, len(m0.reconfig_starts), len(m5.reconfig_starts)))
    ok = all(ov > 0 and r5 < r0 for ov, r0, r5 in rows)
    detail = "; ".join(f"{r0}->{r5} (overlaps {ov})" for ov, r0, r5 in rows)
    report(11, "movement tolerance cuts reconfiguration churn", ok, detail)


def test_12_determinism(report, configs_dir, tmp_path):
    same = []
    for name, tweak in [("link_usage.cfg", {"vnc_enabled": True}), ("mobile_es.cfg", {}),
                        ("comm_failures.cfg", {})]:
        cfg = load_config(configs_dir / name).with_(**tweak)
        run_scenario(cfg, tmp_path / f"{name}.a")
        run_scenario(cfg, tmp_path / f"{name}.b")
        a = (tmp_path / f"{name}.a" / "transitions.log").read_bytes()
        b = (tmp_path / f"{name}.b" / "transitions.log").read_bytes()
        same.append(bool(a) and a == b)
    report(12, "identical transitions.log for identical seeds", all(same), f"{sum(same)}/3 identical")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
