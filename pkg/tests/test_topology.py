import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import brute_force_topology
from rdrnsim.core import GeoPosition, bearing
from rdrnsim.topology import (
    BeamAllocationError,
    BeamConstraints,
    TopologyInfeasible,
    allocate_beams,
    candidate_links,
    links_conflict,
    links_interfere,
    nearest_neighbor_topology,
    solve_topology,
    topology_cost_seconds,
    validate_solution,
    weight_table_entries,
)

P = GeoPosition


def test_single_es_needs_no_links():
    sol = solve_topology({"ES1": P(0, 0)}, BeamConstraints())
    assert sol.links == ()


def test_two_es_one_link_lowest_frequency():
    sol = solve_topology({"ES1": P(0, 0), "ES2": P(20, 0)}, BeamConstraints())
    assert sol.links == (("ES1", "ES2", 1),)


def test_out_of_range_is_disconnected():
    with pytest.raises(TopologyInfeasible) as e:
        solve_topology({"ES1": P(0, 0), "ES2": P(2000, 0)}, BeamConstraints(rlink=1000))
    assert e.value.reason == "disconnected beyond rlink"


def test_collinear_chain_needs_two_frequencies():
    # A-B-C in a line: A->B's beam also covers C, so A-B and B-C conflict
    pos = {"A": P(0, 0), "B": P(10, 0), "C": P(20, 0)}
    c = BeamConstraints(rlink=15, imult=2.0)
    sol = solve_topology(pos, c)
    assert sorted(f for *_, f in sol.links) == [1, 2]
    with pytest.raises(TopologyInfeasible) as e:
        solve_topology(pos, BeamConstraints(rlink=15, imult=2.0, fmax=1))
    assert e.value.reason == "frequency exhaustion"


def test_interference_is_directional():
    c = BeamConstraints(imult=2.0, twidth=10)
    a = (P(0, 0), P(10, 0))  # transmits east
    b = (P(15, -30), P(15, 0))  # b points north; its receiver sits in a's beam
    assert links_interfere(a, b, c)
    assert not links_interfere(b, a, c)
    assert links_conflict(a, b, c) and links_conflict(b, a, c)


def test_candidates_sorted_by_length():
    pos = {"A": P(0, 0), "B": P(30, 0), "C": P(10, 0)}
    assert candidate_links(pos, BeamConstraints())[:2] == [("A", "C"), ("B", "C")]


def _random_positions(rng, n, span=60.0):
    return {f"ES{i + 1}": P(float(rng.uniform(0, span)), float(rng.uniform(0, span))) for i in range(n)}


@pytest.mark.parametrize("seed", range(40))
def test_solver_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 5))
    c = BeamConstraints(rlink=float(rng.uniform(20, 90)), fmax=int(rng.integers(1, 4)),
                        imult=float(rng.uniform(0.5, 3)), twidth=float(rng.uniform(10, 120)))
    pos = _random_positions(rng, n)
    try:
        expect = brute_force_topology(pos, c)
    except TopologyInfeasible as e:
        with pytest.raises(TopologyInfeasible) as got:
            solve_topology(pos, c)
        assert got.value.reason == e.reason
        return
    sol = solve_topology(pos, c)
    assert sol.links == expect
    assert validate_solution(sol, c) == []


def test_nearest_neighbor_is_spanning_tree():
    rng = np.random.default_rng(3)
    pos = _random_positions(rng, 6)
    sol = nearest_neighbor_topology(pos, BeamConstraints())
    assert len(sol.links) == 5


def test_cost_formula():
    assert topology_cost_seconds(3, 3, 3, 0.01) == pytest.approx(0.01 * (9 + 64))


def test_weight_tables():
    assert weight_table_entries(4, 2, 4) == (4, 256)
    with pytest.raises(OverflowError):
        weight_table_entries(1, 8, 9)


def test_beams_share_slots_in_one_sector():
    es = P(0, 0)
    rns = {"R1": P(0, 100), "R2": P(1, 100), "R3": P(100, 0)}
    plan = allocate_beams(es, rns, BeamConstraints(twidth=10))
    assert len(plan.beams) == 2
    b1, _, s1 = plan.lookup("R1")
    b2, _, s2 = plan.lookup("R2")
    assert b1 == b2 and s1 != s2


def test_beams_wrap_around_north():
    es = P(0, 0)
    rns = {"R1": P(-1, 100), "R2": P(1, 100)}  # bearings ~359.4 and ~0.6
    plan = allocate_beams(es, rns, BeamConstraints(twidth=10))
    assert len(plan.beams) == 1


def test_too_many_sectors_rejected():
    es = P(0, 0)
    rns = {f"R{i}": P(100 * np.cos(a), 100 * np.sin(a)) for i, a in enumerate(np.linspace(0, 5, 6))}
    with pytest.raises(BeamAllocationError):
        allocate_beams(es, rns, BeamConstraints(twidth=5), max_beams=4)


@pytest.mark.property
@given(st.lists(st.tuples(st.floats(-500, 500), st.floats(-500, 500)), min_size=1, max_size=8),
       st.floats(5, 90))
def test_beam_plan_exclusive_and_contained(pts, width):
    es = P(0, 0)
    rns = {f"R{i}": P(x, y) for i, (x, y) in enumerate(pts) if (x, y) != (0, 0)}
    c = BeamConstraints(twidth=width)
    try:
        plan = allocate_beams(es, rns, c, max_beams=8, slots_per_beam=8)
    except BeamAllocationError:
        return
    tuples = [(b, s) for b, _, s in plan.assignment.values()]
    assert len(tuples) == len(set(tuples))
    for rn, (b, _, _) in plan.assignment.items():
        assert plan.beams[b].contains(bearing(es, rns[rn]))
