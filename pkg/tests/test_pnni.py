import numpy as np
import pytest
from hypothesis import given, strategies as st

from rdrnsim.pnni import (
    HandoffDeferred,
    MobilePnni,
    PeerGroupTree,
    ScopeError,
    ScopeViolation,
    VcBranch,
    VciTable,
    example_tree,
    handoff_scope,
    in_scope,
    parent,
    prepare_handoff,
    random_hierarchy,
    replay_cells,
    scope_root,
    scoped_call_abort,
    strictly_increasing,
)

from oracles import pnni_random_case


def test_names():
    assert parent("A.1.2") == "A.1"
    assert in_scope("A.1.2", "A.1") and not in_scope("A.10.2", "A.1")


def test_example_scope_and_border():
    t = example_tree()
    assert handoff_scope("A.1.1", "A.2.2", t) == "A"
    assert t.border_lns("A") == ["A.3.1"]
    assert scope_root(t, "A") == "A.3.1"
    assert t.leaders["A.1"] == "A.1.1"


def test_scope_of_siblings_and_same_ln():
    t = example_tree()
    assert handoff_scope("A.2.1", "A.2.2", t) == "A.2"
    assert handoff_scope("A.2.1", "A.2.1", t) == "A.2"


def test_disjoint_and_unknown_lns():
    t = PeerGroupTree.from_links([("A.1.1", "A.1.2"), ("B.1.1", "B.1.2"), ("A.1.1", "B.1.1")])
    with pytest.raises(ScopeError):
        handoff_scope("A.1.2", "B.1.2", t)
    with pytest.raises(ScopeError):
        handoff_scope("A.1.2", "Z.1.1", t)


def test_example_handoff_with_vci_replacement():
    t = example_tree()
    vcis = VciTable()
    vcis.claim("A.2.2", 42, "RN9")
    mp = MobilePnni(t, vcis)
    old = mp.attach("RN1", "A.1.1", "A.3.1", (42, 43))
    assert old.path == ["A.3.1", "A.1.1"]
    new = mp.prepare("RN1", "A.2.2")
    assert new.path == ["A.3.1", "A.2.1", "A.2.2"]
    assert new.vci_map == {42: 32, 43: 43}
    assert new.replacement_vcis == ((42, 32),)
    assert len(mp.live("RN1")) == 2
    rel = mp.complete("RN1")
    assert [(r.a, r.b) for r in rel] == [("A.3.1", "A.1.1")]
    assert mp.live("RN1") == [new] and new.status == "active"
    assert vcis.owned("A.1.1", "RN1") == [] and vcis.owned("A.2.2", "RN1") == [32, 43]
    kinds = [s.kind for s in mp.log]
    assert kinds == ["CALL_SETUP", "CALL_SETUP", "SCOPED_CALL_ABORT", "RELEASE"]


def test_new_branch_at_least_as_long_as_old():
    # R-X-Y is 2 hops; Z is one hop from R but a 2-hop route R-W-Z exists
    t = PeerGroupTree.from_links([
        ("A.1.1", "A.1.2"), ("A.1.2", "A.1.3"), ("A.1.1", "A.1.5"),
        ("A.1.1", "A.1.4"), ("A.1.4", "A.1.5"), ("A.1.1", "EXT"),
    ])
    v = VciTable()
    v.claim("A.1.3", 42, "RN1")
    b = prepare_handoff("RN1", "A.1.3", "A.1.5", t, v, ["A.1.1", "A.1.2", "A.1.3"])
    assert b.path == ["A.1.1", "A.1.4", "A.1.5"]
    assert b.replacement_vcis == ()


def test_branch_grows_from_scope_entry():
    # root A.3.1 is outside A.2, so the new branch keeps the A.3.1-A.2.1 hop
    t = PeerGroupTree.from_links([
        ("A.3.1", "A.2.1"), ("A.2.1", "A.2.2"), ("A.2.1", "A.2.3"), ("A.3.1", "EXT"),
    ])
    mp = MobilePnni(t)
    old = mp.attach("RN1", "A.2.2", "A.3.1", (42,))
    assert old.path == ["A.3.1", "A.2.1", "A.2.2"]
    new = mp.prepare("RN1", "A.2.3")
    assert new.path == ["A.3.1", "A.2.1", "A.2.3"] and new.anchor == 1
    assert new.hop_vcis[("A.3.1", "A.2.1")] == old.hop_vcis[("A.3.1", "A.2.1")]
    rel = mp.complete("RN1")
    assert [(r.scope, r.a, r.b) for r in rel] == [("A.2", "A.2.1", "A.2.2")]
    # moving back up to A.2.1 would shorten the branch, so it waits
    with pytest.raises(HandoffDeferred):
        mp.prepare("RN1", "A.2.1")


def test_deferred_when_no_long_enough_path():
    t = PeerGroupTree.from_links([("A.1.1", "A.1.2"), ("A.1.2", "A.1.3"), ("A.1.1", "A.1.4"), ("A.1.1", "EXT")])
    with pytest.raises(HandoffDeferred):
        prepare_handoff("RN1", "A.1.3", "A.1.4", t, VciTable(), ["A.1.1", "A.1.2", "A.1.3"])


def test_scoped_call_abort_rejects_outside_hop():
    b = VcBranch("RN1", "A.3.1", ["A.3.1", "A.1.1"], status="pre_established")
    with pytest.raises(ScopeViolation):
        scoped_call_abort(b, "A.1")
    rel = scoped_call_abort(b, "A")
    assert b.status == "aborted" and len(rel) == 1
    assert scoped_call_abort(b, "A") == []


def test_cancel_releases_pre_established_branch():
    mp = MobilePnni(example_tree())
    mp.attach("RN1", "A.1.1", "A.3.1", (42,))
    mp.prepare("RN1", "A.2.2")
    mp.cancel("RN1")
    assert len(mp.live("RN1")) == 1 and mp.active("RN1").path[-1] == "A.1.1"
    assert mp.vcis.owned("A.2.2", "RN1") == []


def test_link_vci_allocation():
    v = VciTable()
    assert [v.link_free("a", "b") for _ in range(3)] == [32, 33, 34]
    v.link_release("b", "a", 33)
    assert v.link_free("a", "b") == 33


@pytest.mark.parametrize("old,new,ordered", [(2, 2, True), (2, 3, True), (3, 2, False)])
def test_replay_cells(old, new, ordered):
    seq = replay_cells(list("x" * (old + 1)), list("y" * (new + 1)), switch_time=5)
    assert sorted(seq) == list(range(20))
    assert strictly_increasing(seq) is ordered


@pytest.mark.property
@given(st.integers(0, 10), st.integers(0, 10), st.floats(0, 25))
def test_replay_order_iff_not_shorter(lo, ln, switch):
    seq = replay_cells(["n"] * (lo + 1), ["n"] * (ln + 1), switch)
    crosses = 0 < switch < 19
    if ln >= lo or not crosses:
        assert strictly_increasing(seq)


def test_random_hierarchy_connected():
    import networkx as nx

    t = random_hierarchy(np.random.default_rng(3), depth=3)
    assert nx.is_connected(t.graph) and "EXT" in t.graph
    assert all(x.startswith("A.") for x in t.lns())


@pytest.mark.parametrize("seed", range(40))
def test_random_handoffs(seed):
    status, problems = pnni_random_case(seed)
    assert problems == []
