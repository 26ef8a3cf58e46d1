"""Mobile PNNI handoff: scoped branches, replacement VCIs and SCOPED CALL ABORT.

Logical nodes (LNs) carry dotted hierarchical names such as ``A.1.2``; the peer
group (PG) of an LN is its name without the last component, and the PG of a PG
is found the same way.  Logical links form an undirected ``networkx`` graph that
may also contain nodes outside the hierarchy (external neighbours).

A handoff from ``old_ln`` to ``new_ln`` is confined to the lowest PG holding
both.  A branch from that PG's border LN to the new LN is set up first, with a
hop count no smaller than the old branch so cells cannot overtake each other;
once the RN has moved the old branch is released hop by hop, never outside the
scope.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import networkx as nx
import numpy as np

FIRST_DYNAMIC_VCI = 32
MAX_VCI = 65535


class ScopeError(ValueError):
    """The two LNs share no peer group."""


class ScopeViolation(AssertionError):
    """A release would leave the handoff scope."""


class HandoffDeferred(RuntimeError):
    """No admissible branch satisfies the path-length rule."""


def parts(name: str) -> list[str]:
    return name.split(".")


def parent(name: str) -> str:
    p = parts(name)
    if len(p) < 2:
        raise ScopeError(f"{name} has no enclosing peer group")
    return ".".join(p[:-1])


def in_scope(ln: str, pg: str) -> bool:
    return ln.startswith(pg + ".")


@dataclass
class PeerGroupTree:
    graph: nx.Graph
    leaders: dict[str, str] = field(default_factory=dict)  # lowest-level PG -> leader LN

    @classmethod
    def from_links(cls, links: Iterable[tuple[str, str]], lns: Iterable[str] = ()) -> "PeerGroupTree":
        g = nx.Graph()
        g.add_nodes_from(lns)
        g.add_edges_from(links)
        tree = cls(g)
        for pg in tree.lowest_pgs():
            tree.leaders[pg] = min(tree.members(pg))
        return tree

    def lns(self) -> list[str]:
        return sorted(n for n in self.graph if "." in n)

    def lowest_pgs(self) -> list[str]:
        return sorted({parent(n) for n in self.lns()})

    def members(self, pg: str) -> list[str]:
        return [n for n in self.lns() if in_scope(n, pg)]

    def border_lns(self, pg: str) -> list[str]:
        """LNs of ``pg`` with a logical link leaving it."""
        return sorted(n for n in self.members(pg) if any(not in_scope(m, pg) for m in self.graph[n]))

    def scope_graph(self, pg: str) -> nx.Graph:
        return self.graph.subgraph(self.members(pg))


def handoff_scope(old_ln: str, new_ln: str, tree: PeerGroupTree) -> str:
    """Lowest common peer group of the two LNs."""
    for ln in (old_ln, new_ln):
        if ln not in tree.graph:
            raise ScopeError(f"{ln} is not in the hierarchy")
    if old_ln == new_ln:
        return parent(old_ln)
    a, b = parts(parent(old_ln)), parts(parent(new_ln))
    common = []
    for x, y in zip(a, b):
        if x != y:
            break
        common.append(x)
    if not common:
        raise ScopeError(f"{old_ln} and {new_ln} belong to disjoint hierarchies")
    return ".".join(common)


def hops(path: list[str]) -> list[tuple[str, str]]:
    return list(zip(path, path[1:]))


@dataclass
class VcBranch:
    rn: str
    root: str
    path: list[str]
    vci_map: dict[int, int] = field(default_factory=dict)  # RN's old VCI -> VCI on this branch
    hop_vcis: dict[tuple[str, str], int] = field(default_factory=dict)
    status: str = "active"
    anchor: int = 0  # path index where this branch leaves the one it replaces

    @property
    def length(self) -> int:
        return len(self.path) - 1

    @property
    def replacement_vcis(self) -> tuple[tuple[int, int], ...]:
        """``(original, replacement)`` pairs for the HANDOFF packet."""
        return tuple((old, new) for old, new in sorted(self.vci_map.items()) if new != old)


@dataclass
class VciTable:
    """VCIs in use at each LN (access side) and on each logical link."""

    at_ln: dict[str, dict[int, str]] = field(default_factory=dict)
    on_link: dict[tuple[str, str], set[int]] = field(default_factory=dict)

    def used(self, ln: str) -> set[int]:
        return set(self.at_ln.get(ln, {}))

    def owned(self, ln: str, rn: str) -> list[int]:
        return sorted(v for v, o in self.at_ln.get(ln, {}).items() if o == rn)

    def claim(self, ln: str, vci: int, rn: str) -> None:
        self.at_ln.setdefault(ln, {})[vci] = rn

    def release(self, ln: str, vci: int) -> None:
        self.at_ln.get(ln, {}).pop(vci, None)

    def link_free(self, a: str, b: str) -> int:
        key = tuple(sorted((a, b)))
        used = self.on_link.setdefault(key, set())
        v = FIRST_DYNAMIC_VCI
        while v in used:
            v += 1
        if v > MAX_VCI:
            raise OverflowError(f"no free VCI on {a}-{b}")
        used.add(v)
        return v

    def link_release(self, a: str, b: str, v: int) -> None:
        self.on_link.get(tuple(sorted((a, b))), set()).discard(v)


def scope_root(tree: PeerGroupTree, scope: str) -> str:
    borders = tree.border_lns(scope)
    if not borders:
        raise ScopeError(f"peer group {scope} has no border LN")
    return borders[0]


def branch_path(tree: PeerGroupTree, scope: str, root: str, ln: str) -> list[str]:
    """Shortest, then lexicographically first, path inside ``scope``."""
    g = tree.scope_graph(scope)
    return min(nx.all_shortest_paths(g, root, ln), key=tuple)


def prepare_handoff(
    rn: str,
    old_ln: str,
    new_ln: str,
    tree: PeerGroupTree,
    active_vcs: VciTable,
    old_path: list[str] | None = None,
) -> VcBranch:
    """Build the pre-established branch from the scope's border LN to ``new_ln``."""
    scope = handoff_scope(old_ln, new_ln, tree)
    if old_path is None:
        old_path = branch_path(tree, scope, scope_root(tree, scope), old_ln)
    # the new branch leaves the old one where it last enters the scope
    anchor = len(old_path) - 1
    while anchor > 0 and in_scope(old_path[anchor - 1], scope):
        anchor -= 1
    prefix, start = old_path[:anchor], old_path[anchor]
    need = len(old_path) - 1 - anchor
    g = tree.scope_graph(scope).subgraph(n for n in tree.members(scope) if n not in prefix)
    tail = None
    if start == new_ln:
        if need == 0:
            tail = [start]
    elif new_ln in g:
        # grow the hop bound until some simple path of exactly that length exists
        for bound in range(max(need, 1), g.number_of_nodes()):
            found = [p for p in nx.all_simple_paths(g, start, new_ln, cutoff=bound) if len(p) - 1 == bound]
            if found:
                tail = list(min(found, key=tuple))
                break
    if tail is None:
        raise HandoffDeferred(f"no path {start}->{new_ln} of at least {need} hops inside {scope}")
    path = prefix + tail
    taken = active_vcs.used(new_ln)
    vci_map = {}
    for v in active_vcs.owned(old_ln, rn):
        if v not in taken:
            vci_map[v] = v
        else:
            r = FIRST_DYNAMIC_VCI
            while r in taken:
                r += 1
            vci_map[v] = r
        taken.add(vci_map[v])
    hop_vcis = {h: active_vcs.link_free(*h) for h in hops(tail)}
    for v in vci_map.values():
        active_vcs.claim(new_ln, v, rn)
    return VcBranch(rn, path[0], path, vci_map, hop_vcis, status="pre_established", anchor=anchor)


@dataclass(frozen=True)
class Release:
    scope: str
    a: str
    b: str
    vci: int


def scoped_call_abort(branch: VcBranch, scope: str, vcis: VciTable | None = None,
                      start: int | None = None) -> list[Release]:
    """Release the hops of ``branch`` from path index ``start`` (default: its anchor) on.

    Every released hop must lie inside ``scope``; the shared prefix stays up.
    """
    if branch.status == "aborted":
        return []
    out = []
    for a, b in hops(branch.path[branch.anchor if start is None else start:]):
        if not (in_scope(a, scope) and in_scope(b, scope)):
            raise ScopeViolation(f"hop {a}-{b} is outside peer group {scope}")
        v = branch.hop_vcis.get((a, b), 0)
        out.append(Release(scope, a, b, v))
        if vcis is not None and v:
            vcis.link_release(a, b, v)
    if vcis is not None:
        for v in branch.vci_map.values():
            if vcis.at_ln.get(branch.path[-1], {}).get(v) == branch.rn:
                vcis.release(branch.path[-1], v)
    branch.status = "aborted"
    return out


def replay_cells(
    old_branch: VcBranch | list[str],
    new_branch: VcBranch | list[str],
    switch_time: float,
    n_cells: int = 20,
    interval: float = 1.0,
    unit_delay: float = 3.0,
) -> list[int]:
    """Sequence numbers in the order they reach the root.

    Cell ``k`` leaves the RN at ``k * interval`` over the old branch before
    ``switch_time`` and over the new one after; a branch of ``h`` hops takes
    ``h * unit_delay``.
    """
    def length(b):
        return b.length if isinstance(b, VcBranch) else len(b) - 1

    lo, ln_ = length(old_branch), length(new_branch)
    arrivals = []
    for k in range(n_cells):
        t = k * interval
        h = lo if t < switch_time else ln_
        arrivals.append((t + h * unit_delay, k))
    arrivals.sort()
    return [k for _, k in arrivals]


def strictly_increasing(seq: list[int]) -> bool:
    return all(a < b for a, b in zip(seq, seq[1:]))


# --- registry of branches per RN -----------------------------------------------


@dataclass
class Signal:
    kind: str  # CALL_SETUP, SCOPED_CALL_ABORT, RELEASE
    rn: str
    detail: str

    def line(self) -> str:
        return f"{self.kind} {self.rn} {self.detail}"


class MobilePnni:
    """Tracks each RN's branches and the signalling they produce."""

    def __init__(self, tree: PeerGroupTree, vcis: VciTable | None = None):
        self.tree = tree
        self.vcis = vcis or VciTable()
        self.branches: dict[str, list[VcBranch]] = {}
        self.scopes: dict[str, str] = {}
        self.log: list[Signal] = []

    def live(self, rn: str) -> list[VcBranch]:
        return [b for b in self.branches.get(rn, []) if b.status != "aborted"]

    def attach(self, rn: str, ln: str, root: str, rn_vcis: Iterable[int]) -> VcBranch:
        scope = parent(ln)
        while root not in self.tree.members(scope) and "." in scope:
            scope = parent(scope)
        path = branch_path(self.tree, scope, root, ln)
        for v in rn_vcis:
            self.vcis.claim(ln, v, rn)
        b = VcBranch(rn, root, path, {v: v for v in rn_vcis},
                     {h: self.vcis.link_free(*h) for h in hops(path)})
        self.branches.setdefault(rn, []).append(b)
        self.log.append(Signal("CALL_SETUP", rn, "->".join(path)))
        return b

    def active(self, rn: str) -> VcBranch:
        return next(b for b in self.live(rn) if b.status == "active")

    def prepare(self, rn: str, new_ln: str) -> VcBranch:
        old = self.active(rn)
        nb = prepare_handoff(rn, old.path[-1], new_ln, self.tree, self.vcis, old.path)
        nb.vci_map = {orig: nb.vci_map[cur] for orig, cur in old.vci_map.items() if cur in nb.vci_map}
        nb.hop_vcis.update({h: old.hop_vcis[h] for h in hops(nb.path[:nb.anchor + 1])})
        self.scopes[rn] = handoff_scope(old.path[-1], new_ln, self.tree)
        self.branches[rn].append(nb)
        self.log.append(Signal("CALL_SETUP", rn, "->".join(nb.path)))
        return nb

    def complete(self, rn: str) -> list[Release]:
        old = self.active(rn)
        new = next(b for b in self.live(rn) if b.status == "pre_established")
        scope = self.scopes.pop(rn)
        rel = self._abort(old, scope, new.anchor)
        for v in old.vci_map.values():
            self.vcis.release(old.path[-1], v)
        new.status, new.anchor = "active", 0
        return rel

    def cancel(self, rn: str) -> list[Release]:
        """Drop a pre-established branch whose predicted handoff was rolled back."""
        pre = [b for b in self.live(rn) if b.status == "pre_established"]
        out = []
        for b in pre:
            out += self._abort(b, self.scopes.pop(rn, handoff_scope(b.path[0], b.path[-1], self.tree)))
        return out

    def _abort(self, b: VcBranch, scope: str, start: int | None = None) -> list[Release]:
        first = b.anchor if start is None else start
        self.log.append(Signal("SCOPED_CALL_ABORT", b.rn, f"{scope} {'->'.join(b.path[first:])}"))
        rel = scoped_call_abort(b, scope, self.vcis, first)
        self.log += [Signal("RELEASE", b.rn, f"{r.a}-{r.b} vci={r.vci}") for r in rel]
        return rel


# --- example and random hierarchies ---------------------------------------------


def example_tree() -> PeerGroupTree:
    """Three lowest-level peer groups under A; A.3.1 borders an external node."""
    links = [
        ("A.1.1", "A.1.2"), ("A.2.1", "A.2.2"), ("A.3.1", "A.3.2"),
        ("A.3.1", "A.1.1"), ("A.3.1", "A.2.1"), ("A.1.2", "A.2.1"),
        ("A.3.1", "EXT"),
    ]
    return PeerGroupTree.from_links(links)


def random_hierarchy(rng: np.random.Generator, depth: int = 2, fanout: tuple[int, int] = (2, 3),
                     extra_links: float = 0.3) -> PeerGroupTree:
    """Random connected hierarchy rooted at ``A`` with one external neighbour."""
    g = nx.Graph()

    def build(name: str, level: int) -> list[str]:
        k = int(rng.integers(fanout[0], fanout[1] + 1))
        kids = [f"{name}.{i + 1}" for i in range(k)]
        if level == depth:
            g.add_nodes_from(kids)
            groups = [[c] for c in kids]
        else:
            groups = [build(c, level + 1) for c in kids]
        # join the children into a tree, then sprinkle extra links
        for i in range(1, len(groups)):
            j = int(rng.integers(0, i))
            a = groups[i][int(rng.integers(0, len(groups[i])))]
            b = groups[j][int(rng.integers(0, len(groups[j])))]
            g.add_edge(a, b)
        flat = [x for grp in groups for x in grp]
        for i, a in enumerate(flat):
            for b in flat[i + 1:]:
                if parent(a) != parent(b) and level == depth:
                    continue
                if rng.random() < extra_links / max(1, len(flat)):
                    g.add_edge(a, b)
        return flat

    everyone = build("A", 1)
    g.add_edge(everyone[int(rng.integers(0, len(everyone)))], "EXT")
    return PeerGroupTree.from_links(g.edges, g.nodes)
