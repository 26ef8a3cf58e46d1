"""Inter-ES link selection under directional-beam constraints, and RN beam/slot plans.

The link search is a consistent-labeling problem: every candidate ES pair within
``rlink`` is a variable whose label is either "no link" or one of ``fmax``
frequency pairs.  Two links that interfere may not share a frequency, and the
links that are switched on must connect every ES.

Among admissible labelings the solver returns the one with the fewest links and,
among those, the lexicographically smallest label vector.  Candidates are
ordered by (length, a, b) and labels by (f1 .. fmax, no-link), so short links and
low frequencies win ties.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .core import Callsign, GeoPosition, PositionTable, bearing, distance

NO_LINK = 0


class TopologyInfeasible(Exception):
    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


class BeamAllocationError(Exception):
    pass


@dataclass(frozen=True)
class BeamConstraints:
    rlink: float = 1000.0
    fmax: int = 3
    imult: float = 1.0
    twidth: float = 10.0
    rwidth: float = 10.0

    def __post_init__(self):
        if not self.rlink > 0:
            raise ValueError("rlink must be positive")
        if self.fmax < 1:
            raise ValueError("fmax must be >= 1")
        if self.imult < 0:
            raise ValueError("imult must be >= 0")
        for w in (self.twidth, self.rwidth):
            if not 0 < w <= 360:
                raise ValueError("beam widths must lie in (0, 360]")


def angle_diff(a: float, b: float) -> float:
    """Smallest absolute difference between two compass angles."""
    d = abs(a - b) % 360.0
    return min(d, 360.0 - d)


def links_interfere(
    l1: tuple[GeoPosition, GeoPosition],
    l2: tuple[GeoPosition, GeoPosition],
    c: BeamConstraints,
) -> bool:
    """Does the transmitter of directed link ``l1`` disturb the receiver of ``l2``?

    The receiver must fall inside the disk of radius ``imult * |l1|`` around the
    l1 transmitter and inside its transmit sector (``twidth/2`` either side of
    the beam axis).  A receiver co-located with the transmitter is always inside
    the sector.  The relation is directional; see :func:`links_conflict`.
    """
    tx, rx = l1
    victim = l2[1]
    radius = c.imult * distance(tx, rx)
    if radius <= 0:
        return False
    d = distance(tx, victim)
    if d > radius:
        return False
    if d == 0:
        return True
    return angle_diff(bearing(tx, victim), bearing(tx, rx)) <= c.twidth / 2


def links_conflict(
    a: tuple[GeoPosition, GeoPosition],
    b: tuple[GeoPosition, GeoPosition],
    c: BeamConstraints,
) -> bool:
    """Undirected conflict: any transmit direction of one disturbs any receiver of the other."""
    for l1 in (a, a[::-1]):
        for l2 in (b, b[::-1]):
            if links_interfere(l1, l2, c) or links_interfere(l2, l1, c):
                return True
    return False


@dataclass(frozen=True)
class TopologySolution:
    nodes: tuple[tuple[Callsign, GeoPosition], ...]
    links: tuple[tuple[Callsign, Callsign, int], ...]

    def positions(self) -> dict[Callsign, GeoPosition]:
        return dict(self.nodes)

    def dump(self) -> str:
        out = [f"nodes {len(self.nodes)}"]
        out += [f"  {cs} {pos}" for cs, pos in self.nodes]
        out.append(f"links {len(self.links)}")
        out += [f"  {a}-{b} f{f}" for a, b, f in self.links]
        return "\n".join(out) + "\n"


def candidate_links(positions: Mapping[Callsign, GeoPosition], c: BeamConstraints):
    """ES pairs within rlink, ordered by (length, a, b)."""
    names = sorted(positions)
    pairs = []
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            d = distance(positions[a], positions[b])
            if d <= c.rlink:
                pairs.append((d, a, b))
    pairs.sort()
    return [(a, b) for _, a, b in pairs]


def conflict_matrix(positions, cands, c: BeamConstraints) -> list[list[bool]]:
    geo = [(positions[a], positions[b]) for a, b in cands]
    n = len(cands)
    m = [[False] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            m[i][j] = m[j][i] = links_conflict(geo[i], geo[j], c)
    return m


class _DSU:
    def __init__(self, items):
        self.parent = {x: x for x in items}

    def find(self, x):
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[ra] = rb
            return True
        return False


def connected(nodes: Iterable[Callsign], edges: Iterable[tuple[Callsign, Callsign]]) -> bool:
    nodes = list(nodes)
    if len(nodes) <= 1:
        return True
    dsu = _DSU(nodes)
    comps = len(nodes)
    for a, b in edges:
        if dsu.union(a, b):
            comps -= 1
    return comps == 1


def label_key(labels: tuple[int, ...], fmax: int) -> tuple:
    """Preference key shared by the solver and the brute-force oracle."""
    links = sum(1 for x in labels if x != NO_LINK)
    return (links, tuple(fmax + 1 if x == NO_LINK else x for x in labels))


def solve_topology(positions: PositionTable | Mapping[Callsign, GeoPosition], c: BeamConstraints) -> TopologySolution:
    """Backtracking search for the preferred connected, interference-free labeling.

    Raises :class:`TopologyInfeasible` with reason ``"disconnected beyond rlink"``
    when even all candidate links cannot connect the ESs, or
    ``"frequency exhaustion"`` when no conflict-free labeling connects them.
    """
    if isinstance(positions, PositionTable):
        positions = positions.positions()
    names = sorted(positions)
    if not names:
        raise ValueError("need at least one ES")
    nodes = tuple((cs, positions[cs]) for cs in names)
    if len(names) == 1:
        return TopologySolution(nodes, ())
    cands = candidate_links(positions, c)
    if not connected(names, cands):
        raise TopologyInfeasible("disconnected beyond rlink")
    conflict = conflict_matrix(positions, cands, c)
    r = len(cands)
    labels = [NO_LINK] * r
    order = list(range(1, c.fmax + 1)) + [NO_LINK]

    def reachable(i: int) -> bool:
        # links chosen so far plus every undecided candidate must still connect
        edges = [cands[j] for j in range(i) if labels[j] != NO_LINK] + cands[i:]
        return connected(names, edges)

    def dfs(i: int, used: int, budget: int) -> bool:
        if used > budget or used + (r - i) < budget:
            return False
        if i == r:
            return connected(names, [cands[j] for j in range(r) if labels[j] != NO_LINK])
        for lab in order:
            if lab != NO_LINK:
                if used == budget:
                    continue
                if any(labels[j] == lab and conflict[i][j] for j in range(i)):
                    continue
            labels[i] = lab
            if (lab != NO_LINK or reachable(i + 1)) and dfs(i + 1, used + (lab != NO_LINK), budget):
                return True
        labels[i] = NO_LINK
        return False

    for budget in range(len(names) - 1, r + 1):
        if dfs(0, 0, budget):
            links = tuple(
                (a, b, lab) for (a, b), lab in zip(cands, labels) if lab != NO_LINK
            )
            return TopologySolution(nodes, links)
    raise TopologyInfeasible("frequency exhaustion")


def nearest_neighbor_topology(positions: Mapping[Callsign, GeoPosition], c: BeamConstraints) -> TopologySolution:
    """Stand-in for the full solver: a minimum spanning tree, frequencies round-robin."""
    names = sorted(positions)
    nodes = tuple((cs, positions[cs]) for cs in names)
    cands = candidate_links(positions, c)
    dsu = _DSU(names)
    links = []
    for a, b in cands:
        if dsu.union(a, b):
            links.append((a, b, len(links) % c.fmax + 1))
    if len(links) != len(names) - 1:
        raise TopologyInfeasible("disconnected beyond rlink")
    return TopologySolution(nodes, tuple(links))


def validate_solution(sol: TopologySolution, c: BeamConstraints) -> list[str]:
    """Independent re-check of a solution's invariants; returns a list of problems."""
    pos = sol.positions()
    problems = []
    for a, b, f in sol.links:
        if distance(pos[a], pos[b]) > c.rlink:
            problems.append(f"{a}-{b} longer than rlink")
        if not 1 <= f <= c.fmax:
            problems.append(f"{a}-{b} frequency {f} out of range")
    if not connected(pos, [(a, b) for a, b, _ in sol.links]):
        problems.append("link graph not connected")
    for i, (a, b, f) in enumerate(sol.links):
        for a2, b2, f2 in sol.links[i + 1:]:
            if f == f2 and links_conflict((pos[a], pos[b]), (pos[a2], pos[b2]), c):
                problems.append(f"{a}-{b} and {a2}-{b2} interfere on f{f}")
    return problems


def topology_cost_seconds(n: int, fmax: int, r: int, k_top: float) -> float:
    """Computation time of the labeling search, ``k_top * (n^2 + (fmax+1)^r)``."""
    return k_top * (n * n + (fmax + 1) ** r)


# --- RN beam plans ------------------------------------------------------------


@dataclass(frozen=True)
class Beam:
    center: float
    width: float
    frequency: int
    slots: tuple[tuple[int, Callsign], ...]

    def contains(self, angle: float) -> bool:
        return angle_diff(angle, self.center) <= self.width / 2 + 1e-9


@dataclass(frozen=True)
class BeamPlan:
    beams: tuple[Beam, ...] = ()
    slots_per_beam: int = 4
    assignment: dict = field(default_factory=dict, compare=False)

    def lookup(self, rn: Callsign) -> tuple[int, int, int]:
        """(beam index, frequency, slot) of an RN."""
        return self.assignment[rn]

    def tuples_in_use(self) -> set[tuple[int, int]]:
        return {(b, s) for b, _, s in self.assignment.values()}

    def dump(self) -> str:
        out = []
        for i, b in enumerate(self.beams):
            slots = " ".join(f"{s}:{rn}" for s, rn in b.slots)
            out.append(f"beam {i} center={b.center:.3f} width={b.width:g} f{b.frequency} {slots}")
        return "\n".join(out) + "\n"


def _greedy_arcs(angles: list[float], start: int, width: float) -> list[list[int]]:
    n = len(angles)
    clusters, i = [], 0
    while i < n:
        first = (start + i) % n
        members = [first]
        i += 1
        while i < n:
            j = (start + i) % n
            if (angles[j] - angles[first]) % 360.0 <= width + 1e-9:
                members.append(j)
                i += 1
            else:
                break
        clusters.append(members)
    return clusters


def allocate_beams(
    es: GeoPosition,
    rns: PositionTable | Mapping[Callsign, GeoPosition],
    c: BeamConstraints,
    max_beams: int = 4,
    slots_per_beam: int = 4,
) -> BeamPlan:
    """Cluster RNs by bearing into at most ``max_beams`` sectors of width ``twidth``.

    Every rotation of the bearing-sorted list is tried as the greedy starting
    point and the one with fewest clusters kept, which is optimal for covering
    points on a circle with fixed-width arcs.  Slots are handed out in bearing
    order inside each beam; overlapping beams receive distinct frequencies.
    """
    if isinstance(rns, PositionTable):
        rns = rns.positions()
    if not rns:
        return BeamPlan((), slots_per_beam, {})
    for cs, p in rns.items():
        if distance(es, p) > c.rlink:
            raise ValueError(f"{cs} is beyond rlink")
    order = sorted(rns, key=lambda cs: (bearing(es, rns[cs]), cs))
    angles = [bearing(es, rns[cs]) for cs in order]
    best = None
    for start in range(len(order)):
        clusters = _greedy_arcs(angles, start, c.twidth)
        if best is None or len(clusters) < len(best):
            best = clusters
    if len(best) > max_beams:
        raise BeamAllocationError(f"{len(best)} sectors needed, {max_beams} beams available")
    if any(len(cl) > slots_per_beam for cl in best):
        raise BeamAllocationError(f"a sector holds more than {slots_per_beam} RNs")

    raw = []
    for cl in best:
        lo = angles[cl[0]]
        extent = (angles[cl[-1]] - lo) % 360.0
        center = (lo + extent / 2) % 360.0
        raw.append((center, [order[k] for k in cl]))
    raw.sort(key=lambda t: t[0])

    beams, assignment = [], {}
    for idx, (center, members) in enumerate(raw):
        taken = {
            b.frequency for b in beams if angle_diff(b.center, center) < c.twidth
        }
        freq = next(f for f in range(1, len(raw) + 2) if f not in taken)
        if freq > c.fmax:
            raise BeamAllocationError("not enough frequencies for overlapping beams")
        slots = tuple((s + 1, rn) for s, rn in enumerate(members))
        for s, rn in slots:
            assignment[rn] = (idx, freq, s)
        beams.append(Beam(center, c.twidth, freq, slots))
    return BeamPlan(tuple(beams), slots_per_beam, assignment)


def weight_table_entries(k_el: int, m: int, b: int, max_bits: int = 64) -> tuple[int, int]:
    """Number of antenna weight tables and entries per table: ``(k_el, 2**(m*b))``."""
    if min(k_el, m, b) < 1:
        raise ValueError("all arguments must be >= 1")
    if m * b > max_bits:
        raise OverflowError(f"2**{m * b} entries exceeds the {max_bits}-bit guard")
    return k_el, 2 ** (m * b)
