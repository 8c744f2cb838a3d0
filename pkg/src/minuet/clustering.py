"""Cluster formation strategies.

Two strategies share one group table and differ in exactly two places:

* ``dca_like`` is proactive: every vehicle inside the announcement zone
  joins or forms a group and transmits clustering packets, and unclustered
  zone vehicles are regrouped at every maintenance interval.
* ``pctt_like`` is target gated: only vehicles that have detected the event
  at least once transmit; other zone vehicles may attach to a nearby group
  passively, never transmitting, and no proactive regrouping happens.

Groups are one hop: a member must stay within radio range of its leader.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Protocol

from .model import GroupIds, id_key


class ClusterWorld(Protocol):
    """What a strategy needs to know about the world at the current tick."""

    now: int

    def is_active(self, vid: str) -> bool: ...

    def in_range(self, a: str, b: str) -> bool: ...

    def distance2(self, a: str, b: str) -> float: ...

    def degree(self, vid: str) -> int: ...

    def ever_detected(self, vid: str, event: str) -> bool: ...

    def in_zone(self, vid: str, event: str) -> bool: ...

    def zone_vehicles(self, event: str) -> list[str]: ...

    def zone_events(self) -> list[str]: ...


@dataclass(frozen=True)
class ClusteringConfig:
    strategy: str = "dca_like"
    maintenance_interval: float = 1.0
    grace_intervals: int = 2

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown clustering strategy {self.strategy!r}")
        if self.maintenance_interval <= 0:
            raise ValueError("maintenance_interval must be positive")
        if self.grace_intervals < 0:
            raise ValueError("grace_intervals must be non-negative")


@dataclass
class Member:
    transmits: bool
    missed: int = 0  # consecutive maintenance checks out of the leader's range


@dataclass
class Group:
    group_id: int
    event: str
    leader: str
    formed_at: int
    members: dict[str, Member] = field(default_factory=dict)

    def transmitting(self) -> list[str]:
        return [v for v, m in self.members.items() if m.transmits]


@dataclass(frozen=True)
class ClusterView:
    group_id: int
    leader: str
    members: frozenset
    event_id: str
    formed_at: int


@dataclass
class ClusterUpdate:
    """Side effects of a strategy call, applied by the protocol engine."""

    emitters: list[tuple[str, str]] = field(default_factory=list)  # (vehicle, event): one clustering packet each
    formed: list[ClusterView] = field(default_factory=list)

    def extend(self, other: "ClusterUpdate") -> "ClusterUpdate":
        self.emitters.extend(other.emitters)
        self.formed.extend(other.formed)
        return self


def elect_leader(candidates: Iterable[str], world: ClusterWorld) -> str:
    """Highest neighbour degree wins; ties go to the lowest vehicle id."""
    cands = list(candidates)
    if not cands:
        raise ValueError("cannot elect a leader from an empty candidate set")
    return min(cands, key=lambda v: (-world.degree(v), id_key(v)))


class ClusteringStrategy:
    kind = ""
    proactive = False

    def __init__(self, maintenance_interval_ticks: int = 10, grace_intervals: int = 2):
        self.maintenance_ticks = maintenance_interval_ticks
        self.grace_intervals = grace_intervals
        self.groups: dict[int, Group] = {}
        self.by_event: dict[str, dict[int, Group]] = {}
        self.membership: dict[tuple[str, str], int] = {}
        self._ids = GroupIds()

    # -- queries ------------------------------------------------------------

    def transmits(self, vid: str, event: str, world: ClusterWorld) -> bool:
        raise NotImplementedError

    def group_of(self, vid: str, event: str) -> Optional[Group]:
        gid = self.membership.get((vid, event))
        return None if gid is None else self.groups[gid]

    def is_transmitting_member(self, vid: str, event: str) -> bool:
        g = self.group_of(vid, event)
        return g is not None and g.members[vid].transmits

    def views(self, event: Optional[str] = None) -> list[ClusterView]:
        gs = self.groups.values() if event is None else self.by_event.get(event, {}).values()
        return [_view(g) for g in gs]

    def _transmitters(self, event: str) -> dict[str, Group]:
        return {v: g for g in self.by_event.get(event, {}).values() for v, m in g.members.items() if m.transmits}

    # -- mutation helpers -----------------------------------------------------

    def _form(self, leader: str, members: list[str], event: str, world: ClusterWorld, out: ClusterUpdate) -> Group:
        g = Group(self._ids.new(), event, leader, world.now)
        self.groups[g.group_id] = g
        self.by_event.setdefault(event, {})[g.group_id] = g
        for v in [leader] + [m for m in members if m != leader]:
            tx = self.transmits(v, event, world)
            g.members[v] = Member(tx)
            self.membership[(v, event)] = g.group_id
            if tx:
                out.emitters.append((v, event))
        out.formed.append(_view(g))
        return g

    def _join(self, vid: str, g: Group, world: ClusterWorld, out: ClusterUpdate) -> None:
        tx = self.transmits(vid, g.event, world)
        g.members[vid] = Member(tx)
        self.membership[(vid, g.event)] = g.group_id
        if tx:
            out.emitters.append((vid, g.event))

    def _leave(self, vid: str, g: Group, world: ClusterWorld, out: ClusterUpdate, notify: bool = True) -> None:
        m = g.members.pop(vid)
        del self.membership[(vid, g.event)]
        if notify and m.transmits and world.is_active(vid):
            out.emitters.append((vid, g.event))

    def _dissolve(self, g: Group) -> list[str]:
        for v in g.members:
            del self.membership[(v, g.event)]
        del self.groups[g.group_id]
        del self.by_event[g.event][g.group_id]
        return list(g.members)

    def _nearest_leader(self, vid: str, event: str, world: ClusterWorld) -> Optional[Group]:
        best, best_key = None, None
        for g in self.by_event.get(event, {}).values():
            if g.leader != vid and world.in_range(vid, g.leader):
                key = (world.distance2(vid, g.leader), g.group_id)
                if best_key is None or key < best_key:
                    best, best_key = g, key
        return best

    def _regroup(self, candidates: list[str], event: str, world: ClusterWorld, out: ClusterUpdate) -> None:
        """Attach candidates to leaders in range, then carve new groups out of the rest."""
        rest = []
        for v in sorted(candidates, key=id_key):
            g = self._nearest_leader(v, event, world)
            if g is not None:
                self._join(v, g, world, out)
            else:
                rest.append(v)
        while rest:
            leader = elect_leader(rest, world)
            members = [u for u in rest if u == leader or world.in_range(u, leader)]
            self._form(leader, members, event, world, out)
            taken = set(members)
            rest = [u for u in rest if u not in taken]

    # -- protocol hooks ---------------------------------------------------------

    def on_announcement(self, vid: str, event: str, world: ClusterWorld) -> ClusterUpdate:
        """React to a vehicle inside the announcement zone of ``event``."""
        out = ClusterUpdate()
        tx = self.transmits(vid, event, world)
        g = self.group_of(vid, event)
        if g is not None:
            m = g.members[vid]
            if tx and not m.transmits:
                m.transmits = True
                out.emitters.append((vid, event))
            return out
        g = self._nearest_leader(vid, event, world)
        if g is not None:
            self._join(vid, g, world, out)
        elif tx:
            self._form(vid, [vid], event, world, out)
        return out

    def depart(self, gone: Iterable[str], world: ClusterWorld) -> ClusterUpdate:
        """Remove vehicles that left the scenario; leaderless groups dissolve."""
        out = ClusterUpdate()
        gone = set(gone)
        if not gone:
            return out
        for key in sorted((k for k in self.membership if k[0] in gone), key=lambda k: (id_key(k[1]), id_key(k[0]))):
            gid = self.membership.get(key)
            if gid is None:
                continue
            g = self.groups[gid]
            if key[0] == g.leader:
                self._dissolve(g)
                remaining = [v for v in g.members if v not in gone and world.is_active(v)]
                self._after_leader_loss(remaining, g.event, world, out)
            else:
                self._leave(key[0], g, world, out, notify=False)
        return out

    def _after_leader_loss(self, remaining: list[str], event: str, world: ClusterWorld, out: ClusterUpdate) -> None:
        pass

    def end_event(self, event: str) -> None:
        for g in list(self.by_event.get(event, {}).values()):
            self._dissolve(g)
        self.by_event.pop(event, None)

    def maintenance_tick(self, world: ClusterWorld) -> ClusterUpdate:
        """Evict stale or out-of-range members, regroup, and emit the periodic packets."""
        out = ClusterUpdate()
        events = set(self.by_event) | (set(world.zone_events()) if self.proactive else set())
        for event in sorted(events, key=id_key):
            for g in list(self.by_event.get(event, {}).values()):
                if not world.in_zone(g.leader, event):
                    for v in self._dissolve(g):
                        m = g.members[v]
                        if m.transmits and world.is_active(v):
                            out.emitters.append((v, event))
                    continue
                for v in list(g.members):
                    if v == g.leader:
                        continue
                    m = g.members[v]
                    if not world.in_zone(v, event):
                        self._leave(v, g, world, out)
                    elif not world.in_range(v, g.leader):
                        m.missed += 1
                        if m.missed > self.grace_intervals:
                            self._leave(v, g, world, out)
                    else:
                        m.missed = 0
                for v, m in g.members.items():
                    if not m.transmits and self.transmits(v, event, world):
                        m.transmits = True
            if self.proactive:
                loose = [v for v in world.zone_vehicles(event) if (v, event) not in self.membership and world.is_active(v)]
                self._regroup(loose, event, world, out)
        for g in sorted(self.groups.values(), key=lambda g: g.group_id):
            for v in g.transmitting():
                out.emitters.append((v, g.event))
        return out


class DcaLike(ClusteringStrategy):
    kind = "dca_like"
    proactive = True

    def transmits(self, vid, event, world):
        return True

    def _after_leader_loss(self, remaining, event, world, out):
        cands = [v for v in remaining if world.in_zone(v, event)]
        if not cands:
            return
        leader = elect_leader(cands, world)
        members = [u for u in cands if u == leader or world.in_range(u, leader)]
        self._form(leader, members, event, world, out)


class PcttLike(ClusteringStrategy):
    kind = "pctt_like"
    proactive = False

    def transmits(self, vid, event, world):
        return world.ever_detected(vid, event)


STRATEGIES = {"dca_like": DcaLike, "pctt_like": PcttLike}


def make_strategy(config: ClusteringConfig, tick: float) -> ClusteringStrategy:
    ticks = max(1, round(config.maintenance_interval / tick))
    return STRATEGIES[config.strategy](ticks, config.grace_intervals)


def _view(g: Group) -> ClusterView:
    return ClusterView(g.group_id, g.leader, frozenset(g.members), g.event, g.formed_at)
