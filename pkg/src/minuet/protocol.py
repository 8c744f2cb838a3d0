"""The monitoring/dissemination engine.

Each tick runs, in order: mobility update and departures, detection,
delivery of in-flight copies (announcement handling and monitoring relay),
announcements, clustering maintenance, monitoring generation, and role
assignment. Everything observable is appended to a :class:`SimLog`.
"""

from __future__ import annotations

import random
from collections import defaultdict, deque
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .clustering import ClusteringConfig, ClusteringStrategy, ClusterUpdate, make_strategy
from .mobility import Scenario, TraceIndex, event_position_at
from .model import Packet, PacketKind, Position, Role, id_key
from .radio import RadioConfig, Snapshot, StationIndex, station_tag, transmit
from .simlog import (
    Active,
    Detection,
    Dropped,
    EventInfo,
    Forwarded,
    Generated,
    GroupFormed,
    Received,
    RoleChange,
    SimLog,
)

CONTROL_PAYLOAD = 64
# registry entries for packets older than this are discarded
PACKET_HORIZON_S = 30.0


@dataclass(frozen=True)
class ProtocolConfig:
    t_max: float = 1.5
    announce_interval: float = 1.0
    monitor_rate_pps: float = 10.0
    payload_bytes: int = 1200

    def __post_init__(self):
        if self.t_max < 0:
            raise ValueError("t_max must be non-negative")
        if self.announce_interval <= 0:
            raise ValueError("announce_interval must be positive")
        if self.monitor_rate_pps < 0:
            raise ValueError("monitor_rate_pps must be non-negative")
        if self.payload_bytes < 0:
            raise ValueError("payload_bytes must be non-negative")


class WorldState:
    """Per-tick view of the world handed to the clustering strategy."""

    def __init__(self, stations: StationIndex, v2v_range: float, zone_ticks: int):
        self.now = 0
        self.snapshot = Snapshot([], np.empty((0, 2)), v2v_range)
        self.stations = stations
        self.v2v_range = v2v_range
        self.zone_ticks = zone_ticks
        self.active_events: dict[str, Position] = {}
        self.detecting: dict[str, list[str]] = {}
        self.detection_history: set[tuple[str, str]] = set()
        self.zone_seen: dict[str, dict[str, int]] = {}
        self.roles: dict[tuple[str, str], tuple] = {}
        self._bs_d2: Optional[np.ndarray] = None
        self._reach: dict[str, tuple[int, ...]] = {}

    def update(self, tick: int, snapshot: Snapshot) -> None:
        self.now = tick
        self.snapshot = snapshot
        self._reach = {}
        st = self.stations
        if len(snapshot) and st.ids:
            diff = snapshot.xy[:, None, :] - st.xy[None, :, :]
            self._bs_d2 = (diff**2).sum(axis=2)
        else:
            self._bs_d2 = None

    # ClusterWorld protocol

    def is_active(self, vid: str) -> bool:
        return vid in self.snapshot.row

    def in_range(self, a: str, b: str) -> bool:
        return self.snapshot.in_range(a, b)

    def distance2(self, a: str, b: str) -> float:
        pa, pb = self.snapshot.xy[self.snapshot.row[a]], self.snapshot.xy[self.snapshot.row[b]]
        return float(((pa - pb) ** 2).sum())

    def degree(self, vid: str) -> int:
        return self.snapshot.degree(vid)

    def neighbors(self, vid: str) -> list[str]:
        return self.snapshot.neighbors(vid)

    def ever_detected(self, vid: str, event: str) -> bool:
        return (vid, event) in self.detection_history

    def mark_zone(self, vid: str, event: str) -> None:
        self.zone_seen.setdefault(event, {})[vid] = self.now

    def in_zone(self, vid: str, event: str) -> bool:
        seen = self.zone_seen.get(event, {}).get(vid)
        return seen is not None and self.now - seen <= self.zone_ticks and vid in self.snapshot.row

    def zone_vehicles(self, event: str) -> list[str]:
        seen = self.zone_seen.get(event, {})
        for v in [v for v, s in seen.items() if self.now - s > self.zone_ticks]:
            del seen[v]
        return sorted((v for v in seen if v in self.snapshot.row), key=id_key)

    def zone_events(self) -> list[str]:
        return [e for e in self.zone_seen if e in self.active_events]

    # base-station reachability

    def reachable(self, vid: str) -> tuple[int, ...]:
        hit = self._reach.get(vid)
        if hit is None:
            if self._bs_d2 is None:
                hit = ()
            else:
                row = self._bs_d2[self.snapshot.row[vid]]
                ids = self.stations.ids
                hit = tuple(ids[j] for j in np.nonzero(row <= self.stations.ranges**2)[0])
            self._reach[vid] = hit
        return hit

    def station_distance(self, vid: str) -> float:
        if self._bs_d2 is None:
            return float("inf")
        return float(np.sqrt(self._bs_d2[self.snapshot.row[vid]].min()))


class Simulation:
    """One deterministic run of a scenario under one clustering strategy."""

    def __init__(
        self,
        scenario: Scenario,
        radio: RadioConfig = RadioConfig(),
        protocol: ProtocolConfig = ProtocolConfig(),
        clustering: ClusteringConfig = ClusteringConfig(),
        tick: float = 0.1,
        seed: int = 0,
        meta: Optional[dict] = None,
        strategy: Optional[ClusteringStrategy] = None,
    ):
        if tick <= 0:
            raise ValueError("tick must be positive")
        self.scenario = scenario
        self.radio = radio
        self.protocol = protocol
        self.clustering = clustering
        self.tick_s = tick
        self.n_ticks = int(round(scenario.duration / tick))
        if abs(self.n_ticks * tick - scenario.duration) > 1e-6:
            raise ValueError("duration must be a multiple of the tick")
        self.rng = random.Random(seed)
        self.strategy = strategy if strategy is not None else make_strategy(clustering, tick)
        self.latency = radio.latency_ticks(tick)
        self.announce_ticks = max(1, round(protocol.announce_interval / tick))
        self.maint_ticks = self.strategy.maintenance_ticks
        zone_ticks = self.announce_ticks + self.strategy.grace_intervals * self.maint_ticks
        self.stations = StationIndex(scenario.base_stations)
        self.station_range = {b.id: b.range for b in scenario.base_stations}
        self.station_pos = {b.id: b.position for b in scenario.base_stations}
        self.world = WorldState(self.stations, radio.v2v_range, zone_ticks)
        self.traces = TraceIndex(scenario.traces)
        self.events = sorted(scenario.events, key=lambda e: id_key(e.id))
        self.tick = 0

        info = [EventInfo(e.id, e.kind.value, e.t_start, e.t_end) for e in self.events]
        meta = dict(meta or {})
        meta.setdefault("strategy", self.strategy.kind)
        meta.setdefault("seed", str(seed))
        self.log = SimLog(tick, self.n_ticks, info, meta)

        self._next_pid = 1
        self._packets: dict[int, Packet] = {}
        self._created: dict[int, int] = {}
        self._holders: dict[int, set[str]] = {}
        self._age_queue: deque[tuple[int, int]] = deque()
        self._in_flight: dict[int, list] = defaultdict(list)
        self._last_announce: dict[tuple[str, str], int] = {}
        self._credit: dict[tuple[str, str], float] = {}
        self._relays: set[tuple[str, str]] = set()
        self._heard: set[tuple[int, int]] = set()
        self._horizon = int(round(PACKET_HORIZON_S / tick))

    # -- helpers ---------------------------------------------------------------

    def now_s(self) -> float:
        return self.log.seconds(self.tick)

    def _emit(self, rec) -> None:
        self.log.records.append(rec)

    def _new_packet(self, kind: PacketKind, event: str, origin: str, register: bool = True) -> Packet:
        pid = self._next_pid
        self._next_pid += 1
        k = self.tick
        if kind is PacketKind.ANNOUNCEMENT:
            p = Packet(pid, kind, event, origin, self.now_s(), self.protocol.t_max, 0, CONTROL_PAYLOAD)
        elif kind is PacketKind.MONITORING:
            p = Packet(pid, kind, event, origin, self.now_s(), None, 0, self.protocol.payload_bytes)
        else:
            p = Packet(pid, kind, event, origin, self.now_s(), None, 0, CONTROL_PAYLOAD)
        self._emit(Generated(k, pid, kind.value, event, origin, p.payload_size, p.t_max))
        if register:
            self._packets[pid] = p
            self._created[pid] = k
            self._holders[pid] = {origin}
            self._age_queue.append((k, pid))
        return p

    def _apply(self, update: ClusterUpdate) -> None:
        for view in update.formed:
            self._emit(GroupFormed(self.tick, view.group_id, view.event_id, view.leader))
        for vid, event in update.emitters:
            self._new_packet(PacketKind.CLUSTERING, event, vid, register=False)

    def _send(self, p: Packet, hop: int, sender: str, receiver: str) -> None:
        snap = self.world.snapshot
        d = transmit(
            p.packet_id, hop, sender, receiver,
            snap.xy[snap.row[sender]], snap.xy[snap.row[receiver]],
            self.radio.v2v_range, self.tick, self.latency, self.radio.loss_probability, self.rng,
        )
        self._emit(Forwarded(self.tick, p.packet_id, sender, receiver, hop + 1))
        if d is None:
            self._emit(Dropped(self.tick, p.packet_id, "loss", receiver))
            return
        self._holders[p.packet_id].add(receiver)
        self._in_flight[d.arrival_tick].append(d)

    def _uplink(self, p: Packet, hop: int, sender: str, station: int) -> None:
        snap = self.world.snapshot
        tag = station_tag(station)
        d = transmit(
            p.packet_id, hop, sender, tag,
            snap.xy[snap.row[sender]], self.station_pos[station],
            self.station_range[station], self.tick, self.latency, self.radio.loss_probability, self.rng,
        )
        self._emit(Forwarded(self.tick, p.packet_id, sender, tag, hop + 1))
        if d is None:
            self._emit(Dropped(self.tick, p.packet_id, "loss", tag))
            return
        self._in_flight[d.arrival_tick].append(d)

    def _prune(self) -> None:
        cutoff = self.tick - self._horizon
        q = self._age_queue
        while q and q[0][0] < cutoff:
            _, pid = q.popleft()
            self._packets.pop(pid, None)
            self._created.pop(pid, None)
            self._holders.pop(pid, None)

    # -- protocol phases ---------------------------------------------------------

    def detect(self) -> list[Detection]:
        """Vehicles within detection range of each active event."""
        w = self.world
        snap = w.snapshot
        r2 = self.radio.detection_range**2
        out = []
        w.detecting = {}
        for ev_id, pos in w.active_events.items():
            if not len(snap):
                w.detecting[ev_id] = []
                continue
            d2 = ((snap.xy - np.asarray(pos)) ** 2).sum(axis=1)
            vids = [snap.ids[i] for i in np.nonzero(d2 <= r2)[0]]
            w.detecting[ev_id] = vids
            for v in vids:
                w.detection_history.add((v, ev_id))
                out.append(Detection(self.tick, v, ev_id))
        for rec in out:
            self._emit(rec)
        return out

    def announce(self) -> list[Packet]:
        """Detectors announce the event once per announcement interval."""
        w = self.world
        out = []
        for ev_id, vids in w.detecting.items():
            for v in vids:
                last = self._last_announce.get((v, ev_id))
                if last is not None and self.tick - last < self.announce_ticks:
                    continue
                self._last_announce[(v, ev_id)] = self.tick
                p = self._new_packet(PacketKind.ANNOUNCEMENT, ev_id, v)
                w.mark_zone(v, ev_id)
                self._apply(self.strategy.on_announcement(v, ev_id, w))
                self._flood(v, p, 0)
                out.append(p)
        return out

    def _flood(self, sender: str, p: Packet, hop: int) -> None:
        holders = self._holders[p.packet_id]
        for u in self.world.neighbors(sender):
            if u not in holders:
                self._send(p, hop, sender, u)

    def handle_announcement(self, vid: str, p: Packet, hop: int) -> bool:
        """Zone check, then forward and hand over to clustering. Returns False when discarded."""
        age = self.tick - self._created[p.packet_id]
        if age * self.tick_s > p.t_max + 1e-9:
            self._emit(Dropped(self.tick, p.packet_id, "az_expired", vid))
            return False
        if p.event_id not in self.world.active_events:
            self._emit(Dropped(self.tick, p.packet_id, "event_over", vid))
            return False
        self.world.mark_zone(vid, p.event_id)
        self._flood(vid, p, hop)
        self._apply(self.strategy.on_announcement(vid, p.event_id, self.world))
        return True

    def _route(self, vid: str, p: Packet, hop: int, origin: bool) -> None:
        """Move a monitoring packet one step towards the base stations.

        A holder in reach of base stations delivers to every one of them.
        Every holder then passes the packet to the transmitting members of
        the event's groups that are in range and strictly closer to their
        nearest base station, so each vehicle handles a packet at most once
        and the packet drifts towards the infrastructure.
        """
        ev = p.event_id
        strat = self.strategy
        w = self.world
        if not strat.is_transmitting_member(vid, ev):
            if not origin:
                self._emit(Dropped(self.tick, p.packet_id, "not_member", vid))
            return
        for b in w.reachable(vid):
            self._uplink(p, hop, vid, b)
        holders = self._holders[p.packet_id]
        here = w.station_distance(vid)
        targets = [
            u for u in w.neighbors(vid)
            if u not in holders and strat.is_transmitting_member(u, ev) and w.station_distance(u) < here
        ]
        if targets and not origin:
            self._relays.add((vid, ev))
        for u in targets:
            self._send(p, hop, vid, u)

    def _receive(self, d) -> None:
        pid = d.packet_id
        if d.receiver.startswith("bs:"):
            station = int(d.receiver[3:])
            # a station logs one receipt per packet per tick
            if (pid, station) in self._heard:
                self._emit(Dropped(self.tick, pid, "duplicate", d.receiver))
            else:
                self._heard.add((pid, station))
                self._emit(Received(self.tick, pid, station, d.hop_count))
            return
        p = self._packets.get(pid)
        if p is None:
            return
        if d.receiver not in self.world.snapshot.row:
            self._emit(Dropped(self.tick, pid, "receiver_gone", d.receiver))
            return
        if p.kind is PacketKind.ANNOUNCEMENT:
            self.handle_announcement(d.receiver, p, d.hop_count)
        else:
            self._route(d.receiver, p, d.hop_count, origin=False)

    def monitor_tick(self) -> None:
        rate = self.protocol.monitor_rate_pps * self.tick_s
        for ev_id, vids in self.world.detecting.items():
            for v in vids:
                c = self._credit.get((v, ev_id), 0.0) + rate
                n = int(c + 1e-9)
                self._credit[(v, ev_id)] = c - n
                for _ in range(n):
                    p = self._new_packet(PacketKind.MONITORING, ev_id, v)
                    self._route(v, p, 0, origin=True)

    def assign_roles(self) -> list[RoleChange]:
        w = self.world
        new: dict[tuple[str, str], set] = {}
        for ev_id, vids in w.detecting.items():
            for v in vids:
                new.setdefault((v, ev_id), set()).add(Role.MONITOR.value)
            for v in self.strategy._transmitters(ev_id):
                if v in w.snapshot.row and w.reachable(v):
                    new.setdefault((v, ev_id), set()).add(Role.GATEWAY.value)
        for v, ev_id in self._relays:
            if ev_id in w.active_events and v in w.snapshot.row:
                new.setdefault((v, ev_id), set()).add(Role.RELAY.value)
        changes = []
        old = w.roles
        keys = set(old) | set(new)
        for key in sorted(keys, key=lambda kv: (id_key(kv[1]), id_key(kv[0]))):
            roles = tuple(sorted(new.get(key, ())))
            if old.get(key, ()) != roles:
                changes.append(RoleChange(self.tick, key[0], key[1], roles))
        w.roles = {k: tuple(sorted(v)) for k, v in new.items()}
        for rec in changes:
            self._emit(rec)
        return changes

    # -- orchestration -------------------------------------------------------------

    def step(self) -> list:
        """Advance one tick; returns the records appended by it."""
        if self.tick >= self.n_ticks:
            raise RuntimeError("simulation already finished")
        k = self.tick
        start = len(self.log.records)
        w = self.world
        t = self.now_s()

        idx, xy, _, _ = self.traces.at(t)
        ids = [self.traces.ids[i] for i in idx.tolist()]
        prev = w.snapshot.row
        w.update(k, Snapshot(ids, xy, self.radio.v2v_range))
        if ids:
            self._emit(Active(k, len(ids)))
        gone = [v for v in prev if v not in w.snapshot.row]
        self._apply(self.strategy.depart(gone, w))

        current = {}
        for ev in self.events:
            pos = event_position_at(ev, t)
            if pos is not None:
                current[ev.id] = pos
        for ev_id in list(w.active_events):
            if ev_id not in current:
                self.strategy.end_event(ev_id)
                w.zone_seen.pop(ev_id, None)
        w.active_events = current

        self.detect()
        self._relays = set()
        self._heard = set()
        for d in self._in_flight.pop(k, ()):
            self._receive(d)
        self.announce()
        if k % self.maint_ticks == 0:
            self._apply(self.strategy.maintenance_tick(w))
        self.monitor_tick()
        self.assign_roles()
        if k % 100 == 0:
            self._prune()
        self.tick += 1
        return self.log.records[start:]

    def run(self) -> SimLog:
        while self.tick < self.n_ticks:
            self.step()
        return self.log
