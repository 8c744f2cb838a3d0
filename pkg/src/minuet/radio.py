"""Abstract radio: unit-disk connectivity, fixed per-hop latency, Bernoulli loss.

There is no MAC contention or queueing; channel capacity is unlimited.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .model import BaseStation, Position, VehicleState, distance, id_key


class RadioError(RuntimeError):
    """A transmission was attempted towards a receiver out of range."""


@dataclass(frozen=True)
class RadioConfig:
    v2v_range: float = 200.0
    loss_probability: float = 0.0
    hop_latency: Optional[float] = None  # None: one tick
    detection_range: float = 10.0

    def __post_init__(self):
        if self.v2v_range <= 0 or self.detection_range <= 0:
            raise ValueError("radio ranges must be positive")
        if not 0.0 <= self.loss_probability <= 1.0:
            raise ValueError("loss_probability must lie in [0, 1]")
        if self.hop_latency is not None and self.hop_latency <= 0:
            raise ValueError("hop_latency must be positive")

    def latency_ticks(self, tick: float) -> int:
        if self.hop_latency is None:
            return 1
        n = round(self.hop_latency / tick)
        if n < 1 or abs(n * tick - self.hop_latency) > 1e-9:
            raise ValueError(f"hop_latency {self.hop_latency} is not a positive multiple of the tick {tick}")
        return n


class Snapshot:
    """Positions of the active vehicles at one tick plus a KD-tree over them."""

    def __init__(self, ids: Sequence[str], xy: np.ndarray, v2v_range: float):
        self.ids = list(ids)
        self.xy = np.asarray(xy, dtype=float).reshape(-1, 2)
        self.row = {vid: i for i, vid in enumerate(self.ids)}
        self.v2v_range = v2v_range
        self._tree = cKDTree(self.xy) if len(self.ids) else None
        self._nbr_cache: dict[str, list[str]] = {}

    @classmethod
    def from_states(cls, states: Sequence[VehicleState], v2v_range: float) -> "Snapshot":
        return cls([s.id for s in states], np.array([s.position for s in states], dtype=float), v2v_range)

    def __contains__(self, vid: str) -> bool:
        return vid in self.row

    def __len__(self) -> int:
        return len(self.ids)

    def position(self, vid: str) -> Position:
        x, y = self.xy[self.row[vid]]
        return Position(float(x), float(y))

    def neighbors(self, vid: str) -> list[str]:
        """Active vehicles other than ``vid`` within ``v2v_range``, in id order."""
        hit = self._nbr_cache.get(vid)
        if hit is None:
            i = self.row[vid]
            rows = self._tree.query_ball_point(self.xy[i], self.v2v_range * (1 + 1e-9))
            rows = np.array(sorted(rows), dtype=np.int64)
            d2 = ((self.xy[rows] - self.xy[i]) ** 2).sum(axis=1)
            r2 = self.v2v_range * self.v2v_range
            hit = [self.ids[j] for j, dd in zip(rows.tolist(), d2.tolist()) if j != i and dd <= r2]
            self._nbr_cache[vid] = hit
        return hit

    def degree(self, vid: str) -> int:
        return len(self.neighbors(vid))

    def within(self, a: str, b: str, rng: float) -> bool:
        pa, pb = self.xy[self.row[a]], self.xy[self.row[b]]
        dx, dy = pa[0] - pb[0], pa[1] - pb[1]
        return dx * dx + dy * dy <= rng * rng

    def in_range(self, a: str, b: str) -> bool:
        return self.within(a, b, self.v2v_range)


def neighbors(v: VehicleState, snapshot: Snapshot) -> set[str]:
    return set(snapshot.neighbors(v.id))


class StationIndex:
    def __init__(self, stations: Sequence[BaseStation]):
        self.stations = sorted(stations, key=lambda b: b.id)
        self.xy = np.array([b.position for b in self.stations], dtype=float).reshape(-1, 2)
        self.ranges = np.array([b.range for b in self.stations], dtype=float)
        self.ids = [b.id for b in self.stations]

    def reachable(self, position) -> tuple[int, ...]:
        if not self.ids:
            return ()
        d2 = ((self.xy - np.asarray(position, dtype=float)) ** 2).sum(axis=1)
        return tuple(self.ids[i] for i in np.nonzero(d2 <= self.ranges**2)[0])

    def nearest_distance(self, position) -> float:
        if not self.ids:
            return float("inf")
        d2 = ((self.xy - np.asarray(position, dtype=float)) ** 2).sum(axis=1)
        return float(np.sqrt(d2.min()))


def reachable_base_stations(v: VehicleState, stations: Sequence[BaseStation]) -> set[int]:
    return {b.id for b in stations if distance(v.position, b.position) <= b.range}


class Delivery(NamedTuple):
    """A reception scheduled by :func:`transmit`."""

    arrival_tick: int
    packet_id: int
    hop_count: int
    sender: str
    receiver: str  # vehicle id, or "bs:<id>" for a base station


def transmit(
    packet_id: int,
    hop_count: int,
    sender: str,
    receiver: str,
    sender_pos,
    receiver_pos,
    link_range: float,
    now_tick: int,
    latency_ticks: int,
    loss_probability: float,
    rng: random.Random,
) -> Optional[Delivery]:
    """Send one copy over a single link.

    Returns the scheduled :class:`Delivery` (hop count incremented), or
    ``None`` when the copy is lost. Raises :class:`RadioError` when the
    receiver is out of range, which is always a caller bug.
    """
    dx = sender_pos[0] - receiver_pos[0]
    dy = sender_pos[1] - receiver_pos[1]
    if dx * dx + dy * dy > link_range * link_range:
        raise RadioError(f"{receiver} is out of range of {sender}")
    if loss_probability > 0.0 and (loss_probability >= 1.0 or rng.random() < loss_probability):
        return None
    return Delivery(now_tick + latency_ticks, packet_id, hop_count + 1, sender, receiver)


def station_tag(station_id: int) -> str:
    return f"bs:{station_id}"


def sort_ids(ids) -> list[str]:
    return sorted(ids, key=id_key)
