"""Domain types shared by the simulator, the protocol engine and the metrics."""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple, Optional

TWO_PI = 2.0 * math.pi


class Position(NamedTuple):
    """Planar coordinates in meters."""

    x: float
    y: float


def distance(a: Position, b: Position) -> float:
    """Euclidean distance between two positions, in meters."""
    return math.hypot(a[0] - b[0], a[1] - b[1])


def normalize_heading(heading: float) -> float:
    h = math.fmod(heading, TWO_PI)
    if h < 0:
        h += TWO_PI
    # fmod can round up to exactly 2*pi for tiny negative inputs
    return 0.0 if h >= TWO_PI else h


_TOKEN = re.compile(r"\d+|\D+")


@lru_cache(maxsize=None)
def id_key(ident: str) -> tuple:
    """Natural sort key so that ``"v4" < "v7" < "v10"`` and ``"4" < "10"``."""
    return tuple((0, int(tok), "") if tok.isdigit() else (1, 0, tok) for tok in _TOKEN.findall(ident))


class EventKind(str, enum.Enum):
    FIXED = "fixed"
    MOBILE = "mobile"


class PacketKind(str, enum.Enum):
    ANNOUNCEMENT = "announcement"
    CLUSTERING = "clustering"
    MONITORING = "monitoring"


class Role(str, enum.Enum):
    NONE = "none"
    MONITOR = "monitor"
    RELAY = "relay"
    GATEWAY = "gateway"


COOPERATING_ROLES = frozenset({Role.MONITOR, Role.RELAY, Role.GATEWAY})


@dataclass(frozen=True)
class VehicleState:
    id: str
    position: Position
    heading: float = 0.0
    speed: float = 0.0
    active: bool = True

    def __post_init__(self):
        if self.speed < 0:
            raise ValueError(f"vehicle {self.id}: negative speed {self.speed}")
        if not (0.0 <= self.heading < TWO_PI):
            raise ValueError(f"vehicle {self.id}: heading {self.heading} outside [0, 2pi)")


@dataclass(frozen=True)
class BaseStation:
    id: int
    position: Position
    range: float

    def __post_init__(self):
        if self.range <= 0:
            raise ValueError(f"base station {self.id}: range must be positive")


@dataclass(frozen=True)
class EventSpec:
    """An event with a lifetime and a time-stamped trajectory.

    Fixed events carry a trajectory whose positions are all equal.
    """

    id: str
    kind: EventKind
    trajectory: tuple[tuple[float, Position], ...]
    t_start: float
    t_end: float

    def __post_init__(self):
        object.__setattr__(self, "kind", EventKind(self.kind))
        traj = tuple((float(t), Position(float(p[0]), float(p[1]))) for t, p in self.trajectory)
        object.__setattr__(self, "trajectory", traj)
        if not self.t_start < self.t_end:
            raise ValueError(f"event {self.id}: t_start must precede t_end")
        if not traj:
            raise ValueError(f"event {self.id}: empty trajectory")
        times = [t for t, _ in traj]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError(f"event {self.id}: trajectory times must be strictly increasing")
        if times[0] > self.t_start + 1e-9 or times[-1] < self.t_end - 1e-9:
            raise ValueError(f"event {self.id}: trajectory does not cover [t_start, t_end]")
        if self.kind is EventKind.FIXED and len({p for _, p in traj}) != 1:
            raise ValueError(f"event {self.id}: fixed event with a moving trajectory")

    @classmethod
    def fixed(cls, id: str, position, t_start: float, t_end: float) -> "EventSpec":
        p = Position(*position)
        return cls(id, EventKind.FIXED, ((t_start, p), (t_end, p)), t_start, t_end)

    def is_active(self, t: float) -> bool:
        return self.t_start - 1e-9 <= t <= self.t_end + 1e-9


@dataclass(frozen=True)
class Packet:
    packet_id: int
    kind: PacketKind
    event_id: str
    origin: str
    created_at: float
    t_max: Optional[float] = None
    hop_count: int = 0
    payload_size: int = 0

    def __post_init__(self):
        if (self.t_max is not None) != (self.kind is PacketKind.ANNOUNCEMENT):
            raise ValueError("t_max is carried by announcement packets only")
        if self.hop_count < 0:
            raise ValueError("hop_count must be non-negative")


@dataclass
class GroupIds:
    """Allocator for group identifiers; an id is never handed out twice."""

    _next: int = field(default=1)

    def new(self) -> int:
        gid = self._next
        self._next += 1
        return gid
