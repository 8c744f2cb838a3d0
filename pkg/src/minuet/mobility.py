"""Vehicle traces, event trajectories and the active-vehicle set N(t).

Trace files are line oriented, one sample per line::

    time vehicle_id x y speed heading

Fields are whitespace separated, ``heading`` is in radians, blank lines and
``#`` comments are ignored, and a single leading header line (whose first
field is not a number) is allowed.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence, TextIO, Union

import numpy as np

from .model import (
    BaseStation,
    EventKind,
    EventSpec,
    Position,
    VehicleState,
    id_key,
    normalize_heading,
)

EPS = 1e-9


class TraceParseError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class Sample:
    t: float
    position: Position
    speed: float = 0.0
    heading: float = 0.0


@dataclass(frozen=True)
class VehicleTrace:
    id: str
    samples: tuple[Sample, ...]

    def __post_init__(self):
        if not self.samples:
            raise ValueError(f"trace {self.id}: no samples")
        times = [s.t for s in self.samples]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError(f"trace {self.id}: sample times must be strictly increasing")
        for s in self.samples:
            if not (math.isfinite(s.position.x) and math.isfinite(s.position.y)):
                raise ValueError(f"trace {self.id}: non-finite position at t={s.t}")

    @property
    def enter(self) -> float:
        return self.samples[0].t

    @property
    def exit(self) -> float:
        return self.samples[-1].t

    @classmethod
    def linear(cls, id: str, t0: float, p0, t1: float, p1) -> "VehicleTrace":
        """Constant-velocity trace from ``p0`` at ``t0`` to ``p1`` at ``t1``."""
        p0, p1 = Position(*p0), Position(*p1)
        if t1 <= t0:
            return cls(id, (Sample(t0, p0),))
        dx, dy = p1.x - p0.x, p1.y - p0.y
        speed = math.hypot(dx, dy) / (t1 - t0)
        heading = normalize_heading(math.atan2(dy, dx))
        return cls(id, (Sample(t0, p0, speed, heading), Sample(t1, p1, speed, heading)))

    @classmethod
    def static(cls, id: str, position, t0: float, t1: float) -> "VehicleTrace":
        p = Position(*position)
        return cls(id, (Sample(t0, p), Sample(t1, p)))


@dataclass(frozen=True)
class Scenario:
    traces: tuple[VehicleTrace, ...]
    events: tuple[EventSpec, ...]
    base_stations: tuple[BaseStation, ...]
    bounds: tuple[float, float, float, float]
    duration: float

    def __post_init__(self):
        if self.events and self.duration < max(e.t_end for e in self.events) - EPS:
            raise ValueError("duration shorter than the last event")
        ids = [tr.id for tr in self.traces]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate vehicle ids")
        xmin, ymin, xmax, ymax = self.bounds
        for tr in self.traces:
            for s in tr.samples:
                if not (xmin - EPS <= s.position.x <= xmax + EPS and ymin - EPS <= s.position.y <= ymax + EPS):
                    raise ValueError(f"trace {tr.id} leaves the scenario bounds at t={s.t}")
        for ev in self.events:
            for _, p in ev.trajectory:
                if not (xmin - EPS <= p.x <= xmax + EPS and ymin - EPS <= p.y <= ymax + EPS):
                    raise ValueError(f"event {ev.id} leaves the scenario bounds")


def _parse_float(tok: str, what: str, lineno: int) -> float:
    try:
        val = float(tok)
    except ValueError:
        raise TraceParseError(f"{what} is not a number: {tok!r}", lineno) from None
    if not math.isfinite(val):
        raise TraceParseError(f"{what} is not finite: {tok!r}", lineno)
    return val


def load_traces(source: Union[str, Path, TextIO, Iterable[str]]) -> list[VehicleTrace]:
    """Parse a trace file into one :class:`VehicleTrace` per vehicle id.

    Samples of one vehicle must appear in strictly increasing time order;
    anything else is rejected with the offending line number.
    """
    if isinstance(source, (str, Path)):
        with open(source) as fh:
            return load_traces(fh)

    samples: dict[str, list[Sample]] = {}
    seen_data = False
    for lineno, raw in enumerate(source, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if not seen_data:
            seen_data = True
            try:
                float(fields[0])
            except ValueError:
                continue  # header
        if len(fields) != 6:
            raise TraceParseError(f"expected 6 fields, got {len(fields)}", lineno)
        t = _parse_float(fields[0], "time", lineno)
        vid = fields[1]
        x = _parse_float(fields[2], "x", lineno)
        y = _parse_float(fields[3], "y", lineno)
        speed = _parse_float(fields[4], "speed", lineno)
        heading = _parse_float(fields[5], "heading", lineno)
        if t < 0:
            raise TraceParseError("negative time", lineno)
        if speed < 0:
            raise TraceParseError("negative speed", lineno)
        if vid.startswith("bs:"):
            raise TraceParseError("vehicle ids may not start with 'bs:'", lineno)
        prev = samples.setdefault(vid, [])
        if prev:
            if t == prev[-1].t:
                raise TraceParseError(f"duplicate timestamp {t} for vehicle {vid}", lineno)
            if t < prev[-1].t:
                raise TraceParseError(f"timestamp {t} for vehicle {vid} is out of order", lineno)
        prev.append(Sample(t, Position(x, y), speed, normalize_heading(heading)))

    return [VehicleTrace(vid, tuple(s)) for vid, s in sorted(samples.items(), key=lambda kv: id_key(kv[0]))]


def dump_traces(traces: Sequence[VehicleTrace], out: TextIO) -> None:
    out.write("time vehicle_id x y speed heading\n")
    rows = [(s.t, id_key(tr.id), tr.id, s) for tr in traces for s in tr.samples]
    rows.sort(key=lambda r: (r[0], r[1]))
    for t, _, vid, s in rows:
        out.write(f"{t!r} {vid} {s.position.x!r} {s.position.y!r} {s.speed!r} {s.heading!r}\n")


def _interp(t: float, t0: float, p0: Position, t1: float, p1: Position) -> Position:
    if t1 <= t0:
        return p0
    f = (t - t0) / (t1 - t0)
    return Position(p0.x + f * (p1.x - p0.x), p0.y + f * (p1.y - p0.y))


def position_at(trace: VehicleTrace, t: float) -> Optional[Position]:
    """Linearly interpolated position, or ``None`` outside the trace lifetime."""
    state = state_at(trace, t)
    return None if state is None else state.position


def state_at(trace: VehicleTrace, t: float) -> Optional[VehicleState]:
    samples = trace.samples
    if t < trace.enter - EPS or t > trace.exit + EPS:
        return None
    times = [s.t for s in samples]
    i = bisect.bisect_right(times, t + EPS) - 1
    i = max(0, min(i, len(samples) - 1))
    s0 = samples[i]
    if abs(t - s0.t) <= EPS or i == len(samples) - 1:
        pos = s0.position
    else:
        s1 = samples[i + 1]
        pos = _interp(t, s0.t, s0.position, s1.t, s1.position)
    return VehicleState(trace.id, pos, s0.heading, s0.speed, True)


def active_vehicles(scenario: Scenario, t: float) -> list[VehicleState]:
    """N(t): every vehicle whose trace covers ``t``, sorted by id."""
    out = []
    for tr in scenario.traces:
        st = state_at(tr, t)
        if st is not None:
            out.append(st)
    out.sort(key=lambda v: id_key(v.id))
    return out


def event_position_at(event: EventSpec, t: float) -> Optional[Position]:
    if not event.is_active(t):
        return None
    traj = event.trajectory
    if event.kind is EventKind.FIXED:
        return traj[0][1]
    times = [ts for ts, _ in traj]
    i = bisect.bisect_right(times, t + EPS) - 1
    i = max(0, min(i, len(traj) - 1))
    t0, p0 = traj[i]
    if abs(t - t0) <= EPS or i == len(traj) - 1:
        return p0
    t1, p1 = traj[i + 1]
    return _interp(t, t0, p0, t1, p1)


class TraceIndex:
    """Vectorised per-tick lookup of active vehicles.

    Every trace is flattened into segments; a tick query masks the segments
    covering ``t`` and interpolates all of them at once.
    """

    def __init__(self, traces: Sequence[VehicleTrace]):
        ordered = sorted(traces, key=lambda tr: id_key(tr.id))
        self.ids: list[str] = [tr.id for tr in ordered]
        t0, t1, x0, y0, x1, y1, sp, hd, veh, last = ([] for _ in range(10))
        for idx, tr in enumerate(ordered):
            ss = tr.samples
            pairs = list(zip(ss, ss[1:])) or [(ss[0], ss[0])]
            for j, (a, b) in enumerate(pairs):
                t0.append(a.t)
                t1.append(b.t)
                x0.append(a.position.x)
                y0.append(a.position.y)
                x1.append(b.position.x)
                y1.append(b.position.y)
                sp.append(a.speed)
                hd.append(a.heading)
                veh.append(idx)
                last.append(j == len(pairs) - 1)
        self._t0 = np.asarray(t0, dtype=float)
        self._t1 = np.asarray(t1, dtype=float)
        self._x0 = np.asarray(x0, dtype=float)
        self._y0 = np.asarray(y0, dtype=float)
        self._dx = np.asarray(x1, dtype=float) - self._x0
        self._dy = np.asarray(y1, dtype=float) - self._y0
        self._speed = np.asarray(sp, dtype=float)
        self._heading = np.asarray(hd, dtype=float)
        self._veh = np.asarray(veh, dtype=np.int64)
        self._last = np.asarray(last, dtype=bool)
        span = self._t1 - self._t0
        self._span = np.where(span > 0, span, 1.0)

    def __len__(self) -> int:
        return len(self.ids)

    def at(self, t: float) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Return ``(vehicle_index, xy, speed, heading)`` for vehicles active at ``t``.

        Rows are ordered by vehicle index, i.e. by natural id order.
        """
        start_ok = self._t0 <= t + EPS
        mask = start_ok & ((self._t1 > t + EPS) | (self._last & (self._t1 >= t - EPS)))
        sel = np.nonzero(mask)[0]
        # a vehicle sitting exactly on an inner sample matches only the later segment
        f = np.clip((t - self._t0[sel]) / self._span[sel], 0.0, 1.0)
        xy = np.empty((len(sel), 2))
        xy[:, 0] = self._x0[sel] + f * self._dx[sel]
        xy[:, 1] = self._y0[sel] + f * self._dy[sel]
        return self._veh[sel], xy, self._speed[sel], self._heading[sel]


def scenario_bounds_area(bounds: tuple[float, float, float, float]) -> float:
    xmin, ymin, xmax, ymax = bounds
    return (xmax - xmin) * (ymax - ymin)


# -- synthetic generators ---------------------------------------------------


@dataclass(frozen=True)
class Road:
    """A straight road carrying Poisson traffic in one or both directions."""

    id: str
    start: Position
    end: Position
    rate: float = 0.0
    reverse_rate: float = 0.0
    speed: float = 13.9
    speed_sd: float = 0.0

    @property
    def length(self) -> float:
        return math.hypot(self.end.x - self.start.x, self.end.y - self.start.y)


def road_flows(
    roads: Sequence[Road],
    duration: float,
    rng: np.random.Generator,
    warm_start: bool = True,
) -> list[VehicleTrace]:
    """Constant-speed vehicles entering each road end as a Poisson process.

    With ``warm_start`` the roads are pre-populated at t=0 with the
    stationary spatial density ``rate / speed`` so the run does not begin on
    empty streets.
    """
    traces: list[VehicleTrace] = []
    for road in roads:
        for tag, rate, a, b in (("f", road.rate, road.start, road.end), ("r", road.reverse_rate, road.end, road.start)):
            if rate <= 0:
                continue
            length = road.length
            ux, uy = (b.x - a.x) / length, (b.y - a.y) / length
            starts: list[tuple[float, float]] = []  # (entry time, offset along road)
            if warm_start:
                n0 = rng.poisson(rate * length / road.speed)
                for off in np.sort(rng.uniform(0.0, length, size=n0)):
                    starts.append((0.0, float(off)))
            n = rng.poisson(rate * duration)
            for t in np.sort(rng.uniform(0.0, duration, size=n)):
                starts.append((float(t), 0.0))
            for k, (t_in, off) in enumerate(starts):
                speed = float(rng.normal(road.speed, road.speed_sd)) if road.speed_sd > 0 else road.speed
                speed = max(speed, 0.3 * road.speed)
                p0 = Position(a.x + ux * off, a.y + uy * off)
                t_out = t_in + (length - off) / speed
                traces.append(VehicleTrace.linear(f"{road.id}{tag}{k}", t_in, p0, t_out, b))
    return traces
