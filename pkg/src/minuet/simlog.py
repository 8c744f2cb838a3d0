"""Append-only simulation log and its text serialisation.

One record per line, ``t kind fields...``, whitespace separated, ``t`` in
seconds. Header lines start with ``#``::

    # minuet-simlog 1
    # tick_s 0.1
    # duration_s 360.0
    # event <id> <fixed|mobile> <t_start> <t_end>
    # meta <key> <value>

Record kinds and their field order:

=============  ============================================================
``active``     ``count`` (vehicles in the system; only when count > 0)
``detect``     ``vehicle event``
``generated``  ``packet_id kind event origin payload_bytes t_max|-``
``forward``    ``packet_id sender receiver hop_count`` (receiver ``bs:<id>``
               for a base station; hop_count after this hop)
``received``   ``packet_id station hop_count``
``dropped``    ``packet_id cause vehicle`` (cause: loss, az_expired,
               receiver_gone, event_over, not_member, duplicate)
``group``      ``group_id event leader``
``role``       ``vehicle event roles`` (``+``-joined, or ``none``)
=============  ============================================================

A packet's creation time is the ``t`` of its ``generated`` record.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, NamedTuple, Optional, TextIO, Union

FORMAT_VERSION = "1"


class SimLogError(ValueError):
    pass


class Active(NamedTuple):
    tick: int
    count: int


class Detection(NamedTuple):
    tick: int
    vehicle: str
    event: str


class Generated(NamedTuple):
    tick: int
    packet_id: int
    kind: str
    event: str
    origin: str
    payload: int
    t_max: Optional[float]


class Forwarded(NamedTuple):
    tick: int
    packet_id: int
    sender: str
    receiver: str
    hop_count: int


class Received(NamedTuple):
    tick: int
    packet_id: int
    station: int
    hop_count: int


class Dropped(NamedTuple):
    tick: int
    packet_id: int
    cause: str
    vehicle: str


class GroupFormed(NamedTuple):
    tick: int
    group_id: int
    event: str
    leader: str


class RoleChange(NamedTuple):
    tick: int
    vehicle: str
    event: str
    roles: tuple  # sorted role names; empty means none


KIND_OF = {
    Active: "active",
    Detection: "detect",
    Generated: "generated",
    Forwarded: "forward",
    Received: "received",
    Dropped: "dropped",
    GroupFormed: "group",
    RoleChange: "role",
}


class EventInfo(NamedTuple):
    id: str
    kind: str
    t_start: float
    t_end: float


@dataclass
class SimLog:
    tick_s: float
    n_ticks: int
    events: list[EventInfo] = field(default_factory=list)
    meta: dict[str, str] = field(default_factory=dict)
    records: list = field(default_factory=list)

    @property
    def duration(self) -> float:
        return self.n_ticks * self.tick_s

    @property
    def tick_fraction(self) -> Fraction:
        return Fraction(self.tick_s).limit_denominator(10**6)

    def seconds(self, tick: int) -> float:
        return float(tick * self.tick_fraction)

    def tick_of(self, t: float) -> int:
        return int(round(t / self.tick_s))

    def append(self, rec) -> None:
        if self.records and rec.tick < self.records[-1].tick:
            raise SimLogError("log records must be appended in time order")
        self.records.append(rec)

    def extend(self, recs: Iterable) -> None:
        for r in recs:
            self.append(r)

    def __len__(self) -> int:
        return len(self.records)

    # -- serialisation ---------------------------------------------------------

    def write(self, out: Union[str, Path, TextIO]) -> None:
        if isinstance(out, (str, Path)):
            with open(out, "w", newline="\n") as fh:
                self.write(fh)
            return
        out.write(f"# minuet-simlog {FORMAT_VERSION}\n")
        out.write(f"# tick_s {self.tick_s!r}\n")
        out.write(f"# duration_s {self.duration!r}\n")
        for ev in self.events:
            out.write(f"# event {ev.id} {ev.kind} {ev.t_start!r} {ev.t_end!r}\n")
        for k, v in self.meta.items():
            out.write(f"# meta {k} {v}\n")
        fmt_cache: dict[int, str] = {}
        for rec in self.records:
            t = fmt_cache.get(rec.tick)
            if t is None:
                t = fmt_cache[rec.tick] = repr(self.seconds(rec.tick))
            out.write(f"{t} {format_record(rec)}\n")

    def to_text(self) -> str:
        buf = io.StringIO()
        self.write(buf)
        return buf.getvalue()

    @classmethod
    def read(cls, source: Union[str, Path, TextIO, Iterable[str]]) -> "SimLog":
        if isinstance(source, (str, Path)):
            with open(source) as fh:
                return cls.read(fh)
        return parse(source)


def format_record(rec) -> str:
    kind = KIND_OF[type(rec)]
    if isinstance(rec, Generated):
        tmax = "-" if rec.t_max is None else repr(rec.t_max)
        return f"{kind} {rec.packet_id} {rec.kind} {rec.event} {rec.origin} {rec.payload} {tmax}"
    if isinstance(rec, RoleChange):
        return f"{kind} {rec.vehicle} {rec.event} {'+'.join(rec.roles) or 'none'}"
    return kind + " " + " ".join(str(v) for v in rec[1:])


def parse(lines: Iterable[str]) -> SimLog:
    tick_s: Optional[float] = None
    duration: Optional[float] = None
    events: list[EventInfo] = []
    meta: dict[str, str] = {}
    records: list = []
    last_tick = -1
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            parts = line[1:].split()
            if not parts:
                continue
            key = parts[0]
            try:
                if key == "tick_s":
                    tick_s = float(parts[1])
                elif key == "duration_s":
                    duration = float(parts[1])
                elif key == "event":
                    events.append(EventInfo(parts[1], parts[2], float(parts[3]), float(parts[4])))
                elif key == "meta":
                    meta[parts[1]] = " ".join(parts[2:])
            except (IndexError, ValueError):
                raise SimLogError(f"line {lineno}: malformed header") from None
            continue
        if tick_s is None:
            raise SimLogError(f"line {lineno}: record before the tick_s header")
        f = line.split()
        try:
            tick = int(round(float(f[0]) / tick_s))
            rec = _parse_record(tick, f[1], f[2:])
        except (IndexError, ValueError, KeyError):
            raise SimLogError(f"line {lineno}: malformed record: {line!r}") from None
        if tick < last_tick:
            raise SimLogError(f"line {lineno}: timestamps go backwards")
        last_tick = tick
        records.append(rec)
    if tick_s is None:
        raise SimLogError("missing tick_s header")
    n_ticks = int(round(duration / tick_s)) if duration is not None else last_tick + 1
    return SimLog(tick_s, n_ticks, events, meta, records)


def _parse_record(tick: int, kind: str, f: list[str]):
    if kind == "active":
        (n,) = f
        return Active(tick, int(n))
    if kind == "detect":
        v, e = f
        return Detection(tick, v, e)
    if kind == "generated":
        pid, pk, e, origin, payload, tmax = f
        if pk not in ("announcement", "clustering", "monitoring"):
            raise ValueError(pk)
        return Generated(tick, int(pid), pk, e, origin, int(payload), None if tmax == "-" else float(tmax))
    if kind == "forward":
        pid, s, r, h = f
        return Forwarded(tick, int(pid), s, r, int(h))
    if kind == "received":
        pid, bs, h = f
        return Received(tick, int(pid), int(bs), int(h))
    if kind == "dropped":
        pid, cause, v = f
        return Dropped(tick, int(pid), cause, v)
    if kind == "group":
        gid, e, leader = f
        return GroupFormed(tick, int(gid), e, leader)
    if kind == "role":
        v, e, roles = f
        return RoleChange(tick, v, e, () if roles == "none" else tuple(roles.split("+")))
    raise KeyError(kind)
