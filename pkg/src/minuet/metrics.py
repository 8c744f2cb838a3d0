"""Evaluation metrics computed from a :class:`~minuet.simlog.SimLog`.

Per-tick series: detecting vehicles, cooperating vehicles, generated
clustering and monitoring packets, and monitoring packets received by all
base stations. Interval aggregates: redundancy split, average delay,
clustering overhead, grouped-vehicle ratio and number of formed groups.

Integrals over an interval are tick sums; every ratio below is a ratio of
two tick sums, so the tick length cancels.
"""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, fields
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .model import COOPERATING_ROLES
from .simlog import (
    Active,
    Detection,
    Generated,
    GroupFormed,
    Received,
    RoleChange,
    SimLog,
    SimLogError,
)

Interval = Optional[tuple[float, float]]

_COOP = frozenset(r.value for r in COOPERATING_ROLES)
SERIES_NAMES = ("n_vd", "n_vc", "CP_g", "MP_g", "MP_r")


@dataclass
class MetricSeries:
    event: str
    tick_s: float
    n_vd: np.ndarray
    n_vc: np.ndarray
    CP_g: np.ndarray
    MP_g: np.ndarray
    MP_r: np.ndarray

    def times(self) -> np.ndarray:
        return np.arange(len(self.n_vd)) * self.tick_s

    def __getitem__(self, name: str) -> np.ndarray:
        if name not in SERIES_NAMES:
            raise KeyError(name)
        return getattr(self, name)


@dataclass
class Redundancy:
    single: int
    redundant: int

    @property
    def total(self) -> int:
        return self.single + self.redundant

    @property
    def r(self) -> Optional[float]:
        return self.redundant / self.total if self.total else None

    @property
    def s_ratio(self) -> Optional[float]:
        return self.single / self.total if self.total else None


@dataclass
class MetricSummary:
    event: str
    kind: str
    MP_g: int
    S: int
    R_percent: Optional[float]
    S_ratio: Optional[float]
    received: int
    D_avg: Optional[float]
    C: Optional[float]
    G: Optional[float]
    F: int
    monitored_share: Optional[float]
    delivery_share: Optional[float]

    @classmethod
    def columns(cls) -> list[str]:
        return [f.name for f in fields(cls)]


def _window(log: SimLog, interval: Interval) -> tuple[int, int]:
    if interval is None:
        return 0, log.n_ticks - 1
    t0, t1 = interval
    # ticks whose time lies inside [t0, t1]
    return math.ceil(t0 / log.tick_s - 1e-9), math.floor(t1 / log.tick_s + 1e-9)


def _event_of_packets(log: SimLog) -> dict[int, Generated]:
    return {r.packet_id: r for r in log.records if type(r) is Generated}


def event_ids(log: SimLog) -> list[str]:
    ids = [e.id for e in log.events]
    extra = []
    known = set(ids)
    for r in log.records:
        ev = getattr(r, "event", None)
        if ev is not None and ev not in known:
            known.add(ev)
            extra.append(ev)
    return ids + extra


def active_series(log: SimLog) -> np.ndarray:
    """|N(t)| per tick."""
    n = np.zeros(log.n_ticks, dtype=np.int64)
    for r in log.records:
        if type(r) is Active:
            _check_tick(log, r.tick)
            n[r.tick] = r.count
    return n


def _check_tick(log: SimLog, tick: int) -> None:
    if not 0 <= tick < log.n_ticks:
        raise SimLogError(f"record at tick {tick} outside the run")


def series(log: SimLog) -> dict[str, MetricSeries]:
    """Per-event, per-tick values of the five time-series metrics."""
    n = log.n_ticks
    evs = event_ids(log)
    out = {
        e: MetricSeries(e, log.tick_s, *(np.zeros(n, dtype=np.int64) for _ in SERIES_NAMES))
        for e in evs
    }
    gen = {}
    detected: set[tuple[int, str, str]] = set()
    coop_delta = {e: np.zeros(n + 1, dtype=np.int64) for e in evs}
    coop_state: dict[tuple[str, str], bool] = {}
    for r in log.records:
        typ = type(r)
        if typ is Active:
            continue
        _check_tick(log, r.tick)
        if typ is Detection:
            key = (r.tick, r.vehicle, r.event)
            if key not in detected:
                detected.add(key)
                out[r.event].n_vd[r.tick] += 1
        elif typ is Generated:
            gen[r.packet_id] = r
            if r.kind == "clustering":
                out[r.event].CP_g[r.tick] += 1
            elif r.kind == "monitoring":
                out[r.event].MP_g[r.tick] += 1
        elif typ is Received:
            g = gen.get(r.packet_id)
            if g is None:
                raise SimLogError(f"packet {r.packet_id} received but never generated")
            out[g.event].MP_r[r.tick] += 1
        elif typ is RoleChange:
            coop = bool(_COOP.intersection(r.roles))
            key = (r.vehicle, r.event)
            was = coop_state.get(key, False)
            if coop != was:
                coop_delta[r.event][r.tick] += 1 if coop else -1
                coop_state[key] = coop
    for e in evs:
        out[e].n_vc[:] = np.cumsum(coop_delta[e][:n])
    return out


def redundancy(log: SimLog, event: Optional[str] = None, interval: Interval = None) -> Redundancy:
    """Split receipts into first copies and redundant copies.

    The chronologically first receipt of a packet id, at any station, is the
    single copy; ties within a tick go to the lowest station id. Every other
    receipt of that id is redundant, even when it lands before the interval
    starts counting.
    """
    gen = _event_of_packets(log)
    k0, k1 = _window(log, interval)
    first: dict[int, tuple[int, int]] = {}
    recs = [r for r in log.records if type(r) is Received]
    for r in recs:
        key = (r.tick, r.station)
        cur = first.get(r.packet_id)
        if cur is None or key < cur:
            first[r.packet_id] = key
    single = redundant = 0
    used = set()
    for r in recs:
        if not k0 <= r.tick <= k1:
            continue
        if event is not None and gen[r.packet_id].event != event:
            continue
        if first[r.packet_id] == (r.tick, r.station) and r.packet_id not in used:
            used.add(r.packet_id)
            single += 1
        else:
            redundant += 1
    return Redundancy(single, redundant)


def average_delay(
    log: SimLog, event: Optional[str] = None, interval: Interval = None, per_unique: bool = False
) -> Optional[float]:
    """Mean of (receive time - creation time) over receipts in the interval.

    Redundant copies count, as in the denominator summing every station's
    receipts. ``per_unique`` averages over first receipts only.
    Returns ``None`` when nothing was received.
    """
    gen = _event_of_packets(log)
    k0, k1 = _window(log, interval)
    total = count = 0
    seen: set[int] = set()
    recs = [r for r in log.records if type(r) is Received]
    if per_unique:
        recs.sort(key=lambda r: (r.tick, r.station))
    for r in recs:
        if per_unique:
            if r.packet_id in seen:
                continue
            seen.add(r.packet_id)
        if not k0 <= r.tick <= k1:
            continue
        g = gen[r.packet_id]
        if event is not None and g.event != event:
            continue
        total += r.tick - g.tick
        count += 1
    if not count:
        return None
    return float(Fraction(total, count) * log.tick_fraction)


def clustering_overhead(log: SimLog, event: Optional[str] = None, interval: Interval = None) -> Optional[float]:
    """Clustering packets over all generated packets (announcement + clustering + monitoring)."""
    k0, k1 = _window(log, interval)
    cp = total = 0
    for r in log.records:
        if type(r) is Generated and k0 <= r.tick <= k1 and (event is None or r.event == event):
            total += 1
            if r.kind == "clustering":
                cp += 1
    return cp / total if total else None


def grouped_vehicle_ratio(
    log: SimLog, event: Optional[str] = None, interval: Interval = None, literal: bool = False
) -> Optional[float]:
    """Vehicle-ticks spent emitting clustering packets over vehicle-ticks in the system.

    ``literal`` replaces the denominator |N(t)| by the triangular sum
    1 + 2 + ... + |N(t)|.
    """
    k0, k1 = _window(log, interval)
    emitting: set[tuple[int, str]] = set()
    denom = 0
    for r in log.records:
        if not k0 <= r.tick <= k1:
            continue
        typ = type(r)
        if typ is Active:
            denom += r.count * (r.count + 1) // 2 if literal else r.count
        elif typ is Generated and r.kind == "clustering" and (event is None or r.event == event):
            emitting.add((r.tick, r.origin))
    return len(emitting) / denom if denom else None


def formed_groups(log: SimLog, event: Optional[str] = None, interval: Interval = None) -> int:
    """Distinct group ids whose first appearance falls inside the interval."""
    k0, k1 = _window(log, interval)
    first: dict[int, GroupFormed] = {}
    for r in log.records:
        if type(r) is GroupFormed and r.group_id not in first:
            first[r.group_id] = r
    return sum(1 for r in first.values() if k0 <= r.tick <= k1 and (event is None or r.event == event))


def lifetime_share(values: np.ndarray, log: SimLog, event: str) -> Optional[float]:
    """Fraction of the event's lifetime ticks where ``values`` is positive."""
    info = next((e for e in log.events if e.id == event), None)
    if info is None:
        return None
    k0 = max(0, int(np.ceil(info.t_start / log.tick_s - 1e-9)))
    k1 = min(log.n_ticks - 1, int(np.floor(info.t_end / log.tick_s + 1e-9)))
    if k1 < k0:
        return None
    window = values[k0 : k1 + 1]
    return float(np.count_nonzero(window > 0)) / len(window)


def summarize(log: SimLog, eq7_literal: bool = False, per_unique_delay: bool = False) -> list[MetricSummary]:
    ser = series(log)
    kinds = {e.id: e.kind for e in log.events}
    out = []
    for ev in event_ids(log):
        s = ser[ev]
        red = redundancy(log, ev)
        out.append(
            MetricSummary(
                event=ev,
                kind=kinds.get(ev, ""),
                MP_g=int(s.MP_g.sum()),
                S=red.single,
                R_percent=None if red.r is None else 100.0 * red.r,
                S_ratio=red.s_ratio,
                received=red.total,
                D_avg=average_delay(log, ev, per_unique=per_unique_delay),
                C=clustering_overhead(log, ev),
                G=grouped_vehicle_ratio(log, ev, literal=eq7_literal),
                F=formed_groups(log, ev),
                monitored_share=lifetime_share(s.n_vd, log, ev),
                delivery_share=lifetime_share(s.MP_r, log, ev),
            )
        )
    return out


# -- CSV output ------------------------------------------------------------------


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(round(v, 12))
    return str(v)


def write_series_csv(path: Path, tick_s: float, values: Iterable) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "value"])
        step = Fraction(tick_s).limit_denominator(10**6)
        for k, v in enumerate(values):
            w.writerow([repr(float(k * step)), int(v)])


def write_summary_csv(path: Path, rows: Iterable[dict], columns: list[str]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row.get(c)) for c in columns])


def summary_row(s: MetricSummary, **extra) -> dict:
    row = dict(extra)
    row.update(asdict(s))
    return row
