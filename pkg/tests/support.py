"""Shared builders and brute-force oracles for the test-suite.

The oracles deliberately avoid the package's own helpers: they scan the raw
record list per tick or per packet with plain loops.
"""

from __future__ import annotations

import math
import random
from collections import defaultdict
from typing import Optional

from minuet.clustering import ClusteringConfig
from minuet.mobility import Scenario, VehicleTrace
from minuet.model import BaseStation, EventSpec, Position
from minuet.protocol import ProtocolConfig, Simulation
from minuet.radio import RadioConfig
from minuet.simlog import (
    Active,
    Detection,
    EventInfo,
    Generated,
    GroupFormed,
    Received,
    RoleChange,
    SimLog,
)

# acceptance verdicts, printed in the terminal summary by conftest
ACCEPTANCE_LINES: list[str] = []


def verdict(number: int, title: str, ok: bool, detail: str = "") -> None:
    line = f"criterion {number} ({title}): {'PASS' if ok else 'FAIL'}" + (f"  [{detail}]" if detail else "")
    ACCEPTANCE_LINES.append(line)
    print(line)


# -- small worlds ----------------------------------------------------------------


def world(
    vehicles: dict,
    events=(),
    stations=(),
    duration: float = 10.0,
    bounds=(-1000.0, -1000.0, 5000.0, 5000.0),
) -> Scenario:
    """Scenario from ``{id: (x, y)}`` (static for the whole run) or ``{id: VehicleTrace}``."""
    traces = []
    for vid, v in vehicles.items():
        traces.append(v if isinstance(v, VehicleTrace) else VehicleTrace.static(vid, v, 0.0, duration))
    bs = [s if isinstance(s, BaseStation) else BaseStation(i, Position(*s[0]), s[1]) for i, s in enumerate(stations)]
    return Scenario(tuple(traces), tuple(events), tuple(bs), bounds, duration)


def sim(
    vehicles: dict,
    events=(),
    stations=(),
    strategy: str = "dca_like",
    duration: float = 10.0,
    t_max: float = 1.5,
    loss: float = 0.0,
    rate: float = 10.0,
    v2v: float = 200.0,
    seed: int = 0,
    tick: float = 0.1,
    grace: int = 2,
) -> Simulation:
    return Simulation(
        world(vehicles, events, stations, duration),
        RadioConfig(v2v_range=v2v, loss_probability=loss),
        ProtocolConfig(t_max=t_max, monitor_rate_pps=rate),
        ClusteringConfig(strategy, 1.0, grace),
        tick=tick,
        seed=seed,
    )


def fixed_event(pos, t0: float = 0.0, t1: float = 10.0, eid: str = "E1") -> EventSpec:
    return EventSpec.fixed(eid, pos, t0, t1)


# -- random logs -------------------------------------------------------------------


def random_log(seed: int, max_ticks: int = 300) -> SimLog:
    """A structurally valid SimLog with random content.

    Receipts always follow their generation, (packet, station, tick) triples
    are unique, and role records only report actual changes.
    """
    rng = random.Random(seed)
    n = rng.randint(1, max_ticks)
    tick_s = rng.choice([0.1, 0.05, 0.25, 1.0])
    events = [EventInfo("E1", "mobile", 0.0, n * tick_s / 2), EventInfo("E2", "fixed", n * tick_s / 4, n * tick_s)]
    evs = [e.id for e in events]
    vehicles = [f"v{i}" for i in range(rng.randint(1, 25))]
    stations = list(range(rng.randint(1, 4)))
    buckets: dict[int, list] = defaultdict(list)
    pid = 0
    monitoring: list[tuple[int, int]] = []
    roles: dict[tuple[str, str], tuple] = {}
    gid_pool = list(range(1, 40))
    for k in range(n):
        if rng.random() < 0.9:
            buckets[k].append(Active(k, rng.randint(1, 40)))
        for v in rng.sample(vehicles, rng.randint(0, min(3, len(vehicles)))):
            buckets[k].append(Detection(k, v, rng.choice(evs)))
        for _ in range(rng.randint(0, 6)):
            pid += 1
            kind = rng.choice(["announcement", "clustering", "monitoring", "monitoring"])
            ev = rng.choice(evs)
            tmax = 1.5 if kind == "announcement" else None
            buckets[k].append(Generated(k, pid, kind, ev, rng.choice(vehicles), 64, tmax))
            if kind == "monitoring":
                monitoring.append((pid, k))
        for _ in range(rng.randint(0, 2)):
            v, ev = rng.choice(vehicles), rng.choice(evs)
            new = tuple(sorted(rng.sample(["monitor", "relay", "gateway"], rng.randint(0, 2))))
            if roles.get((v, ev), ()) != new:
                roles[(v, ev)] = new
                buckets[k].append(RoleChange(k, v, ev, new))
        if rng.random() < 0.1:
            buckets[k].append(GroupFormed(k, rng.choice(gid_pool), rng.choice(evs), rng.choice(vehicles)))
    for p, k0 in monitoring:
        seen = set()
        for _ in range(rng.choice([0, 1, 1, 2, 3, 5])):
            k = min(n - 1, k0 + rng.randint(1, 8))
            if k <= k0:
                continue
            bs = rng.choice(stations)
            if (k, bs) in seen:
                continue
            seen.add((k, bs))
            buckets[k].append(Received(k, p, bs, rng.randint(1, 4)))
    records = []
    for k in range(n):
        # receipts sorted into their tick after everything generated in it
        records.extend(buckets.get(k, ()))
    return SimLog(tick_s, n, events, {}, records)


# -- metric oracles ---------------------------------------------------------------

COOP = {"monitor", "relay", "gateway"}


def _gen(log):
    return {r.packet_id: r for r in log.records if isinstance(r, Generated)}


def _in(log, tick, interval):
    if interval is None:
        return True
    return interval[0] - 1e-9 <= tick * log.tick_s <= interval[1] + 1e-9


def oracle_series(log: SimLog, event: str) -> dict[str, list[int]]:
    gen = _gen(log)
    by_tick = defaultdict(list)
    for r in log.records:
        by_tick[r.tick].append(r)
    out = {m: [] for m in ("n_vd", "n_vc", "CP_g", "MP_g", "MP_r")}
    held: dict[str, tuple] = {}  # latest roles per vehicle so far
    for k in range(log.n_ticks):
        at = by_tick.get(k, [])
        out["n_vd"].append(len({r.vehicle for r in at if isinstance(r, Detection) and r.event == event}))
        out["CP_g"].append(sum(1 for r in at if isinstance(r, Generated) and r.kind == "clustering" and r.event == event))
        out["MP_g"].append(sum(1 for r in at if isinstance(r, Generated) and r.kind == "monitoring" and r.event == event))
        out["MP_r"].append(sum(1 for r in at if isinstance(r, Received) and gen[r.packet_id].event == event))
        for r in at:
            if isinstance(r, RoleChange) and r.event == event:
                held[r.vehicle] = r.roles
        out["n_vc"].append(sum(1 for roles in held.values() if COOP & set(roles)))
    return out


def oracle_redundancy(log: SimLog, event: Optional[str] = None, interval=None) -> tuple[int, int]:
    gen = _gen(log)
    by_pid = defaultdict(list)
    for r in log.records:
        if isinstance(r, Received):
            by_pid[r.packet_id].append(r)
    single = redundant = 0
    for p, recs in by_pid.items():
        recs = sorted(recs, key=lambda r: (r.tick, r.station))
        for i, r in enumerate(recs):
            if not _in(log, r.tick, interval) or (event is not None and gen[p].event != event):
                continue
            if i == 0:
                single += 1
            else:
                redundant += 1
    return single, redundant


def oracle_delay(log: SimLog, event: Optional[str] = None, interval=None, per_unique: bool = False):
    gen = _gen(log)
    delays = []
    seen = set()
    for r in sorted((r for r in log.records if isinstance(r, Received)), key=lambda r: (r.tick, r.station)):
        first = r.packet_id not in seen
        seen.add(r.packet_id)
        if per_unique and not first:
            continue
        if not _in(log, r.tick, interval) or (event is not None and gen[r.packet_id].event != event):
            continue
        delays.append(r.tick * log.tick_s - gen[r.packet_id].tick * log.tick_s)
    return sum(delays) / len(delays) if delays else None


def oracle_overhead(log: SimLog, event: Optional[str] = None, interval=None):
    kinds = [
        r.kind for r in log.records
        if isinstance(r, Generated) and _in(log, r.tick, interval) and (event is None or r.event == event)
    ]
    return kinds.count("clustering") / len(kinds) if kinds else None


def oracle_grouped(log: SimLog, event: Optional[str] = None, interval=None, literal: bool = False):
    by_tick = defaultdict(list)
    for r in log.records:
        by_tick[r.tick].append(r)
    num = den = 0
    for k in range(log.n_ticks):
        if not _in(log, k, interval):
            continue
        at = by_tick.get(k, [])
        num += len({
            r.origin for r in at
            if isinstance(r, Generated) and r.kind == "clustering" and (event is None or r.event == event)
        })
        n = sum(r.count for r in at if isinstance(r, Active))
        den += sum(range(1, n + 1)) if literal else n
    return num / den if den else None


def oracle_formed(log: SimLog, event: Optional[str] = None, interval=None) -> int:
    firsts = {}
    for r in log.records:
        if isinstance(r, GroupFormed):
            firsts.setdefault(r.group_id, r)
    return sum(1 for r in firsts.values() if _in(log, r.tick, interval) and (event is None or r.event == event))


def close(a, b, rel: float = 1e-9) -> bool:
    if a is None or b is None:
        return a is None and b is None
    return math.isclose(a, b, rel_tol=rel, abs_tol=1e-12)
