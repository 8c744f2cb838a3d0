"""Declarative scenario files: validation, defaults and the built-in scenarios.

A scenario file is YAML (or JSON) with these keys; unknown keys are
rejected::

    name: str                       # defaults to the file stem
    duration_s: float               # required
    tick_s: float = 0.1
    seed: int = 0
    clustering: dca_like | pctt_like = dca_like
    bounds: [xmin, ymin, xmax, ymax]   # required, meters
    mobility:                       # exactly one source
      trace: path/to/trace.txt      #   relative to the scenario file
      # or
      generator: road_flows
      warm_start: true
      roads:
        - {id, from: [x, y], to: [x, y], rate_per_s, reverse_rate_per_s,
           speed_mps, speed_sd_mps}
      # or
      generator: explicit
      vehicles:
        - {id, position: [x, y], enter_s, exit_s}
        - {id, waypoints: [[t, x, y], ...]}
    events:
      - {id, kind: fixed, t_start, t_end, position: [x, y]}
      - {id, kind: mobile, t_start, t_end, waypoints: [[t, x, y], ...]}
    base_stations:                  # default {count: 26}
      count: 26                     # uniform grid of square-ish cells
      rows: 2                       # optional, with cols
      cols: 13
      range_m: 353.56               # default: half cell diagonal (no gaps)
      # or
      positions: [[x, y], ...]
      range_m: 300                  # required with positions
    radio: {v2v_range_m: 200, loss_probability: 0, hop_latency_s: <tick>,
            detection_range_m: 10}
    protocol: {t_max_s: 1.5, announce_interval_s: 1, monitor_rate_pps: 10,
               payload_bytes: 1200}
    cluster: {maintenance_interval_s: 1, grace_intervals: 2}
"""

from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Optional, Union

import numpy as np
import yaml

from .clustering import STRATEGIES, ClusteringConfig
from .mobility import Road, Sample, Scenario, VehicleTrace, load_traces, road_flows
from .model import BaseStation, EventKind, EventSpec, Position, normalize_heading
from .protocol import ProtocolConfig, Simulation
from .radio import RadioConfig

BUILTIN_NAMES = ("paper_ld", "paper_hd", "smoke", "clique")

_TOP_KEYS = {
    "name", "duration_s", "tick_s", "seed", "clustering", "bounds", "mobility",
    "events", "base_stations", "radio", "protocol", "cluster",
}
_RADIO_KEYS = {"v2v_range_m", "loss_probability", "hop_latency_s", "detection_range_m"}
_PROTOCOL_KEYS = {"t_max_s", "announce_interval_s", "monitor_rate_pps", "payload_bytes"}
_CLUSTER_KEYS = {"maintenance_interval_s", "grace_intervals"}
_ROAD_KEYS = {"id", "from", "to", "rate_per_s", "reverse_rate_per_s", "speed_mps", "speed_sd_mps"}
_EVENT_KEYS = {"id", "kind", "t_start", "t_end", "position", "waypoints"}
_BS_KEYS = {"count", "rows", "cols", "range_m", "positions"}


class ScenarioError(ValueError):
    """Raised with every validation problem found, each prefixed by its key path."""

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("invalid scenario:\n  " + "\n  ".join(self.errors))


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    duration: float
    tick: float
    seed: int
    strategy: str
    bounds: tuple[float, float, float, float]
    mobility: dict
    events: tuple[EventSpec, ...]
    base_stations: tuple[BaseStation, ...]
    radio: RadioConfig
    protocol: ProtocolConfig
    cluster: ClusteringConfig

    def with_overrides(self, strategy: Optional[str] = None, seed: Optional[int] = None) -> "ScenarioConfig":
        cfg = self
        if strategy is not None:
            if strategy not in STRATEGIES:
                raise ScenarioError([f"clustering: unknown strategy {strategy!r}"])
            cfg = replace(cfg, strategy=strategy, cluster=replace(cfg.cluster, strategy=strategy))
        if seed is not None:
            cfg = replace(cfg, seed=int(seed))
        return cfg

    def build(self) -> Scenario:
        """Materialise vehicle traces (generated from ``seed`` where needed)."""
        return Scenario(
            tuple(_traces(self)), self.events, self.base_stations, self.bounds, self.duration
        )

    def simulation(self) -> Simulation:
        return Simulation(
            self.build(), self.radio, self.protocol, self.cluster, self.tick, self.seed,
            meta={"scenario": self.name, "scenario_hash": self.digest()},
        )

    def to_dict(self) -> dict:
        stations = self.base_stations
        ranges = {b.range for b in stations}
        d: dict[str, Any] = {
            "name": self.name,
            "duration_s": self.duration,
            "tick_s": self.tick,
            "seed": self.seed,
            "clustering": self.strategy,
            "bounds": list(self.bounds),
            "mobility": copy.deepcopy(self.mobility),
            "events": [_event_to_dict(e) for e in self.events],
            "base_stations": {"positions": [[b.position.x, b.position.y] for b in stations],
                              "range_m": ranges.pop() if len(ranges) == 1 else 0.0},
            "radio": {
                "v2v_range_m": self.radio.v2v_range,
                "loss_probability": self.radio.loss_probability,
                "hop_latency_s": self.radio.hop_latency if self.radio.hop_latency is not None else self.tick,
                "detection_range_m": self.radio.detection_range,
            },
            "protocol": {
                "t_max_s": self.protocol.t_max,
                "announce_interval_s": self.protocol.announce_interval,
                "monitor_rate_pps": self.protocol.monitor_rate_pps,
                "payload_bytes": self.protocol.payload_bytes,
            },
            "cluster": {
                "maintenance_interval_s": self.cluster.maintenance_interval,
                "grace_intervals": self.cluster.grace_intervals,
            },
        }
        if not stations:
            d["base_stations"] = {"positions": [], "range_m": 1.0}
        return d

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _event_to_dict(e: EventSpec) -> dict:
    d = {"id": e.id, "kind": e.kind.value, "t_start": e.t_start, "t_end": e.t_end}
    if e.kind is EventKind.FIXED:
        d["position"] = [e.trajectory[0][1].x, e.trajectory[0][1].y]
    else:
        d["waypoints"] = [[t, p.x, p.y] for t, p in e.trajectory]
    return d


# -- validation ---------------------------------------------------------------


class _Checker:
    def __init__(self):
        self.errors: list[str] = []

    def err(self, path: str, msg: str) -> None:
        self.errors.append(f"{path}: {msg}")

    def keys(self, d: Any, allowed: set, path: str) -> dict:
        if not isinstance(d, dict):
            self.err(path, "expected a mapping")
            return {}
        for k in sorted(set(d) - allowed, key=str):
            self.err(f"{path}.{k}" if path else str(k), "unknown key")
        return d

    def number(self, d: dict, key: str, path: str, default=None, positive=False, minimum=None, maximum=None,
               integer=False):
        full = f"{path}.{key}" if path else key
        if key not in d:
            if default is None:
                self.err(full, "required")
            return default
        v = d[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            self.err(full, f"expected a number, got {v!r}")
            return default
        if integer and int(v) != v:
            self.err(full, f"expected an integer, got {v!r}")
            return default
        if positive and v <= 0:
            self.err(full, f"must be positive, got {v!r}")
        if minimum is not None and v < minimum:
            self.err(full, f"must be >= {minimum}, got {v!r}")
        if maximum is not None and v > maximum:
            self.err(full, f"must be <= {maximum}, got {v!r}")
        return int(v) if integer else float(v)

    def point(self, v: Any, path: str) -> Optional[Position]:
        if (not isinstance(v, (list, tuple)) or len(v) != 2
                or not all(isinstance(c, (int, float)) and not isinstance(c, bool) and math.isfinite(c) for c in v)):
            self.err(path, f"expected [x, y], got {v!r}")
            return None
        return Position(float(v[0]), float(v[1]))

    def waypoints(self, v: Any, path: str) -> Optional[list[tuple[float, Position]]]:
        if not isinstance(v, (list, tuple)) or not v:
            self.err(path, "expected a non-empty list of [t, x, y]")
            return None
        out = []
        for i, w in enumerate(v):
            if (not isinstance(w, (list, tuple)) or len(w) != 3
                    or not all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in w)):
                self.err(f"{path}[{i}]", f"expected [t, x, y], got {w!r}")
                return None
            out.append((float(w[0]), Position(float(w[1]), float(w[2]))))
        if any(b[0] <= a[0] for a, b in zip(out, out[1:])):
            self.err(path, "waypoint times must be strictly increasing")
            return None
        return out


def _in_bounds(p: Position, b) -> bool:
    return b[0] - 1e-9 <= p.x <= b[2] + 1e-9 and b[1] - 1e-9 <= p.y <= b[3] + 1e-9


def grid_layout(bounds, count: int, rows: Optional[int] = None, cols: Optional[int] = None):
    """Station centres of a rows x cols grid over ``bounds`` plus the no-gap range."""
    xmin, ymin, xmax, ymax = bounds
    w, h = xmax - xmin, ymax - ymin
    if rows is None or cols is None:
        pairs = [(r, count // r) for r in range(1, count + 1) if count % r == 0]
        rows, cols = min(pairs, key=lambda rc: (abs(math.log((w / rc[1]) / (h / rc[0]))), rc[0]))
    cw, ch = w / cols, h / rows
    pts = [Position(xmin + (c + 0.5) * cw, ymin + (r + 0.5) * ch) for r in range(rows) for c in range(cols)]
    rng = math.ceil(math.hypot(cw / 2, ch / 2) * 100) / 100
    return pts, rng


def validate(raw: dict, base_dir: Optional[Union[str, Path]] = None) -> ScenarioConfig:
    """Check a raw scenario mapping and fill in defaults.

    Raises :class:`ScenarioError` listing every problem found.
    """
    ck = _Checker()
    raw = ck.keys(raw, _TOP_KEYS, "")
    name = str(raw.get("name", "scenario"))
    duration = ck.number(raw, "duration_s", "", positive=True)
    tick = ck.number(raw, "tick_s", "", default=0.1, positive=True)
    seed = ck.number(raw, "seed", "", default=0, integer=True, minimum=0)
    strategy = raw.get("clustering", "dca_like")
    if strategy not in STRATEGIES:
        ck.err("clustering", f"unknown strategy {strategy!r} (expected one of {sorted(STRATEGIES)})")
        strategy = "dca_like"
    if duration and tick and abs(round(duration / tick) * tick - duration) > 1e-6:
        ck.err("duration_s", f"{duration} is not a multiple of tick_s {tick}")

    bounds = None
    b = raw.get("bounds")
    if b is None:
        ck.err("bounds", "required")
    elif (not isinstance(b, (list, tuple)) or len(b) != 4
          or not all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in b)):
        ck.err("bounds", f"expected [xmin, ymin, xmax, ymax], got {b!r}")
    elif not (b[0] < b[2] and b[1] < b[3]):
        ck.err("bounds", "empty box")
    else:
        bounds = tuple(float(c) for c in b)

    # radio / protocol / cluster
    r = ck.keys(raw.get("radio", {}), _RADIO_KEYS, "radio")
    v2v = ck.number(r, "v2v_range_m", "radio", default=200.0, positive=True)
    loss = ck.number(r, "loss_probability", "radio", default=0.0, minimum=0.0, maximum=1.0)
    det = ck.number(r, "detection_range_m", "radio", default=10.0, positive=True)
    lat = ck.number(r, "hop_latency_s", "radio", default=tick or 0.1, positive=True)
    if lat and tick and (lat < tick - 1e-9 or abs(round(lat / tick) * tick - lat) > 1e-9):
        ck.err("radio.hop_latency_s", f"must be a positive multiple of tick_s ({tick}), got {lat}")
    p = ck.keys(raw.get("protocol", {}), _PROTOCOL_KEYS, "protocol")
    t_max = ck.number(p, "t_max_s", "protocol", default=1.5, minimum=0.0)
    ann = ck.number(p, "announce_interval_s", "protocol", default=1.0, positive=True)
    rate = ck.number(p, "monitor_rate_pps", "protocol", default=10.0, minimum=0.0)
    payload = ck.number(p, "payload_bytes", "protocol", default=1200, integer=True, minimum=0)
    c = ck.keys(raw.get("cluster", {}), _CLUSTER_KEYS, "cluster")
    maint = ck.number(c, "maintenance_interval_s", "cluster", default=1.0, positive=True)
    grace = ck.number(c, "grace_intervals", "cluster", default=2, integer=True, minimum=0)

    # events
    events: list[EventSpec] = []
    ev_raw = raw.get("events", [])
    if not isinstance(ev_raw, list):
        ck.err("events", "expected a list")
        ev_raw = []
    seen_ids = set()
    for i, e in enumerate(ev_raw):
        path = f"events[{i}]"
        e = ck.keys(e, _EVENT_KEYS, path)
        if not e:
            continue
        eid = str(e.get("id", f"EV{i + 1}"))
        path = f"events[{i}]({eid})"
        if eid in seen_ids:
            ck.err(path, "duplicate event id")
        seen_ids.add(eid)
        if any(ch.isspace() for ch in eid):
            ck.err(f"{path}.id", "must not contain whitespace")
        kind = e.get("kind")
        if kind not in ("fixed", "mobile"):
            ck.err(f"{path}.kind", f"expected fixed or mobile, got {kind!r}")
            continue
        t0 = ck.number(e, "t_start", path, minimum=0.0)
        t1 = ck.number(e, "t_end", path, minimum=0.0)
        if t0 is None or t1 is None:
            continue
        if t1 <= t0:
            ck.err(path, f"t_end ({t1}) must be after t_start ({t0})")
            continue
        if duration is not None and t1 > duration + 1e-9:
            ck.err(f"{path}.t_end", f"event {eid} ends at {t1}, after duration_s {duration}")
            continue
        if kind == "fixed":
            if "waypoints" in e:
                ck.err(f"{path}.waypoints", "fixed events take a single position")
            pos = ck.point(e.get("position"), f"{path}.position")
            if pos is None:
                continue
            spec = EventSpec.fixed(eid, pos, t0, t1)
        else:
            if "position" in e:
                ck.err(f"{path}.position", "mobile events take waypoints")
            wps = ck.waypoints(e.get("waypoints"), f"{path}.waypoints")
            if wps is None:
                continue
            try:
                spec = EventSpec(eid, EventKind.MOBILE, tuple(wps), t0, t1)
            except ValueError as exc:
                ck.err(path, str(exc))
                continue
        if bounds and not all(_in_bounds(q, bounds) for _, q in spec.trajectory):
            ck.err(path, "trajectory leaves the scenario bounds")
        events.append(spec)

    # base stations
    bs = ck.keys(raw.get("base_stations", {"count": 26}), _BS_KEYS, "base_stations")
    stations: list[BaseStation] = []
    if "positions" in bs:
        if {"count", "rows", "cols"} & set(bs):
            ck.err("base_stations", "give either positions or a grid, not both")
        rng_m = ck.number(bs, "range_m", "base_stations", positive=True)
        pos_list = bs["positions"] if isinstance(bs["positions"], list) else None
        if pos_list is None:
            ck.err("base_stations.positions", "expected a list of [x, y]")
        else:
            for i, q in enumerate(pos_list):
                pt = ck.point(q, f"base_stations.positions[{i}]")
                if pt is not None and rng_m:
                    stations.append(BaseStation(i, pt, rng_m))
    elif bounds:
        count = ck.number(bs, "count", "base_stations", default=26, integer=True, positive=True)
        rows = ck.number(bs, "rows", "base_stations", default=0, integer=True, minimum=1) if "rows" in bs else None
        cols = ck.number(bs, "cols", "base_stations", default=0, integer=True, minimum=1) if "cols" in bs else None
        if (rows is None) != (cols is None):
            ck.err("base_stations", "rows and cols go together")
            rows = cols = None
        if rows and cols and count and rows * cols != count:
            ck.err("base_stations", f"rows x cols = {rows * cols} does not match count {count}")
        elif count:
            pts, default_rng = grid_layout(bounds, count, rows, cols)
            rng_m = ck.number(bs, "range_m", "base_stations", default=default_rng, positive=True)
            stations = [BaseStation(i, q, rng_m or default_rng) for i, q in enumerate(pts)]

    # mobility
    mobility = _validate_mobility(ck, raw.get("mobility"), bounds, duration, base_dir)

    if ck.errors:
        raise ScenarioError(ck.errors)
    return ScenarioConfig(
        name=name,
        duration=duration,
        tick=tick,
        seed=seed,
        strategy=strategy,
        bounds=bounds,
        mobility=mobility,
        events=tuple(events),
        base_stations=tuple(stations),
        radio=RadioConfig(v2v, loss, lat, det),
        protocol=ProtocolConfig(t_max, ann, rate, payload),
        cluster=ClusteringConfig(strategy, maint, grace),
    )


def _validate_mobility(ck: _Checker, m: Any, bounds, duration, base_dir) -> dict:
    if m is None:
        ck.err("mobility", "required (trace or generator)")
        return {}
    if not isinstance(m, dict):
        ck.err("mobility", "expected a mapping")
        return {}
    if "trace" in m:
        ck.keys(m, {"trace"}, "mobility")
        path = Path(str(m["trace"]))
        if not path.is_absolute() and base_dir is not None:
            path = Path(base_dir) / path
        if not path.exists():
            ck.err("mobility.trace", f"file not found: {path}")
            return {}
        try:
            traces = load_traces(path)
        except ValueError as exc:
            ck.err("mobility.trace", str(exc))
            return {}
        if bounds:
            for tr in traces:
                if not all(_in_bounds(s.position, bounds) for s in tr.samples):
                    ck.err("mobility.trace", f"vehicle {tr.id} leaves the scenario bounds")
                    break
        return {"trace": str(path.resolve())}
    gen = m.get("generator")
    if gen == "road_flows":
        ck.keys(m, {"generator", "roads", "warm_start"}, "mobility")
        roads = m.get("roads")
        if not isinstance(roads, list) or not roads:
            ck.err("mobility.roads", "expected a non-empty list")
            return {}
        out = []
        for i, rd in enumerate(roads):
            path = f"mobility.roads[{i}]"
            rd = ck.keys(rd, _ROAD_KEYS, path)
            if not rd:
                continue
            a = ck.point(rd.get("from"), f"{path}.from")
            b = ck.point(rd.get("to"), f"{path}.to")
            rate = ck.number(rd, "rate_per_s", path, default=0.0, minimum=0.0)
            rrate = ck.number(rd, "reverse_rate_per_s", path, default=0.0, minimum=0.0)
            speed = ck.number(rd, "speed_mps", path, default=13.9, positive=True)
            sd = ck.number(rd, "speed_sd_mps", path, default=0.0, minimum=0.0)
            if a is None or b is None:
                continue
            if a == b:
                ck.err(path, "zero-length road")
            if bounds and not (_in_bounds(a, bounds) and _in_bounds(b, bounds)):
                ck.err(path, "road leaves the scenario bounds")
            out.append({
                "id": str(rd.get("id", f"r{i}")), "from": [a.x, a.y], "to": [b.x, b.y],
                "rate_per_s": rate, "reverse_rate_per_s": rrate, "speed_mps": speed, "speed_sd_mps": sd,
            })
        ids = [r["id"] for r in out]
        if len(set(ids)) != len(ids):
            ck.err("mobility.roads", "duplicate road ids")
        return {"generator": "road_flows", "warm_start": bool(m.get("warm_start", True)), "roads": out}
    if gen == "explicit":
        ck.keys(m, {"generator", "vehicles"}, "mobility")
        vs = m.get("vehicles")
        if not isinstance(vs, list):
            ck.err("mobility.vehicles", "expected a list")
            return {}
        out = []
        seen = set()
        for i, v in enumerate(vs):
            path = f"mobility.vehicles[{i}]"
            v = ck.keys(v, {"id", "position", "enter_s", "exit_s", "waypoints"}, path)
            if not v:
                continue
            vid = str(v.get("id", f"v{i}"))
            if vid in seen or any(ch.isspace() for ch in vid) or vid.startswith("bs:"):
                ck.err(f"{path}.id", f"invalid or duplicate vehicle id {vid!r}")
            seen.add(vid)
            if "waypoints" in v:
                wps = ck.waypoints(v["waypoints"], f"{path}.waypoints")
                if wps is None:
                    continue
                if bounds and not all(_in_bounds(q, bounds) for _, q in wps):
                    ck.err(path, "waypoints leave the scenario bounds")
                out.append({"id": vid, "waypoints": [[t, q.x, q.y] for t, q in wps]})
            else:
                q = ck.point(v.get("position"), f"{path}.position")
                enter = ck.number(v, "enter_s", path, default=0.0, minimum=0.0)
                exit_ = ck.number(v, "exit_s", path, default=duration or 0.0, minimum=0.0)
                if q is None:
                    continue
                if enter is not None and exit_ is not None and exit_ < enter:
                    ck.err(path, "exit_s before enter_s")
                if bounds and not _in_bounds(q, bounds):
                    ck.err(f"{path}.position", "outside the scenario bounds")
                out.append({"id": vid, "position": [q.x, q.y], "enter_s": enter, "exit_s": exit_})
        return {"generator": "explicit", "vehicles": out}
    ck.err("mobility", f"expected 'trace' or generator road_flows|explicit, got {m!r}")
    return {}


def _traces(cfg: ScenarioConfig) -> list[VehicleTrace]:
    m = cfg.mobility
    if "trace" in m:
        return load_traces(m["trace"])
    if m["generator"] == "road_flows":
        roads = [
            Road(r["id"], Position(*r["from"]), Position(*r["to"]), r["rate_per_s"],
                 r["reverse_rate_per_s"], r["speed_mps"], r["speed_sd_mps"])
            for r in m["roads"]
        ]
        rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 0x6D6F62]))
        return road_flows(roads, cfg.duration, rng, warm_start=m["warm_start"])
    out = []
    for v in m["vehicles"]:
        if "waypoints" in v:
            samples = []
            wps = v["waypoints"]
            for j, (t, x, y) in enumerate(wps):
                if j + 1 < len(wps):
                    t1, x1, y1 = wps[j + 1]
                    dx, dy = x1 - x, y1 - y
                    speed = math.hypot(dx, dy) / (t1 - t)
                    heading = normalize_heading(math.atan2(dy, dx)) if speed > 0 else 0.0
                else:
                    speed, heading = (samples[-1].speed, samples[-1].heading) if samples else (0.0, 0.0)
                samples.append(Sample(t, Position(x, y), speed, heading))
            out.append(VehicleTrace(v["id"], tuple(samples)))
        else:
            out.append(VehicleTrace.static(v["id"], v["position"], v["enter_s"], v["exit_s"]))
    return out


# -- loading and built-ins ------------------------------------------------------


def load_file(path: Union[str, Path]) -> ScenarioConfig:
    path = Path(path)
    with open(path) as fh:
        raw = yaml.safe_load(fh) if path.suffix.lower() in (".yaml", ".yml") else json.load(fh)
    if isinstance(raw, dict):
        raw.setdefault("name", path.stem)
    return validate(raw, base_dir=path.parent)


def resolve(name_or_path: Union[str, Path]) -> ScenarioConfig:
    """A built-in name or a path to a scenario file."""
    if str(name_or_path) in BUILTIN_NAMES:
        return validate(builtin(str(name_or_path)))
    path = Path(name_or_path)
    if not path.exists():
        raise ScenarioError([f"scenario: {name_or_path!r} is neither a built-in ({', '.join(BUILTIN_NAMES)}) nor a file"])
    return load_file(path)


# Area of about 6.5 km^2 laid out as 2 x 13 square cells of 500 m.
PAPER_BOUNDS = [4500.0, 5400.0, 11000.0, 6400.0]
PAPER_FIXED_POSITION = [7682.0, 5878.20]
ARTERIAL_Y = 6150.0


def _paper(name: str, arterial: tuple, secondary: tuple, cross: float, mobile_id: str, fixed_id: str) -> dict:
    """Two simultaneous five-minute events in a six-minute run.

    The mobile event travels east along a busy arterial, in the direction of
    most of its traffic; the fixed event sits on a quieter parallel street.
    """
    roads = [
        {"id": "A", "from": [4600.0, ARTERIAL_Y], "to": [9600.0, ARTERIAL_Y],
         "rate_per_s": arterial[0], "reverse_rate_per_s": arterial[1], "speed_mps": 12.0, "speed_sd_mps": 2.0},
        {"id": "B", "from": [4600.0, PAPER_FIXED_POSITION[1]], "to": [10900.0, PAPER_FIXED_POSITION[1]],
         "rate_per_s": secondary[0], "reverse_rate_per_s": secondary[1], "speed_mps": 13.9, "speed_sd_mps": 2.0},
    ]
    for j, x in enumerate((5500.0, 7000.0, 8500.0, 10000.0)):
        roads.append({"id": f"C{j + 1}", "from": [x, 5400.0], "to": [x, 6400.0],
                      "rate_per_s": cross, "reverse_rate_per_s": cross, "speed_mps": 11.0, "speed_sd_mps": 1.5})
    return {
        "name": name,
        "duration_s": 360.0,
        "tick_s": 0.1,
        "seed": 1,
        "clustering": "dca_like",
        "bounds": list(PAPER_BOUNDS),
        "mobility": {"generator": "road_flows", "warm_start": True, "roads": roads},
        "events": [
            {"id": mobile_id, "kind": "mobile", "t_start": 30.0, "t_end": 330.0,
             "waypoints": [[30.0, 5000.0, ARTERIAL_Y], [330.0, 7700.0, ARTERIAL_Y]]},
            {"id": fixed_id, "kind": "fixed", "t_start": 30.0, "t_end": 330.0, "position": list(PAPER_FIXED_POSITION)},
        ],
        "base_stations": {"count": 26},
        "radio": {"v2v_range_m": 200.0, "loss_probability": 0.0, "detection_range_m": 10.0},
        "protocol": {"t_max_s": 0.3, "announce_interval_s": 1.0, "monitor_rate_pps": 10.0, "payload_bytes": 1200},
        "cluster": {"maintenance_interval_s": 1.0, "grace_intervals": 2},
    }


def builtin(name: str) -> dict:
    """Raw scenario mapping of a built-in scenario."""
    if name == "paper_ld":
        return _paper("paper_ld", (0.5, 0.15), (0.2, 0.2), 0.04, "EV1", "EV2")
    if name == "paper_hd":
        return _paper("paper_hd", (0.8, 0.25), (0.3, 0.3), 0.08, "EV3", "EV4")
    if name == "smoke":
        return {
            "name": "smoke",
            "duration_s": 30.0,
            "seed": 1,
            "bounds": [0.0, 0.0, 600.0, 200.0],
            "mobility": {"generator": "explicit", "vehicles": [
                {"id": "v1", "waypoints": [[0.0, 0.0, 100.0], [30.0, 450.0, 100.0]]},
                {"id": "v2", "waypoints": [[0.0, 20.0, 100.0], [30.0, 470.0, 100.0]]},
                {"id": "v3", "waypoints": [[0.0, 600.0, 100.0], [30.0, 0.0, 100.0]]},
                {"id": "v4", "position": [300.0, 95.0]},
                {"id": "v5", "position": [150.0, 180.0], "enter_s": 5.0, "exit_s": 25.0},
            ]},
            "events": [
                {"id": "M1", "kind": "mobile", "t_start": 2.0, "t_end": 28.0,
                 "waypoints": [[2.0, 25.0, 100.0], [28.0, 415.0, 100.0]]},
                {"id": "F1", "kind": "fixed", "t_start": 2.0, "t_end": 28.0, "position": [300.0, 100.0]},
            ],
            "base_stations": {"positions": [[150.0, 100.0], [450.0, 100.0]], "range_m": 220.0},
            "protocol": {"t_max_s": 0.5},
        }
    if name == "clique":
        return {
            "name": "clique",
            "duration_s": 60.0,
            "seed": 1,
            "bounds": [0.0, 0.0, 200.0, 200.0],
            "mobility": {"generator": "explicit", "vehicles": [
                {"id": f"v{i + 1}", "position": [100.0 + 30.0 * math.cos(2 * math.pi * i / 5),
                                                 100.0 + 30.0 * math.sin(2 * math.pi * i / 5)]}
                for i in range(5)
            ]},
            "events": [{"id": "F1", "kind": "fixed", "t_start": 5.0, "t_end": 55.0, "position": [135.0, 100.0]}],
            "base_stations": {"positions": [[100.0, 100.0]], "range_m": 150.0},
        }
    raise ScenarioError([f"scenario: unknown built-in {name!r} (expected one of {', '.join(BUILTIN_NAMES)})"])
