import math
import random

import pytest

from minuet.metrics import average_delay
from minuet.mobility import Scenario, VehicleTrace
from minuet.model import EventKind, EventSpec, Position
from minuet.simlog import (
    Active,
    Detection,
    Dropped,
    Forwarded,
    Generated,
    Received,
    RoleChange,
)

from support import fixed_event, sim, world
from minuet.protocol import ProtocolConfig, Simulation


def _kind(log, cls):
    return [r for r in log.records if isinstance(r, cls)]


def _generated(log, kind):
    return [r for r in log.records if isinstance(r, Generated) and r.kind == kind]


# -- detection -----------------------------------------------------------------


def test_detect_within_ten_meters():
    s = sim({"v1": (5, 0), "v2": (20, 0)}, [fixed_event((0, 0), 1.0, 5.0)])
    log = s.run()
    det = _kind(log, Detection)
    assert det and {d.vehicle for d in det} == {"v1"}
    assert min(d.tick for d in det) == 10  # t_start 1.0 s


def test_no_detection_before_start():
    s = sim({"v1": (5, 0)}, [fixed_event((0, 0), 1.0, 5.0)])
    for _ in range(10):
        s.step()
    assert _kind(s.log, Detection) == []


def test_detect_matches_brute_force():
    rng = random.Random(3)
    pts = {f"v{i}": (rng.uniform(0, 60), rng.uniform(0, 60)) for i in range(80)}
    evs = [fixed_event((30, 30), 0, 1, "A"), fixed_event((10, 50), 0, 1, "B")]
    s = sim(pts, evs, duration=1.0)
    s.step()
    got = {(d.vehicle, d.event) for d in _kind(s.log, Detection)}
    expected = {
        (v, e.id) for v, p in pts.items() for e in evs if math.dist(p, e.trajectory[0][1]) <= 10.0
    }
    assert got == expected and got


# -- announcements -----------------------------------------------------------------


def test_one_detector_three_neighbours():
    s = sim({"d": (0, 0), "a": (100, 0), "b": (0, 100), "c": (-100, 0)}, [fixed_event((0, 0), 0, 5)])
    s.step()
    ann = _generated(s.log, "announcement")
    assert len(ann) == 1
    sent = [r for r in _kind(s.log, Forwarded) if r.packet_id == ann[0].packet_id]
    assert sorted(r.receiver for r in sent) == ["a", "b", "c"]
    assert len(s._in_flight[1]) >= 3


def test_isolated_detector_announces_to_nobody():
    s = sim({"d": (0, 0), "far": (900, 0)}, [fixed_event((0, 0), 0, 5)])
    s.step()
    ann = _generated(s.log, "announcement")
    assert len(ann) == 1
    assert not [r for r in _kind(s.log, Forwarded) if r.packet_id == ann[0].packet_id]


def test_announcements_once_per_interval():
    s = sim({"d": (0, 0)}, [fixed_event((0, 0), 0, 9.9)], duration=12.0)
    log = s.run()
    # detecting over [0, 9.9] covers ten 1 s intervals
    assert len(_generated(log, "announcement")) == 10


def test_announcement_carries_t_max():
    s = sim({"d": (0, 0)}, [fixed_event((0, 0), 0, 5)], t_max=0.7)
    s.step()
    assert _generated(s.log, "announcement")[0].t_max == 0.7


def _chain(n=6, spacing=150.0, **kw):
    return sim({f"c{i}": (spacing * i, 0) for i in range(n)}, [fixed_event((0, 0), 0, 5)], **kw)


def test_az_boundary_one_tick_over():
    s = _chain(t_max=0.3, rate=0)
    for _ in range(6):
        s.step()
    drops = [r for r in _kind(s.log, Dropped) if r.cause == "az_expired"]
    # created at tick 0; c4 receives at age 4 ticks = t_max + one tick
    assert [(r.tick, r.vehicle) for r in drops] == [(4, "c4")]


def test_az_chain_exactly_k_hops():
    s = _chain(t_max=0.3, rate=10, duration=5.0)
    log = s.run()
    receivers = {r.receiver for r in _kind(log, Forwarded) if not r.receiver.startswith("bs:")}
    assert receivers == {"c1", "c2", "c3", "c4"}
    emitters = {r.origin for r in log.records if isinstance(r, Generated) and r.kind != "announcement"}
    assert emitters <= {"c0", "c1", "c2", "c3"}
    assert {"c4", "c5"}.isdisjoint(emitters)
    assert not any(r.vehicle == "c5" for r in _kind(log, Dropped))


def test_within_t_max_forwards_and_clusters():
    s = _chain(n=3, t_max=1.5)
    for _ in range(3):
        s.step()
    assert s.strategy.group_of("c2", "E1") is not None


# -- monitoring and roles --------------------------------------------------------------


def test_monitor_as_gateway_one_hop():
    s = sim({"m": (0, 0)}, [fixed_event((0, 0), 0, 5)], [((50, 0), 100)], rate=10)
    for _ in range(3):
        s.step()
    rec = _kind(s.log, Received)
    gen = {g.packet_id: g for g in _generated(s.log, "monitoring")}
    assert rec and all(r.hop_count == 1 and r.tick - gen[r.packet_id].tick == 1 for r in rec)


def _three_hop(strategy="dca_like"):
    return sim(
        {"M": (0, 0), "R": (150, 0), "G": (300, 0)},
        [fixed_event((0, 0), 0, 5)],
        [((450, 0), 160)],
        strategy,
        duration=6.0,
    )


def test_three_hop_route():
    log = _three_hop().run()
    rec = _kind(log, Received)
    assert rec
    assert {r.hop_count for r in rec} == {3}
    assert average_delay(log) == 0.3
    path = [(r.sender, r.receiver) for r in _kind(log, Forwarded) if r.packet_id == rec[-1].packet_id]
    assert path == [("M", "R"), ("R", "G"), ("G", "bs:0")]


def test_roles_along_the_route():
    s = _three_hop()
    for _ in range(30):
        s.step()
    roles = s.world.roles
    assert roles[("M", "E1")] == ("monitor",)
    assert roles[("R", "E1")] == ("relay",)
    assert roles[("G", "E1")] == ("gateway",)


def test_detector_in_station_range_is_monitor_and_gateway():
    s = sim({"L": (0, 0)}, [fixed_event((0, 0), 0, 5)], [((0, 0), 100)])
    for _ in range(3):
        s.step()
    assert s.world.roles[("L", "E1")] == ("gateway", "monitor")


def test_vehicle_outside_groups_has_no_role():
    s = sim({"L": (0, 0), "x": (1500, 0)}, [fixed_event((0, 0), 0, 5)], [((1500, 0), 100)])
    for _ in range(20):
        s.step()
    assert ("x", "E1") not in s.world.roles
    assert not [r for r in _kind(s.log, RoleChange) if r.vehicle == "x"]


def test_two_stations_both_receive():
    s = sim({"g": (0, 0)}, [fixed_event((0, 0), 0, 5)], [((50, 0), 100), ((-50, 0), 100)])
    for _ in range(3):
        s.step()
    rec = _kind(s.log, Received)
    by_pid = {}
    for r in rec:
        by_pid.setdefault(r.packet_id, set()).add(r.station)
    assert by_pid and all(v == {0, 1} for v in by_pid.values())


def test_rate_credit_generates_configured_rate():
    s = sim({"m": (0, 0)}, [fixed_event((0, 0), 0, 10)], rate=3, duration=12.0)
    log = s.run()
    n = len(_generated(log, "monitoring"))
    assert 29 <= n <= 31


# -- orchestration ---------------------------------------------------------------------


def test_empty_scenario_no_records():
    s = Simulation(Scenario((), (), (), (0, 0, 10, 10), 2.0))
    log = s.run()
    assert log.records == [] and s.tick == 20


def test_six_minutes_is_3600_steps():
    s = Simulation(Scenario((), (), (), (0, 0, 10, 10), 360.0))
    steps = 0
    while s.tick < s.n_ticks:
        s.step()
        steps += 1
    assert steps == 3600
    with pytest.raises(RuntimeError):
        s.step()


def _busy(seed=0, strategy="dca_like", loss=0.0):
    rng = random.Random(seed)
    vehicles = {}
    for i in range(25):
        y = rng.choice([0.0, 40.0])
        x0 = rng.uniform(0, 800)
        vehicles[f"v{i}"] = VehicleTrace.linear(f"v{i}", 0, (x0, y), 30, (x0 + rng.uniform(-300, 300), y))
    ev = EventSpec("M", EventKind.MOBILE, ((2, Position(100, 0)), (28, Position(700, 0))), 2, 28)
    return sim(
        vehicles, [ev, fixed_event((400, 40), 2, 28, "F")], [((200, 20), 250), ((700, 20), 250)],
        strategy, duration=30.0, loss=loss, seed=seed, rate=5,
    )


@pytest.mark.parametrize("strategy", ["dca_like", "pctt_like"])
def test_log_invariants(strategy):
    s = _busy(1, strategy, loss=0.1)
    log = s.run()
    ticks = [r.tick for r in log.records]
    assert ticks == sorted(ticks)
    gen = {g.packet_id: g for g in log.records if isinstance(g, Generated)}
    # every reception has its transmission one latency earlier
    sent = {(r.packet_id, r.receiver, r.tick) for r in log.records if isinstance(r, Forwarded)}
    triples = set()
    for r in log.records:
        if isinstance(r, Received):
            assert (r.packet_id, f"bs:{r.station}", r.tick - 1) in sent
            assert (r.packet_id, r.station, r.tick) not in triples
            triples.add((r.packet_id, r.station, r.tick))
            g = gen[r.packet_id]
            assert g.kind == "monitoring"
            assert (r.tick - g.tick) == r.hop_count  # one tick per hop
    # monitor role at a tick iff a detection at that tick
    det_ticks = {}
    for r in log.records:
        if isinstance(r, Detection):
            det_ticks.setdefault((r.vehicle, r.event), set()).add(r.tick)
    roles = {}
    monitor_ticks = {}
    for k in range(log.n_ticks):
        for r in (x for x in log.records if x.tick == k and isinstance(x, RoleChange)):
            roles[(r.vehicle, r.event)] = r.roles
        for key, rs in roles.items():
            if "monitor" in rs:
                monitor_ticks.setdefault(key, set()).add(k)
    assert monitor_ticks == det_ticks
    # packet ids unique per generation
    assert len(gen) == len([r for r in log.records if isinstance(r, Generated)])


def test_lossless_every_transmission_received():
    log = _busy(2).run()
    drops = {(r.packet_id, r.vehicle, r.tick) for r in log.records if isinstance(r, Dropped) and r.cause == "loss"}
    assert not drops


def test_clustering_origin_is_member_when_emitting():
    s = _busy(3)
    while s.tick < s.n_ticks:
        before = set(s.strategy.membership)
        new = s.step()
        after = set(s.strategy.membership)
        for r in new:
            if isinstance(r, Generated) and r.kind == "clustering":
                assert (r.origin, r.event) in before | after


def test_determinism_identical_logs():
    a = _busy(4, loss=0.2).run().to_text()
    b = _busy(4, loss=0.2).run().to_text()
    assert a == b
    c = _busy(5, loss=0.2).run().to_text()
    assert a != c


def test_active_records_count_vehicles():
    s = _busy(6)
    log = s.run()
    act = {r.tick: r.count for r in log.records if isinstance(r, Active)}
    from minuet.mobility import active_vehicles

    for k in (0, 55, 123, 299):
        assert act.get(k, 0) == len(active_vehicles(s.scenario, k * 0.1))


def test_protocol_config_validation():
    with pytest.raises(ValueError):
        ProtocolConfig(t_max=-1)
    with pytest.raises(ValueError):
        ProtocolConfig(announce_interval=0)


def test_world_helper_static_positions():
    sc = world({"a": (1, 2)}, duration=3.0)
    assert sc.traces[0].samples[0].position == Position(1, 2)
