"""Trace parsing, synthetic contact generators, workload generation."""

import random

import pytest

from oppsim.contacts import (
    CommunityParams,
    ContactSequence,
    WaypointParams,
    convert_pairwise_trace,
    gen_community_schedule,
    gen_random_waypoint,
    gen_workload,
    parse_roster,
    parse_trace,
    parse_workload,
    select_pairs,
    validate_contacts,
    write_workload_csv,
)
from oppsim.types import ScenarioError, TraceFormatError

DAY = 86400


# ---------------------------------------------------------------------------
# trace parsing


def test_parse_trace_single_contact(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("10,UP,0,1\n20,DOWN,0,1\n")
    seq = parse_trace(str(p))
    assert len(seq.events) == 2
    assert (seq.events[0].time, seq.events[0].up) == (10, True)
    assert (seq.events[1].time, seq.events[1].up) == (20, False)
    assert seq.duration == 20


def test_parse_trace_header_tolerated(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("time_s,event,node_a,node_b\n10,UP,0,1\n20,DOWN,0,1\n")
    assert len(parse_trace(str(p)).events) == 2


def test_parse_trace_closes_open_contact_at_end(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("10,UP,0,1\n")
    seq = parse_trace(str(p), duration=100)
    assert len(seq.events) == 2
    assert seq.events[1].time == 100 and not seq.events[1].up


def test_parse_trace_down_without_up_reports_line(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("20,DOWN,0,1\n")
    with pytest.raises(TraceFormatError) as err:
        parse_trace(str(p))
    assert err.value.line_no == 1


def test_parse_trace_malformed_line_reports_line(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("10,UP,0,1\nbogus line\n")
    with pytest.raises(TraceFormatError) as err:
        parse_trace(str(p))
    assert err.value.line_no == 2


def test_parse_trace_unsorted_rejected(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("20,UP,0,1\n10,UP,2,3\n")
    with pytest.raises(TraceFormatError):
        parse_trace(str(p))


def test_convert_pairwise_trace(tmp_path):
    src = tmp_path / "pairs.txt"
    src.write_text("3 7 100 250\n3 9 400 500\n")
    out = tmp_path / "canonical.csv"
    assert convert_pairwise_trace(str(src), str(out)) == 2
    lines = out.read_text().strip().splitlines()
    assert len(lines) == 5  # header + 4 events
    seq = parse_trace(str(out))
    assert len(seq.events) == 4


# ---------------------------------------------------------------------------
# random waypoint


def test_waypoint_stationary_in_range_single_contact():
    params = WaypointParams(
        nodes=2, width=10, height=10, speed_min=0, speed_max=0, radio_range=100,
        tick=2, duration=600,
    )
    seq = gen_random_waypoint(params, seed=1)
    assert [(e.time, e.up) for e in seq.events] == [(0, True), (600, False)]


def test_waypoint_stationary_out_of_range_no_contacts():
    params = WaypointParams(
        nodes=2, width=10_000, height=10_000, speed_min=0, speed_max=0,
        radio_range=0.001, tick=2, duration=600,
    )
    seq = gen_random_waypoint(params, seed=1)
    assert seq.events == []


def test_waypoint_seeded_reproducible_and_distinct():
    params = WaypointParams(nodes=10, width=500, height=500, radio_range=100, tick=2, duration=2000)
    a1 = gen_random_waypoint(params, seed=1)
    a2 = gen_random_waypoint(params, seed=1)
    b = gen_random_waypoint(params, seed=2)
    assert a1 == a2
    assert a1.events != b.events


def test_waypoint_regression_pins():
    params = WaypointParams(nodes=10, width=500, height=500, radio_range=100, tick=2, duration=2000)
    seed1 = [
        (e.time, e.up, e.a, e.b) for e in gen_random_waypoint(params, seed=1).events[:10]
    ]
    assert seed1 == [
        (0, True, "n0", "n8"),
        (0, True, "n2", "n7"),
        (42, True, "n5", "n8"),
        (50, False, "n0", "n8"),
        (62, True, "n1", "n6"),
        (66, False, "n2", "n7"),
        (116, False, "n5", "n8"),
        (120, True, "n4", "n9"),
        (136, True, "n1", "n3"),
        (150, True, "n2", "n6"),
    ]
    seed2 = [
        (e.time, e.up, e.a, e.b) for e in gen_random_waypoint(params, seed=2).events[:10]
    ]
    assert seed2 == [
        (0, True, "n0", "n4"),
        (0, True, "n2", "n3"),
        (0, True, "n5", "n6"),
        (0, True, "n8", "n9"),
        (8, False, "n0", "n4"),
        (18, True, "n4", "n6"),
        (52, True, "n1", "n8"),
        (62, True, "n0", "n8"),
        (64, False, "n2", "n3"),
        (64, True, "n0", "n9"),
    ]


def test_waypoint_outputs_pass_pairing_validator():
    params = WaypointParams(nodes=6, width=300, height=300, radio_range=80, tick=2, duration=1500)
    for seed in range(5):
        validate_contacts(gen_random_waypoint(params, seed))


# ---------------------------------------------------------------------------
# community schedule


def test_community_shared_anchors_full_day_contact():
    params = CommunityParams(
        groups=1, group_size=2, venues=1, start_jitter=0, evening_prob=0.0,
        office_spots=1, shared_home=True, duration=2 * DAY,
    )
    seq = gen_community_schedule(params, seed=1)
    # same home, same office, zero jitter: continuously co-located
    assert [(e.time, e.up) for e in seq.events] == [(0, True), (2 * DAY, False)]


def test_community_office_only_contact_matches_schedule():
    params = CommunityParams(
        groups=1, group_size=2, venues=1, start_jitter=0, evening_prob=0.0,
        office_spots=1, shared_home=False, duration=2 * DAY,
    )
    seq = gen_community_schedule(params, seed=1)
    expected = []
    for day in range(2):
        base = day * DAY
        expected.append((base + params.work_start, True))
        expected.append((base + params.work_start + params.work_hours, False))
    assert [(e.time, e.up) for e in seq.events] == expected


def test_community_no_evening_activity_when_probability_zero():
    params = CommunityParams(
        groups=2, group_size=2, venues=3, evening_prob=0.0, shared_home=False,
        start_jitter=0, duration=3 * DAY,
    )
    seq = gen_community_schedule(params, seed=4)
    # disjoint homes/offices and no evenings: no inter-group contact ever
    groups = {n: g for n, g in seq.roster.items()}
    for ev in seq.events:
        assert groups[ev.a] == groups[ev.b]


def test_community_evening_parties_bridge_groups():
    params = CommunityParams(
        groups=2, group_size=3, venues=1, evening_prob=1.0, start_jitter=0,
        duration=4 * DAY,
    )
    seq = gen_community_schedule(params, seed=2)
    groups = {n: g for n, g in seq.roster.items()}
    assert any(groups[ev.a] != groups[ev.b] for ev in seq.events)


def test_community_reproducible_and_validates():
    params = CommunityParams(groups=3, group_size=3, duration=3 * DAY)
    for seed in range(4):
        s1 = gen_community_schedule(params, seed)
        s2 = gen_community_schedule(params, seed)
        assert s1 == s2
        validate_contacts(s1)


def test_community_roster_labels():
    params = CommunityParams(groups=2, group_size=2, duration=DAY)
    seq = gen_community_schedule(params, seed=1)
    assert sorted(set(seq.roster.values())) == ["g0", "g1"]
    assert len(seq.roster) == 4


# ---------------------------------------------------------------------------
# workload generation


def _roster(n):
    return {f"n{i}": "g0" for i in range(n)}


def test_workload_exact_count():
    items = gen_workload(_roster(6), 500, (1000, 100_000), "all", 12 * DAY, seed=1)
    assert len(items) == 6000
    assert all(1000 <= it.size <= 100_000 for it in items)
    assert all(it.src != it.dst for it in items)
    assert [it.time for it in items] == sorted(it.time for it in items)


def test_workload_zero_rate_empty():
    assert gen_workload(_roster(4), 0, (1000, 2000), "all", 3 * DAY, seed=1) == []


def test_workload_identical_bytes_per_seed(tmp_path):
    files = []
    for run in range(2):
        items = gen_workload(_roster(5), 20, (1000, 9000), "all", 2 * DAY, seed=9)
        path = tmp_path / f"w{run}.csv"
        write_workload_csv(items, str(path))
        files.append(path.read_bytes())
    assert files[0] == files[1]
    other = gen_workload(_roster(5), 20, (1000, 9000), "all", 2 * DAY, seed=10)
    assert [it.msg_id for it in other] == [it.msg_id for it in gen_workload(_roster(5), 20, (1000, 9000), "all", 2 * DAY, seed=9)]
    assert other != gen_workload(_roster(5), 20, (1000, 9000), "all", 2 * DAY, seed=9)


def test_workload_roundtrip_file(tmp_path):
    items = gen_workload(_roster(5), 10, (1000, 5000), "all", DAY, seed=3)
    path = tmp_path / "w.csv"
    write_workload_csv(items, str(path))
    assert parse_workload(str(path)) == items


def test_workload_pair_subset():
    rng = random.Random(1)
    pairs = select_pairs(_roster(6), 4, rng)
    assert len(pairs) == 4
    items = gen_workload(_roster(6), 50, (1000, 2000), pairs, DAY, seed=1)
    used = {(it.src, it.dst) for it in items}
    assert used <= set(pairs)


def test_workload_pair_subset_out_of_range():
    rng = random.Random(1)
    with pytest.raises(ScenarioError):
        select_pairs(_roster(3), 100, rng)


def test_roster_roundtrip(tmp_path):
    p = tmp_path / "r.csv"
    p.write_text("node_id,group_label\nn0,g0\nn1,g1\n")
    assert parse_roster(str(p)) == {"n0": "g0", "n1": "g1"}
