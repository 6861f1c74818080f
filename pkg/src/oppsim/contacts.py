"""Contact and workload sources: trace parsing and seeded synthetic generators.

File formats (CSV, header optional on input, written on output):
  contacts:  time_s,event,node_a,node_b     event is UP or DOWN
  workload:  create_time_s,msg_id,src,dst,size_bytes
  roster:    node_id,group_label
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

from .types import ScenarioError, TraceFormatError

DAY = 86400


@dataclass(frozen=True)
class ContactEvent:
    time: int
    up: bool
    a: str
    b: str


@dataclass
class ContactSequence:
    events: list[ContactEvent]
    roster: dict[str, str]
    duration: int


@dataclass(frozen=True)
class WorkloadItem:
    time: int
    msg_id: str
    src: str
    dst: str
    size: int


def _pair(a: str, b: str) -> tuple[str, str]:
    return (a, b) if a <= b else (b, a)


def validate_contacts(seq: ContactSequence) -> None:
    """Check time ordering, up/down pairing and roster coverage."""
    open_pairs: set[tuple[str, str]] = set()
    last_t = -1
    for i, ev in enumerate(seq.events):
        if ev.time < last_t:
            raise ScenarioError(f"contact event {i} out of order (t={ev.time} after {last_t})")
        last_t = ev.time
        if ev.a == ev.b:
            raise ScenarioError(f"contact event {i} links {ev.a} to itself")
        for node in (ev.a, ev.b):
            if node not in seq.roster:
                raise ScenarioError(f"contact event {i} references unknown node {node!r}")
        key = _pair(ev.a, ev.b)
        if ev.up:
            if key in open_pairs:
                raise ScenarioError(f"contact event {i}: duplicate UP for pair {key}")
            open_pairs.add(key)
        else:
            if key not in open_pairs:
                raise ScenarioError(f"contact event {i}: DOWN without matching UP for {key}")
            open_pairs.remove(key)
        if ev.time > seq.duration:
            raise ScenarioError(f"contact event {i} beyond sequence duration {seq.duration}")


def validate_workload(items: list[WorkloadItem], roster: dict[str, str]) -> None:
    last_t = -1
    seen: set[str] = set()
    for i, it in enumerate(items):
        if it.time < last_t:
            raise ScenarioError(f"workload item {i} out of order")
        last_t = it.time
        if it.src == it.dst:
            raise ScenarioError(f"workload item {i}: src == dst ({it.src})")
        if it.msg_id in seen:
            raise ScenarioError(f"workload item {i}: duplicate message id {it.msg_id}")
        seen.add(it.msg_id)
        if it.size < 1:
            raise ScenarioError(f"workload item {i}: non-positive size")
        for node in (it.src, it.dst):
            if node not in roster:
                raise ScenarioError(f"workload item {i} references unknown node {node!r}")


# ---------------------------------------------------------------------------
# parsing


def _data_lines(path: str):
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            yield line_no, line


def parse_trace(path: str, duration: int | None = None) -> ContactSequence:
    """Parse a canonical contact CSV; unpaired UPs close at the trace end."""
    events: list[ContactEvent] = []
    open_since: dict[tuple[str, str], int] = {}
    max_t = 0
    last_t = -1
    for line_no, line in _data_lines(path):
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 4:
            raise TraceFormatError(path, line_no, f"expected 4 fields, got {len(parts)}")
        if not parts[0].lstrip("-").isdigit():
            if events or open_since or last_t >= 0:
                raise TraceFormatError(path, line_no, f"bad time field {parts[0]!r}")
            continue  # header row
        t = int(parts[0])
        if t < 0:
            raise TraceFormatError(path, line_no, "negative time")
        if t < last_t:
            raise TraceFormatError(path, line_no, "events not sorted by time")
        last_t = t
        kind = parts[1].upper()
        a, b = parts[2], parts[3]
        if a == b:
            raise TraceFormatError(path, line_no, f"self contact for node {a!r}")
        key = _pair(a, b)
        if kind == "UP":
            if key in open_since:
                raise TraceFormatError(path, line_no, f"duplicate UP for pair {key}")
            open_since[key] = t
            events.append(ContactEvent(t, True, key[0], key[1]))
        elif kind == "DOWN":
            if key not in open_since:
                raise TraceFormatError(path, line_no, f"DOWN without UP for pair {key}")
            if t <= open_since[key]:
                raise TraceFormatError(path, line_no, f"zero-length contact for pair {key}")
            del open_since[key]
            events.append(ContactEvent(t, False, key[0], key[1]))
        else:
            raise TraceFormatError(path, line_no, f"unknown event kind {parts[1]!r}")
        max_t = max(max_t, t)
    end = duration if duration is not None else max_t
    if end < max_t:
        raise ScenarioError(f"trace extends to {max_t}, beyond requested duration {end}")
    for key in sorted(open_since):
        if open_since[key] >= end:
            raise ScenarioError(f"open contact {key} starts at/after trace end {end}")
        events.append(ContactEvent(end, False, key[0], key[1]))
    events.sort(key=lambda e: (e.time, e.up, e.a, e.b))
    roster = {}
    for ev in events:
        roster.setdefault(ev.a, "")
        roster.setdefault(ev.b, "")
    return ContactSequence(events=events, roster=roster, duration=end)


def parse_roster(path: str) -> dict[str, str]:
    roster: dict[str, str] = {}
    for line_no, line in _data_lines(path):
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 2:
            raise TraceFormatError(path, line_no, f"expected 2 fields, got {len(parts)}")
        if parts == ["node_id", "group_label"]:
            continue
        if parts[0] in roster:
            raise TraceFormatError(path, line_no, f"duplicate node id {parts[0]!r}")
        roster[parts[0]] = parts[1]
    if not roster:
        raise ScenarioError(f"{path}: empty roster")
    return roster


def parse_workload(path: str) -> list[WorkloadItem]:
    items: list[WorkloadItem] = []
    for line_no, line in _data_lines(path):
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 5:
            raise TraceFormatError(path, line_no, f"expected 5 fields, got {len(parts)}")
        if not parts[0].lstrip("-").isdigit():
            if items:
                raise TraceFormatError(path, line_no, f"bad time field {parts[0]!r}")
            continue  # header row
        try:
            items.append(
                WorkloadItem(int(parts[0]), parts[1], parts[2], parts[3], int(parts[4]))
            )
        except ValueError as exc:
            raise TraceFormatError(path, line_no, str(exc)) from None
    return items


# ---------------------------------------------------------------------------
# writing


def write_contacts_csv(seq: ContactSequence, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("time_s,event,node_a,node_b\n")
        for ev in seq.events:
            fh.write(f"{ev.time},{'UP' if ev.up else 'DOWN'},{ev.a},{ev.b}\n")


def write_roster_csv(roster: dict[str, str], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("node_id,group_label\n")
        for node in sorted(roster):
            fh.write(f"{node},{roster[node]}\n")


def write_workload_csv(items: list[WorkloadItem], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("create_time_s,msg_id,src,dst,size_bytes\n")
        for it in items:
            fh.write(f"{it.time},{it.msg_id},{it.src},{it.dst},{it.size}\n")


def convert_pairwise_trace(src_path: str, dst_path: str) -> int:
    """Convert whitespace-separated ``node_a node_b start end`` lines to the
    canonical CSV (one UP plus one DOWN per input contact). Returns the
    number of contacts converted."""
    events: list[ContactEvent] = []
    for line_no, line in _data_lines(src_path):
        parts = line.split()
        if len(parts) < 4:
            raise TraceFormatError(src_path, line_no, f"expected 4 fields, got {len(parts)}")
        a, b = parts[0], parts[1]
        try:
            start, end = int(parts[2]), int(parts[3])
        except ValueError:
            raise TraceFormatError(src_path, line_no, "bad start/end time") from None
        if end <= start:
            raise TraceFormatError(src_path, line_no, "contact end not after start")
        key = _pair(a, b)
        events.append(ContactEvent(start, True, key[0], key[1]))
        events.append(ContactEvent(end, False, key[0], key[1]))
    events.sort(key=lambda e: (e.time, e.up, e.a, e.b))
    roster = {}
    for ev in events:
        roster.setdefault(ev.a, "")
        roster.setdefault(ev.b, "")
    duration = events[-1].time if events else 0
    write_contacts_csv(ContactSequence(events, roster, duration), dst_path)
    return len(events) // 2


# ---------------------------------------------------------------------------
# random-waypoint generator


@dataclass
class WaypointParams:
    nodes: int = 10
    width: float = 1000.0
    height: float = 1000.0
    speed_min: float = 0.8
    speed_max: float = 1.4
    pause_min: int = 0
    pause_max: int = 120
    radio_range: float = 100.0
    tick: int = 2
    duration: int = 3600

    def validate(self) -> None:
        if self.nodes < 2:
            raise ScenarioError("waypoint generator needs at least 2 nodes")
        if self.width <= 0 or self.height <= 0 or self.radio_range <= 0:
            raise ScenarioError("area and radio range must be positive")
        if self.speed_min < 0 or self.speed_max < self.speed_min:
            raise ScenarioError("bad speed range")
        if self.pause_min < 0 or self.pause_max < self.pause_min:
            raise ScenarioError("bad pause range")
        if self.tick < 1 or self.duration < self.tick:
            raise ScenarioError("bad tick/duration")


def _node_ids(n: int) -> list[str]:
    width = len(str(n - 1))
    return [f"n{i:0{width}d}" for i in range(n)]


def gen_random_waypoint(params: WaypointParams, seed: int) -> ContactSequence:
    """Waypoint motion sampled at the scenario tick; contacts by range test."""
    params.validate()
    rng = random.Random(seed)
    n = params.nodes
    ids = _node_ids(n)
    xs = [rng.uniform(0.0, params.width) for _ in range(n)]
    ys = [rng.uniform(0.0, params.height) for _ in range(n)]
    targets: list[tuple[float, float] | None] = [None] * n
    speeds = [0.0] * n
    pause_until = [0] * n

    events: list[ContactEvent] = []
    linked: set[tuple[int, int]] = set()
    r2 = params.radio_range * params.radio_range

    t = 0
    while t <= params.duration:
        if t > 0:
            for i in range(n):
                if t < pause_until[i]:
                    continue
                if targets[i] is None:
                    tx = rng.uniform(0.0, params.width)
                    ty = rng.uniform(0.0, params.height)
                    speeds[i] = rng.uniform(params.speed_min, params.speed_max)
                    targets[i] = (tx, ty)
                tx, ty = targets[i]
                dx, dy = tx - xs[i], ty - ys[i]
                dist = math.hypot(dx, dy)
                step = speeds[i] * params.tick
                if dist <= step or dist == 0.0 or speeds[i] == 0.0:
                    if speeds[i] > 0.0:
                        xs[i], ys[i] = tx, ty
                        targets[i] = None
                        pause_until[i] = t + rng.randint(params.pause_min, params.pause_max)
                else:
                    xs[i] += dx / dist * step
                    ys[i] += dy / dist * step
        now_linked = set()
        for i in range(n):
            for j in range(i + 1, n):
                dx, dy = xs[i] - xs[j], ys[i] - ys[j]
                if dx * dx + dy * dy <= r2:
                    now_linked.add((i, j))
        for key in sorted(linked - now_linked):
            events.append(ContactEvent(t, False, ids[key[0]], ids[key[1]]))
        for key in sorted(now_linked - linked):
            events.append(ContactEvent(t, True, ids[key[0]], ids[key[1]]))
        linked = now_linked
        t += params.tick
    for key in sorted(linked):
        events.append(ContactEvent(params.duration, False, ids[key[0]], ids[key[1]]))
    events.sort(key=lambda e: (e.time, e.up, e.a, e.b))
    roster = {i: "g0" for i in ids}
    seq = ContactSequence(events=events, roster=roster, duration=params.duration)
    validate_contacts(seq)
    return seq


# ---------------------------------------------------------------------------
# community-schedule generator


@dataclass
class CommunityParams:
    groups: int = 6
    group_size: int = 5
    venues: int = 4
    work_start: int = 32400  # 09:00
    work_hours: int = 28800  # 8 h at the office
    start_jitter: int = 1800
    # inside the office people drift between spots, pausing at each;
    # only nodes at the same spot are within range
    office_spots: int = 3
    office_pause_min: int = 60
    office_pause_max: int = 14400
    evening_prob: float = 0.5
    # per-node sociability ramp: node i goes out with probability
    # evening_prob +- spread, linearly spaced over the roster so the
    # configured mean is kept and every node has a distinct propensity
    evening_prob_spread: float = 0.0
    evening_min: int = 3600
    evening_max: int = 7200
    party_size: int = 3
    # True: everyone at a venue is in range while stays overlap;
    # False: parties sit apart and cross-party pairs only brush for
    # mingle_seconds at the start of their overlap (0 disables)
    venue_mixing: bool = True
    mingle_seconds: int = 600
    shared_home: bool = True
    duration: int = 12 * DAY

    def validate(self) -> None:
        if self.groups < 1 or self.group_size < 1:
            raise ScenarioError("community generator needs non-empty groups")
        if self.venues < 1:
            raise ScenarioError("need at least one evening venue")
        if not (0.0 <= self.evening_prob <= 1.0):
            raise ScenarioError("evening probability must be in [0, 1]")
        if self.evening_prob_spread < 0.0:
            raise ScenarioError("evening probability spread must be >= 0")
        n = self.groups * self.group_size
        for i in (0, n - 1):
            if not (0.0 <= self.node_evening_prob(i, n) <= 1.0):
                raise ScenarioError("evening probability spread leaves [0, 1]")
        if self.evening_min < 1 or self.evening_max < self.evening_min:
            raise ScenarioError("bad evening duration range")
        if self.office_spots < 1:
            raise ScenarioError("need at least one office spot")
        if self.mingle_seconds < 0:
            raise ScenarioError("mingle_seconds must be >= 0")
        if self.office_pause_min < 1 or self.office_pause_max < self.office_pause_min:
            raise ScenarioError("bad office pause range")
        work_end = self.work_start + self.start_jitter + self.work_hours
        if work_end + self.evening_max > DAY:
            raise ScenarioError("daily schedule does not fit in one day")
        if self.work_start - self.start_jitter < 0:
            raise ScenarioError("work start jitter reaches before midnight")
        if self.duration < DAY:
            raise ScenarioError("duration must cover at least one day")

    def node_evening_prob(self, node: int, n_nodes: int) -> float:
        if n_nodes == 1 or self.evening_prob_spread == 0.0:
            return self.evening_prob
        ramp = 2.0 * node / (n_nodes - 1) - 1.0
        return self.evening_prob + self.evening_prob_spread * ramp


def gen_community_schedule(params: CommunityParams, seed: int) -> ContactSequence:
    """Daily home -> office -> (optional party) -> home schedules.

    Nodes co-located at the same anchor are pairwise in contact. Each group
    shares an office (and, by default, a home); evening parties draw from
    shared venues and are chunked to at most ``party_size`` people, which is
    what creates weak ties across groups.
    """
    params.validate()
    rng = random.Random(seed)
    n = params.groups * params.group_size
    ids = _node_ids(n)
    group_of = [i // params.group_size for i in range(n)]
    roster = {ids[i]: f"g{group_of[i]}" for i in range(n)}
    days = params.duration // DAY

    # anchor key -> list of (node, start, end) presence intervals
    presence: dict[tuple, list[tuple[int, int, int]]] = {}
    # direct pair intervals that bypass anchors (venue mingling)
    extra_pairs: list[tuple[int, int, int, int]] = []

    def attend(anchor: tuple, node: int, start: int, end: int) -> None:
        start = max(0, start)
        end = min(params.duration, end)
        if end > start:
            presence.setdefault(anchor, []).append((node, start, end))

    leave_home = [0] * n  # rolling marker: when the node last left home
    for day in range(days):
        base = day * DAY
        work_start = [0] * n
        work_end = [0] * n
        for i in range(n):
            jitter = rng.randint(-params.start_jitter, params.start_jitter)
            work_start[i] = base + params.work_start + jitter
            work_end[i] = work_start[i] + params.work_hours
        evening: dict[int, int] = {}  # node -> venue
        for i in range(n):
            if rng.random() < params.node_evening_prob(i, n):
                evening[i] = rng.randrange(params.venues)
        for i in range(n):
            home_anchor = ("home", group_of[i]) if params.shared_home else ("home", i)
            attend(home_anchor, i, leave_home[i], work_start[i])
            t = work_start[i]
            while t < work_end[i]:
                spot = rng.randrange(params.office_spots)
                stay = rng.randint(params.office_pause_min, params.office_pause_max)
                attend(("office", group_of[i], spot), i, t, min(t + stay, work_end[i]))
                t += stay
            leave_home[i] = work_end[i]
        for venue in range(params.venues):
            attendees = sorted(i for i, v in evening.items() if v == venue)
            if not attendees:
                continue
            # parties of up to party_size arrive and leave together; everyone
            # at the venue is co-located while their stays overlap
            rng.shuffle(attendees)
            stays: list[tuple[int, int, int, int]] = []  # node, party, start, end
            for p in range(0, len(attendees), params.party_size):
                party = attendees[p : p + params.party_size]
                start = max(work_end[i] for i in party)
                length = rng.randint(params.evening_min, params.evening_max)
                anchor = ("venue", day, venue) if params.venue_mixing else ("party", day, venue, p)
                for i in party:
                    attend(anchor, i, start, start + length)
                    leave_home[i] = start + length
                    stays.append((i, p, start, start + length))
            if not params.venue_mixing and params.mingle_seconds > 0:
                for x in range(len(stays)):
                    na, pa, sa, ea = stays[x]
                    for y in range(x + 1, len(stays)):
                        nb, pb, sb, eb = stays[y]
                        if pa == pb:
                            continue
                        lo, hi = max(sa, sb), min(ea, eb)
                        if hi - lo >= params.mingle_seconds:
                            extra_pairs.append((na, nb, lo, min(lo + params.mingle_seconds, params.duration)))
    for i in range(n):
        home_anchor = ("home", group_of[i]) if params.shared_home else ("home", i)
        attend(home_anchor, i, leave_home[i], params.duration)

    # co-location intervals, merged per pair across anchors
    pair_intervals: dict[tuple[int, int], list[tuple[int, int]]] = {}
    for anchor in sorted(presence):
        entries = presence[anchor]
        for x in range(len(entries)):
            na, sa, ea = entries[x]
            for y in range(x + 1, len(entries)):
                nb, sb, eb = entries[y]
                if na == nb:
                    continue
                lo, hi = max(sa, sb), min(ea, eb)
                if hi > lo:
                    key = (na, nb) if na < nb else (nb, na)
                    pair_intervals.setdefault(key, []).append((lo, hi))
    for na, nb, lo, hi in extra_pairs:
        if hi > lo:
            key = (na, nb) if na < nb else (nb, na)
            pair_intervals.setdefault(key, []).append((lo, hi))

    events: list[ContactEvent] = []
    for key in sorted(pair_intervals):
        merged: list[list[int]] = []
        for lo, hi in sorted(pair_intervals[key]):
            if merged and lo <= merged[-1][1]:
                merged[-1][1] = max(merged[-1][1], hi)
            else:
                merged.append([lo, hi])
        a, b = ids[key[0]], ids[key[1]]
        for lo, hi in merged:
            events.append(ContactEvent(lo, True, a, b))
            events.append(ContactEvent(hi, False, a, b))
    events.sort(key=lambda e: (e.time, e.up, e.a, e.b))
    seq = ContactSequence(events=events, roster=roster, duration=params.duration)
    validate_contacts(seq)
    return seq


# ---------------------------------------------------------------------------
# workload generator


def select_pairs(roster: dict[str, str], spec: str | int, rng: random.Random) -> list[tuple[str, str]]:
    """Resolve a pair-subset spec: "all" or a seeded sample of K ordered pairs."""
    nodes = sorted(roster)
    all_pairs = [(a, b) for a in nodes for b in nodes if a != b]
    if spec == "all":
        return all_pairs
    k = int(spec)
    if k < 1 or k > len(all_pairs):
        raise ScenarioError(f"pair subset size {k} out of range 1..{len(all_pairs)}")
    return sorted(rng.sample(all_pairs, k))


def gen_workload(
    roster: dict[str, str],
    msgs_per_day: int,
    size_range: tuple[int, int],
    pairs: list[tuple[str, str]] | str,
    duration: int,
    seed: int,
) -> list[WorkloadItem]:
    """Evenly spread creations; pairs and sizes drawn from the seeded stream."""
    if msgs_per_day < 0:
        raise ScenarioError("msgs_per_day must be >= 0")
    size_min, size_max = size_range
    if size_min < 1 or size_max < size_min:
        raise ScenarioError("bad size range")
    rng = random.Random(seed)
    pair_list = select_pairs(roster, "all", rng) if pairs == "all" else list(pairs)
    if msgs_per_day and not pair_list:
        raise ScenarioError("pair subset is empty")
    days = duration // DAY
    total = msgs_per_day * days
    width = max(1, len(str(max(0, total - 1))))
    items: list[WorkloadItem] = []
    idx = 0
    for day in range(days):
        for i in range(msgs_per_day):
            t = day * DAY + (i * DAY) // msgs_per_day
            src, dst = pair_list[rng.randrange(len(pair_list))]
            size = rng.randint(size_min, size_max)
            items.append(WorkloadItem(t, f"M{idx:0{width}d}", src, dst, size))
            idx += 1
    return items
