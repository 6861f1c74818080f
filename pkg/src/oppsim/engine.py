"""Deterministic contact-driven simulation engine.

Contacts open transfer sessions; each session executes its queued transfers
sequentially at the configured bandwidth, and anything still pending when
the contact closes is aborted. Message arrivals and creations during an
active contact are offered to that contact immediately. All state advances
in integer seconds and every tie is broken by ascending message/node id,
so a run is a pure function of its inputs.
"""

from __future__ import annotations

import heapq
from bisect import insort
from dataclasses import dataclass, field

from .contacts import ContactSequence, WorkloadItem, validate_contacts, validate_workload
from .metrics import RunReport, build_run_report
from .social import AnalyticsParams, SocialState
from .types import (
    Decision,
    DecisionKind,
    Message,
    Record,
    RecordKind,
    ScenarioError,
    SKIP,
    ceil_div,
)

PRIO_COMPLETE = 0
PRIO_DOWN = 1
PRIO_CREATE = 2
PRIO_UP = 3
PRIO_PROBE = 4

DELIVER = Decision(DecisionKind.DELIVER)


class Buffer:
    """Capacity-limited FIFO store; insertion order drives eviction."""

    __slots__ = ("capacity", "used", "_items")

    def __init__(self, capacity: int):
        self.capacity = capacity
        self.used = 0
        self._items: dict[str, Message] = {}

    @property
    def free(self) -> int:
        return self.capacity - self.used

    def has(self, msg_id: str) -> bool:
        return msg_id in self._items

    def get(self, msg_id: str) -> Message | None:
        return self._items.get(msg_id)

    def add(self, m: Message) -> None:
        assert m.id not in self._items, "duplicate copy in buffer"
        assert self.used + m.size <= self.capacity, "buffer over capacity"
        self._items[m.id] = m
        self.used += m.size

    def remove(self, msg_id: str) -> Message:
        m = self._items.pop(msg_id)
        self.used -= m.size
        return m

    def pop_oldest(self) -> Message:
        return self.remove(next(iter(self._items)))

    def ids(self) -> list[str]:
        return list(self._items)

    def messages(self) -> list[Message]:
        return list(self._items.values())

    def __len__(self) -> int:
        return len(self._items)


class NodeState:
    """One node: its buffer plus the set of messages it received as final
    destination (delivery consumes a message; it never re-enters a buffer)."""

    __slots__ = ("idx", "sid", "label", "buffer", "delivered")

    def __init__(self, idx: int, sid: str, label: str, capacity: int):
        self.idx = idx
        self.sid = sid
        self.label = label
        self.buffer = Buffer(capacity)
        self.delivered: set[str] = set()


def buffer_insert(node: NodeState, m: Message, now: int, on_remove=None) -> list[Record]:
    """Insert ``m``, evicting oldest entries while it does not fit.

    A message larger than the whole buffer is rejected with a drop record.
    """
    recs: list[Record] = []
    if m.size > node.buffer.capacity:
        if on_remove is not None:
            on_remove(m)
        recs.append(Record(RecordKind.DROPPED, now, m.id, frm=node.sid))
        return recs
    while node.buffer.free < m.size:
        old = node.buffer.pop_oldest()
        if on_remove is not None:
            on_remove(old)
        recs.append(Record(RecordKind.DROPPED, now, old.id, frm=node.sid))
    node.buffer.add(m)
    return recs


def expire_ttl(node: NodeState, now: int, on_remove=None) -> list[Record]:
    """Drop every buffered copy whose deadline lies strictly before ``now``."""
    recs: list[Record] = []
    for m in node.buffer.messages():
        if m.deadline < now:
            node.buffer.remove(m.id)
            if on_remove is not None:
                on_remove(m)
            recs.append(Record(RecordKind.EXPIRED, now, m.id, frm=node.sid))
    return recs


@dataclass(frozen=True)
class PlannedTransfer:
    sender: int
    receiver: int
    msg_id: str
    kind: DecisionKind
    share: int | None
    deadline: int
    size: int
    uid: int


def _transfer_key(tr: PlannedTransfer):
    # Deliveries first, then earliest expiry; message id and direction
    # break remaining ties.
    return (
        0 if tr.kind is DecisionKind.DELIVER else 1,
        tr.deadline,
        tr.msg_id,
        tr.sender,
    )


class _Session:
    __slots__ = ("a", "b", "start", "queue", "inflight")

    def __init__(self, a: int, b: int, start: int):
        self.a = a
        self.b = b
        self.start = start
        self.queue: list[PlannedTransfer] = []
        # (uid, transfer, completes_at) while the channel is busy
        self.inflight: tuple[int, PlannedTransfer, int] | None = None


@dataclass
class RunParams:
    """Engine-level parameters for a single run (one matrix cell)."""

    end_time: int
    ttl: int
    warmup: int = 0
    buffer_capacity: int = 2_000_000
    bandwidth: int = 1_375_000
    hop_limit: int | None = None
    analytics: AnalyticsParams = field(default_factory=AnalyticsParams)

    def validate(self) -> None:
        if self.end_time < 0:
            raise ScenarioError("end_time must be >= 0")
        if self.ttl < 1:
            raise ScenarioError("ttl must be >= 1")
        if self.warmup < 0:
            raise ScenarioError("warmup must be >= 0")
        if self.buffer_capacity < 1 or self.bandwidth < 1:
            raise ScenarioError("buffer capacity and bandwidth must be positive")
        if self.hop_limit is not None and self.hop_limit < 1:
            raise ScenarioError("hop limit must be >= 1 or unlimited")


class Simulator:
    """One seeded run of one protocol over one contact/workload pair."""

    def __init__(
        self,
        params: RunParams,
        contacts: ContactSequence,
        workload: list[WorkloadItem],
        policy,
        seed: int = 0,
        *,
        probe_times=(),
        probe_fn=None,
        collect_decisions: bool = False,
        debug_invariants: bool = False,
    ):
        params.validate()
        validate_contacts(contacts)
        validate_workload(workload, contacts.roster)
        self.params = params
        self.policy = policy
        self.seed = seed
        self.ids = sorted(contacts.roster)
        self.index = {sid: i for i, sid in enumerate(self.ids)}
        self.nodes = [
            NodeState(i, sid, contacts.roster[sid], params.buffer_capacity)
            for i, sid in enumerate(self.ids)
        ]
        self.social = SocialState(
            len(self.ids), params.analytics, labels=[n.label for n in self.nodes]
        )
        policy.configure(self.social)
        self.records: list[Record] = []
        self.decisions: list[tuple] | None = [] if collect_decisions else None
        self._debug = debug_invariants
        self._probe_fn = probe_fn

        self._heap: list[tuple[int, int, int, tuple]] = []
        self._seq = 0
        self._uid = 0
        self._sessions: dict[tuple[int, int], _Session] = {}
        self._node_sessions: list[set[tuple[int, int]]] = [set() for _ in self.ids]

        self._budget = policy.initial_copies
        self._lost: dict[str, int] = {}
        self._holders: dict[str, set[int]] = {}
        self._spray_created: set[str] = set()

        for ev in contacts.events:
            if ev.time > params.end_time:
                continue
            a, b = self.index[ev.a], self.index[ev.b]
            if a > b:
                a, b = b, a
            prio = PRIO_UP if ev.up else PRIO_DOWN
            self._push(ev.time, prio, ("up" if ev.up else "down", a, b))
        for item in workload:
            if item.time > params.end_time:
                continue
            self._push(item.time, PRIO_CREATE, ("create", item))
        for t in probe_times:
            if 0 <= t <= params.end_time:
                self._push(t, PRIO_PROBE, ("probe",))

    # -- plumbing -------------------------------------------------------------

    def _push(self, t: int, prio: int, payload: tuple) -> None:
        self._seq += 1
        heapq.heappush(self._heap, (t, prio, self._seq, payload))

    def _on_remove(self, m: Message) -> None:
        if self._budget:
            self._lost[m.id] = self._lost.get(m.id, 0) + m.tokens

    def _sweep(self, node: NodeState, t: int) -> None:
        self.records.extend(expire_ttl(node, t, on_remove=self._on_remove))

    def _insert(self, node: NodeState, m: Message, t: int) -> None:
        self.records.extend(buffer_insert(node, m, t, on_remove=self._on_remove))

    def _log_decision(self, t, carrier, peer, m, d: Decision) -> None:
        if self.decisions is not None:
            self.decisions.append((t, carrier.sid, peer.sid, m.id, d.kind.value, d.share))

    # -- decision surface -----------------------------------------------------

    def _engine_decide(self, carrier: NodeState, peer: NodeState, m: Message, now: int) -> Decision:
        if m.dst == peer.idx:
            return SKIP if m.id in peer.delivered else DELIVER
        if peer.buffer.has(m.id):
            return SKIP
        if self.params.hop_limit is not None and m.hop_count >= self.params.hop_limit:
            return SKIP
        return self.policy.decide(self.social, carrier, peer, m, now)

    def _make_transfer(self, carrier: NodeState, peer: NodeState, m: Message, d: Decision) -> PlannedTransfer:
        self._uid += 1
        return PlannedTransfer(
            carrier.idx, peer.idx, m.id, d.kind, d.share, m.deadline, m.size, self._uid
        )

    def _build_plan(self, na: NodeState, nb: NodeState, t: int) -> list[PlannedTransfer]:
        transfers: list[PlannedTransfer] = []
        for carrier, peer in ((na, nb), (nb, na)):
            for mid in sorted(carrier.buffer.ids()):
                m = carrier.buffer.get(mid)
                d = self._engine_decide(carrier, peer, m, t)
                self._log_decision(t, carrier, peer, m, d)
                if d.kind is not DecisionKind.SKIP:
                    transfers.append(self._make_transfer(carrier, peer, m, d))
        transfers.sort(key=_transfer_key)
        return transfers

    def plan_contact(self, a_sid: str, b_sid: str, t: int) -> list[PlannedTransfer]:
        """Decision pass for a hypothetical contact; no state is modified."""
        na, nb = self.nodes[self.index[a_sid]], self.nodes[self.index[b_sid]]
        return self._build_plan(na, nb, t)

    # -- event handlers --------------------------------------------------------

    def _on_up(self, t: int, a: int, b: int) -> None:
        key = (a, b)
        if key in self._sessions:
            raise ScenarioError(f"duplicate contact up for {self.ids[a]}-{self.ids[b]}")
        na, nb = self.nodes[a], self.nodes[b]
        self._sweep(na, t)
        self._sweep(nb, t)
        self.social.on_contact_start(a, b, t)
        s = _Session(a, b, t)
        self._sessions[key] = s
        self._node_sessions[a].add(key)
        self._node_sessions[b].add(key)
        s.queue = self._build_plan(na, nb, t)
        self._start_next(s, t)

    def _abort_session(self, s: _Session, t: int) -> None:
        if s.inflight is not None:
            tr = s.inflight[1]
            self.records.append(
                Record(RecordKind.ABORTED, t, tr.msg_id, frm=self.ids[tr.sender], to=self.ids[tr.receiver])
            )
            s.inflight = None
        for tr in s.queue:
            self.records.append(
                Record(RecordKind.ABORTED, t, tr.msg_id, frm=self.ids[tr.sender], to=self.ids[tr.receiver])
            )
        s.queue = []

    def _on_down(self, t: int, a: int, b: int) -> None:
        s = self._sessions.pop((a, b))
        self._node_sessions[a].discard((a, b))
        self._node_sessions[b].discard((a, b))
        self._abort_session(s, t)
        self.social.on_contact_end(a, b, s.start, t)

    def _on_create(self, t: int, item: WorkloadItem) -> None:
        src = self.nodes[self.index[item.src]]
        dst_idx = self.index[item.dst]
        self._sweep(src, t)
        tokens = self._budget if self._budget else 1
        m = Message(item.msg_id, src.idx, dst_idx, item.size, t, self.params.ttl, 0, tokens)
        if self._budget:
            self._spray_created.add(m.id)
        self.records.append(Record(RecordKind.CREATED, t, m.id, frm=src.sid, to=item.dst))
        self._insert(src, m, t)
        if src.buffer.has(m.id):
            self._holders.setdefault(m.id, set()).add(src.idx)
            self._offer_to_sessions(src, m, t)

    def _offer_to_sessions(self, node: NodeState, m: Message, t: int, exclude=None) -> None:
        """Evaluate a copy that just appeared at ``node`` against its live contacts."""
        for key in sorted(self._node_sessions[node.idx]):
            if key == exclude:
                continue
            s = self._sessions[key]
            partner = self.nodes[key[0] if key[1] == node.idx else key[1]]
            d = self._engine_decide(node, partner, m, t)
            self._log_decision(t, node, partner, m, d)
            if d.kind is DecisionKind.SKIP:
                continue
            insort(s.queue, self._make_transfer(node, partner, m, d), key=_transfer_key)
            if s.inflight is None:
                self._start_next(s, t)

    def _start_valid(self, tr: PlannedTransfer, t: int) -> bool:
        sender = self.nodes[tr.sender]
        receiver = self.nodes[tr.receiver]
        m = sender.buffer.get(tr.msg_id)
        if m is None:
            return False
        if t + ceil_div(tr.size, self.params.bandwidth) > m.deadline:
            return False
        if tr.kind is DecisionKind.DELIVER:
            return tr.msg_id not in receiver.delivered
        if receiver.buffer.has(tr.msg_id) or tr.msg_id in receiver.delivered:
            return False
        if tr.share is not None and m.tokens < 2:
            return False
        return True

    def _start_next(self, s: _Session, t: int) -> None:
        while s.queue:
            tr = s.queue.pop(0)
            if not self._start_valid(tr, t):
                continue
            completes = t + ceil_div(tr.size, self.params.bandwidth)
            s.inflight = (tr.uid, tr, completes)
            self._push(completes, PRIO_COMPLETE, ("complete", (s.a, s.b), tr.uid))
            return
        s.inflight = None

    def _on_complete(self, t: int, key: tuple[int, int], uid: int) -> None:
        s = self._sessions.get(key)
        if s is None or s.inflight is None or s.inflight[0] != uid:
            return  # contact closed or transfer superseded
        tr = s.inflight[1]
        s.inflight = None
        self._apply_transfer(tr, t, session_key=key)
        self._start_next(s, t)

    def _apply_transfer(self, tr: PlannedTransfer, t: int, session_key=None) -> None:
        sender = self.nodes[tr.sender]
        receiver = self.nodes[tr.receiver]
        self._sweep(sender, t)
        self._sweep(receiver, t)
        m = sender.buffer.get(tr.msg_id)
        if m is None or t > m.deadline:
            return
        if tr.kind is DecisionKind.DELIVER:
            if tr.msg_id in receiver.delivered:
                return
            receiver.delivered.add(m.id)
            self.records.append(Record(RecordKind.RELAY, t, m.id, frm=sender.sid, to=receiver.sid))
            self.records.append(
                Record(
                    RecordKind.DELIVERED,
                    t,
                    m.id,
                    frm=sender.sid,
                    to=receiver.sid,
                    hops=m.hop_count + 1,
                )
            )
            return
        if receiver.buffer.has(m.id) or m.id in receiver.delivered:
            return
        if tr.kind is DecisionKind.MOVE:
            sender.buffer.remove(m.id)
            copy = m.copy_for_relay(tokens=m.tokens)
        elif tr.share is not None:
            share = min(tr.share, m.tokens - 1)
            if share < 1:
                return
            m.tokens -= share
            copy = m.copy_for_relay(tokens=share)
        else:
            copy = m.copy_for_relay(tokens=1)
        self.records.append(Record(RecordKind.RELAY, t, m.id, frm=sender.sid, to=receiver.sid))
        self._insert(receiver, copy, t)
        if receiver.buffer.has(copy.id):
            self._holders.setdefault(copy.id, set()).add(receiver.idx)
            self._offer_to_sessions(receiver, copy, t, exclude=session_key)

    def _on_probe(self, t: int) -> None:
        for node in self.nodes:
            self._sweep(node, t)
        if self._probe_fn is not None:
            self._probe_fn(self, t)

    # -- invariants (debug builds) ----------------------------------------------

    def _check_invariants(self) -> None:
        live: dict[str, int] = {}
        for node in self.nodes:
            used = 0
            for m in node.buffer.messages():
                used += m.size
                if self._budget:
                    assert m.tokens >= 1, f"{m.id}: empty copy in buffer"
                    live[m.id] = live.get(m.id, 0) + m.tokens
            assert used == node.buffer.used <= node.buffer.capacity
        if self._budget:
            for mid in self._spray_created:
                total = live.get(mid, 0) + self._lost.get(mid, 0)
                assert total == self._budget, f"{mid}: token sum {total} != {self._budget}"
            for mid, holders in self._holders.items():
                assert len(holders) <= self._budget, f"{mid}: too many holders"

    # -- main loop ---------------------------------------------------------------

    def run(self) -> RunReport:
        end = self.params.end_time
        while self._heap:
            t, _prio, _seq, payload = heapq.heappop(self._heap)
            if t > end:
                break
            kind = payload[0]
            if kind == "complete":
                self._on_complete(t, payload[1], payload[2])
            elif kind == "down":
                self._on_down(t, payload[1], payload[2])
            elif kind == "create":
                self._on_create(t, payload[1])
            elif kind == "up":
                self._on_up(t, payload[1], payload[2])
            else:
                self._on_probe(t)
            if self._debug:
                self._check_invariants()
        for key in sorted(self._sessions):
            self._abort_session(self._sessions[key], end)
        for node in self.nodes:
            self._sweep(node, end)
        if self._debug:
            self._check_invariants()
        return build_run_report(
            self.records,
            protocol=self.policy.name,
            ttl=self.params.ttl,
            seed=self.seed,
            warmup=self.params.warmup,
            decisions=self.decisions,
        )


def run_scenario(
    params: RunParams,
    contacts: ContactSequence,
    workload: list[WorkloadItem],
    policy,
    seed: int = 0,
    **kwargs,
) -> RunReport:
    """Run one cell; identical inputs give a bit-identical report."""
    return Simulator(params, contacts, workload, policy, seed, **kwargs).run()
