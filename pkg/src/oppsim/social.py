"""Per-node encounter analytics and the shared social substrate.

Everything the routing protocols consume lives here: contact counters and
timers, delivery predictabilities, encounter rates, daily-sample contact
weights, ego networks, the familiar graph with its k-clique communities,
cumulative-window centralities and distributed ranks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import networkx as nx

from .types import ceil_div

DAY = 86400


@dataclass
class AnalyticsParams:
    familiar_threshold: int = 700
    clique_k: int = 5
    centrality_window: int = 21600
    daily_samples: int = 24
    # Integer factor applied to every duration booked into the daily-sample
    # profile; exists so duration-scaling experiments stay exact.
    duration_scale: int = 1


# ---------------------------------------------------------------------------
# encounter history: counters, timers, per-window peer sets


class EncounterHistory:
    """Contact counters, last-encounter timers and window peer sets for one node."""

    __slots__ = (
        "window_len",
        "counts",
        "totals",
        "last_end",
        "active",
        "windows",
        "_version",
        "_rate_cache",
        "_rate_cache_key",
    )

    def __init__(self, window_len: int):
        self.window_len = window_len
        self.counts: dict[int, int] = {}
        self.totals: dict[int, int] = {}
        self.last_end: dict[int, int] = {}
        # peer -> [contact_start, credited_until]; credited_until marks how far
        # the ongoing contact has already been booked into the daily profile.
        self.active: dict[int, list[int]] = {}
        self.windows: dict[int, set[int]] = {}
        self._version = 0
        self._rate_cache: dict = {}
        self._rate_cache_key: tuple = (-1, -1)

    def _book_windows(self, peer: int, lo: int, hi: int) -> None:
        if hi <= lo:
            return
        w = self.window_len
        for g in range(lo // w, ceil_div(hi, w)):
            self.windows.setdefault(g, set()).add(peer)

    def on_contact_start(self, peer: int, t: int) -> None:
        self.active[peer] = [t, t]
        self.windows.setdefault(t // self.window_len, set()).add(peer)
        self._version += 1

    def on_contact_end(self, peer: int, start: int, end: int) -> None:
        self._version += 1
        self.active.pop(peer, None)
        prev_end = self.last_end.get(peer)
        if prev_end is not None and start < prev_end:
            # Overlapping report of the same encounter: merge, count once.
            credit = max(0, end - prev_end)
            if credit:
                self.totals[peer] = self.totals.get(peer, 0) + credit
        else:
            self.counts[peer] = self.counts.get(peer, 0) + 1
            self.totals[peer] = self.totals.get(peer, 0) + (end - start)
        if end > self.last_end.get(peer, -1):
            self.last_end[peer] = end
        self._book_windows(peer, start, end)

    def book_active_windows(self, now: int) -> None:
        for peer, (start, _credited) in self.active.items():
            self._book_windows(peer, start, now)

    def unique_contact_rate(self, now: int, scope: set[int] | None = None) -> float:
        """Average unique peers contacted per completed window.

        ``scope`` restricts the peers counted (community-local rank).
        Memoized per (time, bookings) state: protocols query the same rank
        for many messages within one contact.
        """
        completed = now // self.window_len
        if completed <= 0:
            return 0.0
        key = (now, self._version)
        if key != self._rate_cache_key:
            self._rate_cache.clear()
            self._rate_cache_key = key
        scope_key = None if scope is None else tuple(sorted(scope))
        cached = self._rate_cache.get(scope_key)
        if cached is not None:
            return cached
        self.book_active_windows(now)
        total = 0
        for g, peers in self.windows.items():
            if g >= completed:
                continue
            if scope is None:
                total += len(peers)
            else:
                total += len(peers & scope)
        result = total / completed
        self._rate_cache[scope_key] = result
        return result


def record_contact(
    history: EncounterHistory,
    peer: int,
    start: int,
    end: int,
    profile: "TecdProfile | None" = None,
) -> None:
    """Register one finished contact with ``peer`` spanning [start, end]."""
    if start >= end:
        raise ValueError("contact must have positive duration")
    history.on_contact_end(peer, start, end)
    if profile is not None:
        profile.credit(peer, start, end)


def cumulative_window_centrality(
    history: EncounterHistory, now: int, scope: set[int] | None = None
) -> float:
    return history.unique_contact_rate(now, scope)


# ---------------------------------------------------------------------------
# PROPHET delivery predictability


class ProphetTable:
    """Per-destination delivery predictability with aging and transitivity."""

    __slots__ = ("p", "last_age", "p_init", "beta", "gamma", "aging_interval")

    def __init__(
        self,
        p_init: float = 0.75,
        beta: float = 0.25,
        gamma: float = 0.98,
        aging_interval: int = 30,
    ):
        self.p: dict[int, float] = {}
        self.last_age = 0
        self.p_init = p_init
        self.beta = beta
        self.gamma = gamma
        self.aging_interval = aging_interval

    def age(self, now: int) -> None:
        k = (now - self.last_age) // self.aging_interval
        if k <= 0:
            return
        decay = self.gamma**k
        for peer in self.p:
            self.p[peer] *= decay
        self.last_age += k * self.aging_interval

    def on_meet(self, peer: int, peer_table: dict[int, float], self_id: int) -> None:
        """Direct update for ``peer`` plus transitive updates from its table."""
        p_peer = self.p.get(peer, 0.0)
        p_peer = p_peer + (1.0 - p_peer) * self.p_init
        self.p[peer] = p_peer
        for third, p_third in peer_table.items():
            if third == self_id or third == peer:
                continue
            candidate = p_peer * p_third * self.beta
            if candidate > self.p.get(third, 0.0):
                self.p[third] = candidate

    def predictability(self, dst: int) -> float:
        return self.p.get(dst, 0.0)


# ---------------------------------------------------------------------------
# encounter rate (windowed counter with exponential smoothing)


class EncounterRate:
    """Smoothed per-window encounter count driving proportional token splits."""

    __slots__ = ("value", "window_count", "last_window", "window_len", "alpha")

    def __init__(self, window_len: int = 60, alpha: float = 0.85):
        self.value = 0.0
        self.window_count = 0
        self.last_window = 0
        self.window_len = window_len
        self.alpha = alpha

    def tick(self, now: int) -> None:
        w = now // self.window_len
        k = w - self.last_window
        if k <= 0:
            return
        self.value = self.alpha * self.window_count + (1.0 - self.alpha) * self.value
        if k > 1:
            self.value *= (1.0 - self.alpha) ** (k - 1)
        self.window_count = 0
        self.last_window = w

    def on_meet(self, now: int) -> None:
        self.tick(now)
        self.window_count += 1


# ---------------------------------------------------------------------------
# daily-sample contact duration profile (exact integer arithmetic)


@dataclass(frozen=True)
class Rational:
    num: int
    den: int

    def __float__(self) -> float:
        return self.num / self.den

    def cmp(self, other: "Rational") -> int:
        lhs = self.num * other.den
        rhs = other.num * self.den
        return (lhs > rhs) - (lhs < rhs)


class TecdProfile:
    """Average contact duration per daily sample, kept as exact integers.

    Each completed sample folds the durations credited to it into a running
    per-slot mean stored as (sum, fold count). Weights toward a peer are the
    linearly decaying combination of the next S slot means starting at the
    current one; importance is the sum of weights over all peers. Keeping
    sums integral makes weight comparisons exact and makes uniform duration
    scaling commute with every update.
    """

    __slots__ = (
        "samples",
        "sample_len",
        "scale",
        "sums",
        "days",
        "pending",
        "folded",
        "_weight_cache",
    )

    def __init__(self, samples: int = 24, scale: int = 1, day_len: int = DAY):
        if day_len % samples:
            raise ValueError("day length must be divisible by the sample count")
        self.samples = samples
        self.sample_len = day_len // samples
        self.scale = scale
        self.sums: dict[int, list[int]] = {}
        self.days = [0] * samples
        self.pending: dict[int, dict[int, int]] = {}
        self.folded = 0
        self._weight_cache: dict[tuple[int, int], Rational] = {}

    def credit(self, peer: int, lo: int, hi: int) -> None:
        """Book contact time [lo, hi) with ``peer`` into per-sample buckets."""
        sl = self.sample_len
        while lo < hi:
            g = lo // sl
            seg_end = min(hi, (g + 1) * sl)
            bucket = self.pending.setdefault(g, {})
            bucket[peer] = bucket.get(peer, 0) + (seg_end - lo) * self.scale
            lo = seg_end

    def fold_to(self, now: int, active: dict[int, list[int]] | None = None) -> None:
        """Close every sample that ended at or before ``now``.

        ``active`` is the owner's ongoing-contact map; elapsed portions of
        ongoing contacts are credited up to each boundary as it folds.
        """
        target = now // self.sample_len
        if target <= self.folded:
            return
        while self.folded < target:
            boundary = (self.folded + 1) * self.sample_len
            if active:
                for peer in sorted(active):
                    entry = active[peer]
                    lo = max(entry[0], entry[1])
                    if lo < boundary:
                        self.credit(peer, lo, boundary)
                        entry[1] = boundary
            bucket = self.pending.pop(self.folded, {})
            slot = self.folded % self.samples
            for peer, dur in bucket.items():
                row = self.sums.get(peer)
                if row is None:
                    row = [0] * self.samples
                    self.sums[peer] = row
                row[slot] += dur
            self.days[slot] += 1
            self.folded += 1
        self._weight_cache.clear()

    def _slot_now(self, now: int) -> int:
        return (now // self.sample_len) % self.samples

    def weight(self, peer: int, now: int) -> Rational:
        """Social strength toward ``peer`` at the sample containing ``now``."""
        s_now = self._slot_now(now)
        key = (peer, s_now)
        cached = self._weight_cache.get(key)
        if cached is not None:
            return cached
        S = self.samples
        T = S * (S + 1) // 2
        denoms = {d for d in self.days if d > 0}
        m = math.lcm(*denoms) if denoms else 1
        num = 0
        row = self.sums.get(peer)
        if row is not None:
            for j in range(1, S + 1):
                slot = (s_now + j - 1) % S
                d = self.days[slot]
                if d == 0:
                    continue
                num += row[slot] * (S - j + 1) * (m // d)
        result = Rational(num, T * m)
        self._weight_cache[key] = result
        return result

    def importance(self, now: int) -> Rational:
        """Sum of weights over every peer ever credited."""
        t = self.samples * (self.samples + 1) // 2
        denoms = {d for d in self.days if d > 0}
        m = math.lcm(*denoms) if denoms else 1
        num = 0
        for peer in sorted(self.sums):
            num += self.weight(peer, now).num
        return Rational(num, t * m)


# ---------------------------------------------------------------------------
# distributed rank (gossiped page-rank style fixed point)


class RankState:
    """Rank driven by last-received (rank, degree) pairs of social neighbors."""

    __slots__ = ("damping", "rank", "stored")

    def __init__(self, damping: float = 0.8):
        self.damping = damping
        self.rank = 1.0 - damping
        self.stored: dict[int, tuple[float, int]] = {}

    def on_meet(self, peer: int, peer_rank: float, peer_degree: int) -> None:
        """Update after meeting a social neighbor that reported its values."""
        if peer_degree < 1:
            raise ValueError("social neighbor must report degree >= 1")
        self.stored[peer] = (peer_rank, peer_degree)
        acc = 0.0
        for p in sorted(self.stored):
            r, d = self.stored[p]
            acc += r / d
        self.rank = (1.0 - self.damping) + self.damping * acc


def peoplerank_on_meet(
    state: RankState, peer: int, peer_rank: float, peer_degree: int, is_social_neighbor: bool
) -> None:
    if is_social_neighbor:
        state.on_meet(peer, peer_rank, peer_degree)


# ---------------------------------------------------------------------------
# ego network (adjacency knowledge bounded to reported contacts)


class EgoNetwork:
    """A node's view of who-has-met-whom, merged from peers' contact lists."""

    __slots__ = ("self_id", "adj", "_bet_cache", "_version")

    def __init__(self, self_id: int):
        self.self_id = self_id
        self.adj: dict[int, set[int]] = {self_id: set()}
        self._bet_cache: float | None = None
        self._version = 0

    @property
    def contacts(self) -> set[int]:
        return self.adj[self.self_id]

    def _link(self, a: int, b: int) -> None:
        self.adj.setdefault(a, set()).add(b)
        self.adj.setdefault(b, set()).add(a)

    def on_meet(self, peer: int, peer_contacts: set[int]) -> None:
        """Record the direct contact and the peer's reported contact list."""
        self._link(self.self_id, peer)
        for x in peer_contacts:
            if x != self.self_id:
                self._link(peer, x)
        self._bet_cache = None
        self._version += 1

    def betweenness(self) -> float:
        """Sum of 1/(common neighbors) over known non-adjacent pairs.

        Pairs are unordered, exclude the owner, and only pairs bridged by at
        least one shared neighbor contribute.
        """
        if self._bet_cache is not None:
            return self._bet_cache
        nodes = sorted(n for n in self.adj if n != self.self_id)
        total = 0.0
        for i, u in enumerate(nodes):
            nu = self.adj[u]
            for v in nodes[i + 1 :]:
                if v in nu:
                    continue
                common = len(nu & self.adj[v])
                if common:
                    total += 1.0 / common
        self._bet_cache = total
        return total

    def similarity(self, dst: int) -> int:
        """Count of common neighbors with ``dst``; 0 when dst is unknown."""
        if dst not in self.adj:
            return 0
        return len(self.adj[self.self_id] & self.adj[dst])


def simbet_utilities(
    ego_self: EgoNetwork, ego_peer: EgoNetwork, dst: int
) -> tuple[int, float, int, float]:
    """(similarity, betweenness) for the carrier and the peer toward ``dst``."""
    return (
        ego_self.similarity(dst),
        ego_self.betweenness(),
        ego_peer.similarity(dst),
        ego_peer.betweenness(),
    )


# ---------------------------------------------------------------------------
# k-clique percolation communities


def kclique_communities(adj: dict[int, set[int]], k: int) -> list[frozenset[int]]:
    """Communities formed by chains of k-cliques overlapping in k-1 nodes.

    Implemented over maximal cliques: every k-clique lies inside a maximal
    clique of size >= k, and two maximal cliques sharing >= k-1 nodes chain
    their k-cliques together.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    g = nx.Graph()
    for node, nbrs in adj.items():
        g.add_node(node)
        for o in nbrs:
            g.add_edge(node, o)
    cliques = [frozenset(c) for c in nx.find_cliques(g) if len(c) >= k]
    if not cliques:
        return []
    parent = list(range(len(cliques)))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(len(cliques)):
        for j in range(i + 1, len(cliques)):
            if len(cliques[i] & cliques[j]) >= k - 1:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[rj] = ri
    groups: dict[int, set[int]] = {}
    for i, c in enumerate(cliques):
        groups.setdefault(find(i), set()).update(c)
    return sorted((frozenset(m) for m in groups.values()), key=lambda c: sorted(c))


# ---------------------------------------------------------------------------
# shared per-run substrate


class SocialState:
    """All encounter-derived state for one run.

    Per-node components are trained uniformly on every contact so any
    protocol (and the debug dump) can read them; pairwise totals feed one
    shared familiar graph from which communities are recomputed whenever an
    edge appears.
    """

    def __init__(self, n_nodes: int, params: AnalyticsParams, labels: list[str] | None = None):
        self.params = params
        self.n = n_nodes
        self.labels = list(labels) if labels is not None else [""] * n_nodes
        w = params.centrality_window
        self.history = [EncounterHistory(w) for _ in range(n_nodes)]
        self.prophet = [ProphetTable() for _ in range(n_nodes)]
        self.rate = [EncounterRate() for _ in range(n_nodes)]
        self.profile = [
            TecdProfile(params.daily_samples, params.duration_scale)
            for _ in range(n_nodes)
        ]
        self.rank = [RankState() for _ in range(n_nodes)]
        self.ego = [EgoNetwork(i) for i in range(n_nodes)]
        self.pair_seconds: dict[tuple[int, int], int] = {}
        self.familiar: list[set[int]] = [set() for _ in range(n_nodes)]
        self.communities: list[frozenset[int]] = []
        self._members_cache: dict[int, frozenset[int]] = {}

    def configure_prophet(self, p_init: float, beta: float, gamma: float, aging: int) -> None:
        for t in self.prophet:
            t.p_init, t.beta, t.gamma, t.aging_interval = p_init, beta, gamma, aging

    def configure_rate(self, window: int, alpha: float) -> None:
        for r in self.rate:
            r.window_len, r.alpha = window, alpha

    def configure_rank(self, damping: float) -> None:
        for r in self.rank:
            r.damping = damping
            r.rank = 1.0 - damping

    # -- contact lifecycle ---------------------------------------------------

    def on_contact_start(self, a: int, b: int, t: int) -> None:
        for x in (a, b):
            self.profile[x].fold_to(t, self.history[x].active)
        self.history[a].on_contact_start(b, t)
        self.history[b].on_contact_start(a, t)
        for x in (a, b):
            self.rate[x].on_meet(t)
        for x in (a, b):
            self.prophet[x].age(t)
        snap_a = dict(self.prophet[a].p)
        snap_b = dict(self.prophet[b].p)
        self.prophet[a].on_meet(b, snap_b, a)
        self.prophet[b].on_meet(a, snap_a, b)
        if b in self.familiar[a]:
            ra, da = self.rank[a].rank, max(1, len(self.familiar[a]))
            rb, db = self.rank[b].rank, max(1, len(self.familiar[b]))
            self.rank[a].on_meet(b, rb, db)
            self.rank[b].on_meet(a, ra, da)
        contacts_a = set(self.ego[a].contacts)
        contacts_b = set(self.ego[b].contacts)
        self.ego[a].on_meet(b, contacts_b)
        self.ego[b].on_meet(a, contacts_a)

    def on_contact_end(self, a: int, b: int, start: int, end: int) -> None:
        for x, peer in ((a, b), (b, a)):
            profile = self.profile[x]
            hist = self.history[x]
            profile.fold_to(end, hist.active)
            entry = hist.active.get(peer)
            if entry is not None:
                lo = max(entry[0], entry[1])
                if lo < end:
                    profile.credit(peer, lo, end)
            hist.on_contact_end(peer, start, end)
        key = (a, b) if a < b else (b, a)
        total = self.pair_seconds.get(key, 0) + (end - start)
        self.pair_seconds[key] = total
        if total >= self.params.familiar_threshold and b not in self.familiar[a]:
            self.familiar[a].add(b)
            self.familiar[b].add(a)
            self._recompute_communities()

    def _recompute_communities(self) -> None:
        adj = {i: nbrs for i, nbrs in enumerate(self.familiar) if nbrs}
        self.communities = kclique_communities(adj, self.params.clique_k)
        self._members_cache.clear()

    # -- protocol-facing accessors --------------------------------------------

    def predictability(self, node: int, dst: int, now: int) -> float:
        table = self.prophet[node]
        table.age(now)
        return table.predictability(dst)

    def encounter_value(self, node: int, now: int) -> float:
        r = self.rate[node]
        r.tick(now)
        return r.value

    def last_seen_end(self, node: int, dst: int) -> int | None:
        return self.history[node].last_end.get(dst)

    def weight(self, node: int, dst: int, now: int) -> Rational:
        p = self.profile[node]
        p.fold_to(now, self.history[node].active)
        return p.weight(dst, now)

    def importance(self, node: int, now: int) -> Rational:
        p = self.profile[node]
        p.fold_to(now, self.history[node].active)
        return p.importance(now)

    def community_members(self, dst: int) -> frozenset[int]:
        """Union of the communities containing ``dst`` (at least {dst})."""
        cached = self._members_cache.get(dst)
        if cached is not None:
            return cached
        members: set[int] = {dst}
        for c in self.communities:
            if dst in c:
                members |= c
        result = frozenset(members)
        self._members_cache[dst] = result
        return result

    def shares_community(self, node: int, dst: int) -> bool:
        if node == dst:
            return True
        for c in self.communities:
            if dst in c and node in c:
                return True
        return False

    def global_rank(self, node: int, now: int) -> float:
        return self.history[node].unique_contact_rate(now)

    def local_rank(self, node: int, dst: int, now: int) -> float:
        scope = set(self.community_members(dst))
        return self.history[node].unique_contact_rate(now, scope)

    def people_rank(self, node: int) -> float:
        return self.rank[node].rank

    def snapshot(self, node: int, now: int) -> dict[str, object]:
        """Debug view of one node's social state (for dump subcommand/tests)."""
        comms = [sorted(c) for c in self.communities if node in c]
        weights = {}
        p = self.profile[node]
        p.fold_to(now, self.history[node].active)
        for peer in sorted(p.sums):
            weights[peer] = float(p.weight(peer, now))
        return {
            "communities": comms,
            "global_centrality": self.global_rank(node, now),
            "people_rank": self.people_rank(node),
            "importance": float(self.importance(node, now)),
            "weights": weights,
            "predictability": dict(sorted(self.prophet[node].p.items())),
            "encounter_value": self.encounter_value(node, now),
        }
