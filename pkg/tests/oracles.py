"""Independent reference implementations used to check the simulator.

Everything here is deliberately brute force and shares no code with the
package: exhaustive clique enumeration, dense matrix arithmetic, linear
solves and earliest-arrival search over raw contact intervals.
"""

from __future__ import annotations

import itertools
import random

import numpy as np


def brute_force_percolation(adj: dict[int, set[int]], k: int) -> list[frozenset[int]]:
    """Enumerate every k-subset that is a clique, then chain those sharing
    k-1 nodes with a BFS; a community is the union of one chain."""
    nodes = sorted(adj)
    kcliques = []
    for combo in itertools.combinations(nodes, k):
        if all(b in adj[a] for a, b in itertools.combinations(combo, 2)):
            kcliques.append(frozenset(combo))
    unvisited = set(range(len(kcliques)))
    communities = []
    while unvisited:
        start = min(unvisited)
        frontier = [start]
        unvisited.remove(start)
        members = set(kcliques[start])
        while frontier:
            cur = frontier.pop()
            linked = [
                i
                for i in unvisited
                if len(kcliques[cur] & kcliques[i]) >= k - 1
            ]
            for i in linked:
                unvisited.remove(i)
                frontier.append(i)
                members |= kcliques[i]
        communities.append(frozenset(members))
    return sorted(communities, key=lambda c: sorted(c))


def matrix_ego_betweenness(nodes: list[int], adj: dict[int, set[int]], self_id: int) -> float:
    """Sum of 1/[A^2](i,j) over non-adjacent known pairs, via dense numpy."""
    order = sorted(nodes)
    n = len(order)
    pos = {v: i for i, v in enumerate(order)}
    a = np.zeros((n, n))
    for u in order:
        for v in adj.get(u, ()):
            if v in pos:
                a[pos[u], pos[v]] = 1.0
                a[pos[v], pos[u]] = 1.0
    a2 = a @ a
    total = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            if order[i] == self_id or order[j] == self_id:
                continue
            if a[i, j] == 0 and a2[i, j] > 0:
                total += 1.0 / a2[i, j]
    return total


def solve_rank_fixed_point(adj: dict[int, set[int]], damping: float) -> dict[int, float]:
    """Exact fixed point of r = (1-d)*1 + d*A*D^-1*r via a linear solve."""
    order = sorted(adj)
    n = len(order)
    pos = {v: i for i, v in enumerate(order)}
    m = np.zeros((n, n))
    for v in order:
        for u in adj[v]:
            deg = len(adj[u])
            if deg:
                m[pos[v], pos[u]] = damping / deg
    r = np.linalg.solve(np.eye(n) - m, np.full(n, 1.0 - damping))
    return {v: float(r[pos[v]]) for v in order}


def earliest_arrival(
    intervals: list[tuple[str, str, int, int]],
    src: str,
    t0: int,
    hop_seconds: int,
) -> dict[str, int]:
    """Earliest delivery time at every node for a message existing at ``src``
    from ``t0``, where each hop occupies ``hop_seconds`` inside a contact
    interval. Relaxation to fixpoint over raw (a, b, start, end) intervals."""
    best: dict[str, int] = {src: t0}
    changed = True
    while changed:
        changed = False
        for a, b, start, end in intervals:
            for u, v in ((a, b), (b, a)):
                if u not in best:
                    continue
                begin = max(start, best[u])
                arrive = begin + hop_seconds
                if arrive <= end and arrive < best.get(v, arrive + 1):
                    best[v] = arrive
                    changed = True
    return best


def random_contact_intervals(
    rng: random.Random,
    node_ids: list[str],
    duration: int,
    mean_contacts_per_pair: float = 2.0,
    min_len: int = 60,
    max_len: int = 300,
) -> list[tuple[str, str, int, int]]:
    """Per-pair alternating gap/contact timelines; never overlapping per pair."""
    intervals = []
    for i in range(len(node_ids)):
        for j in range(i + 1, len(node_ids)):
            t = rng.randint(0, duration // 4)
            expected = max(1, int(mean_contacts_per_pair))
            for _ in range(rng.randint(0, expected * 2)):
                start = t + rng.randint(30, duration // 4)
                length = rng.randint(min_len, max_len)
                end = start + length
                if end >= duration:
                    break
                intervals.append((node_ids[i], node_ids[j], start, end))
                t = end + 1
    intervals.sort(key=lambda iv: (iv[2], iv[3], iv[0], iv[1]))
    return intervals


def intervals_to_events(intervals):
    from oppsim.contacts import ContactEvent

    events = []
    for a, b, start, end in intervals:
        events.append(ContactEvent(start, True, a, b))
        events.append(ContactEvent(end, False, a, b))
    events.sort(key=lambda e: (e.time, e.up, e.a, e.b))
    return events
