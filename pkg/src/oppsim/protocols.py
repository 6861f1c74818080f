"""Routing protocols as per-(message, peer) decision functions.

The engine enforces the universal rules first (deliver to the destination,
never send to a holder, honor the hop limit); a policy only ranks the
carrier against the peer. Every comparison is strict: ties mean skip, which
also prevents copies ping-ponging between equally ranked nodes.
"""

from __future__ import annotations

from dataclasses import dataclass

from .social import SocialState, simbet_utilities
from .types import Decision, DecisionKind, MOVE, REPLICATE, SKIP


@dataclass
class NodeView:
    """What a policy may know about a node at decision time."""

    idx: int
    label: str


class Policy:
    """Base protocol policy; subclasses implement ``decide``."""

    name = "base"
    # Replication budget stamped on every created message (None: unlimited).
    initial_copies: int | None = None

    def configure(self, social: SocialState) -> None:
        """Push protocol constants into the shared analytics state."""

    def decide(
        self, social: SocialState, carrier: NodeView, peer: NodeView, m, now: int
    ) -> Decision:
        raise NotImplementedError


class Epidemic(Policy):
    name = "epidemic"

    def decide(self, social, carrier, peer, m, now):
        return REPLICATE


class Prophet(Policy):
    name = "prophet"

    def __init__(self, p_init=0.75, beta=0.25, gamma=0.98, aging_interval=30):
        self.p_init = p_init
        self.beta = beta
        self.gamma = gamma
        self.aging_interval = aging_interval

    def configure(self, social):
        social.configure_prophet(self.p_init, self.beta, self.gamma, self.aging_interval)

    def decide(self, social, carrier, peer, m, now):
        if social.predictability(peer.idx, m.dst, now) > social.predictability(
            carrier.idx, m.dst, now
        ):
            return REPLICATE
        return SKIP


class SprayAndWait(Policy):
    name = "spray_and_wait"

    def __init__(self, copies=10, binary=True):
        self.initial_copies = copies
        self.binary = binary

    def decide(self, social, carrier, peer, m, now):
        if m.tokens <= 1:
            return SKIP
        share = m.tokens // 2 if self.binary else 1
        return Decision(DecisionKind.REPLICATE, share)


class SprayAndFocus(Policy):
    name = "spray_and_focus"

    def __init__(self, copies=10, focus_threshold=0):
        self.initial_copies = copies
        self.focus_threshold = focus_threshold

    def decide(self, social, carrier, peer, m, now):
        if m.tokens > 1:
            return Decision(DecisionKind.REPLICATE, m.tokens // 2)
        peer_seen = social.last_seen_end(peer.idx, m.dst)
        if peer_seen is None:
            return SKIP
        carrier_seen = social.last_seen_end(carrier.idx, m.dst)
        if carrier_seen is None:
            return MOVE
        if (now - carrier_seen) - (now - peer_seen) > self.focus_threshold:
            return MOVE
        return SKIP


class Ebr(Policy):
    name = "ebr"

    def __init__(self, copies=10, window=60, alpha=0.85):
        self.initial_copies = copies
        self.window = window
        self.alpha = alpha

    def configure(self, social):
        social.configure_rate(self.window, self.alpha)

    def decide(self, social, carrier, peer, m, now):
        if m.tokens <= 1:
            return SKIP
        ev_peer = social.encounter_value(peer.idx, now)
        ev_carrier = social.encounter_value(carrier.idx, now)
        total = ev_peer + ev_carrier
        if total <= 0.0:
            return SKIP
        share = int(m.tokens * (ev_peer / total))
        if share < 1:
            return SKIP
        if share >= m.tokens:
            # Carrier rates zero: the whole budget crosses and the carrier
            # would keep an empty copy, so hand the message over entirely.
            return MOVE
        return Decision(DecisionKind.REPLICATE, share)


class Label(Policy):
    name = "label"

    def decide(self, social, carrier, peer, m, now):
        dst_label = social.labels[m.dst]
        if peer.label == dst_label and carrier.label != dst_label:
            return MOVE
        return SKIP


class SimBet(Policy):
    name = "simbet"

    def __init__(self, similarity_weight=0.5, betweenness_weight=0.5):
        self.similarity_weight = similarity_weight
        self.betweenness_weight = betweenness_weight

    def decide(self, social, carrier, peer, m, now):
        sim_c, bet_c, sim_p, bet_p = simbet_utilities(
            social.ego[carrier.idx], social.ego[peer.idx], m.dst
        )
        sim_total = sim_c + sim_p
        bet_total = bet_c + bet_p
        util_p = 0.0
        util_c = 0.0
        if sim_total > 0:
            util_p += self.similarity_weight * (sim_p / sim_total)
            util_c += self.similarity_weight * (sim_c / sim_total)
        if bet_total > 0:
            util_p += self.betweenness_weight * (bet_p / bet_total)
            util_c += self.betweenness_weight * (bet_c / bet_total)
        if util_p > util_c:
            return MOVE
        return SKIP


class BubbleRap(Policy):
    name = "bubble_rap"

    def decide(self, social, carrier, peer, m, now):
        carrier_in = social.shares_community(carrier.idx, m.dst)
        peer_in = social.shares_community(peer.idx, m.dst)
        if carrier_in:
            if peer_in and social.local_rank(peer.idx, m.dst, now) > social.local_rank(
                carrier.idx, m.dst, now
            ):
                return REPLICATE
            return SKIP
        if peer_in:
            # Hand-off into the destination's community: the carrier drops
            # its copy to stop further spreading outside.
            return MOVE
        if social.global_rank(peer.idx, now) > social.global_rank(carrier.idx, now):
            return REPLICATE
        return SKIP


class PeopleRank(Policy):
    name = "peoplerank"

    def __init__(self, damping=0.8):
        self.damping = damping

    def configure(self, social):
        social.configure_rank(self.damping)

    def decide(self, social, carrier, peer, m, now):
        if social.people_rank(peer.idx) > social.people_rank(carrier.idx):
            return REPLICATE
        return SKIP


class DLife(Policy):
    name = "dlife"

    def decide(self, social, carrier, peer, m, now):
        w_peer = social.weight(peer.idx, m.dst, now)
        w_carrier = social.weight(carrier.idx, m.dst, now)
        cmp = w_peer.cmp(w_carrier)
        if cmp > 0:
            return REPLICATE
        if cmp == 0:
            if social.importance(peer.idx, now).cmp(social.importance(carrier.idx, now)) > 0:
                return REPLICATE
        return SKIP


class DLifeComm(DLife):
    name = "dlifecomm"

    def decide(self, social, carrier, peer, m, now):
        peer_in = social.shares_community(peer.idx, m.dst)
        carrier_in = social.shares_community(carrier.idx, m.dst)
        if peer_in and not carrier_in:
            return REPLICATE
        if carrier_in and not peer_in:
            return SKIP
        return super().decide(social, carrier, peer, m, now)


PROTOCOLS = {
    cls.name: cls
    for cls in (
        Epidemic,
        Prophet,
        SprayAndWait,
        SprayAndFocus,
        Ebr,
        Label,
        SimBet,
        BubbleRap,
        PeopleRank,
        DLife,
        DLifeComm,
    )
}


def make_policy(name: str, params: dict | None = None) -> Policy:
    try:
        cls = PROTOCOLS[name]
    except KeyError:
        raise ValueError(f"unknown protocol {name!r}") from None
    return cls(**(params or {}))
