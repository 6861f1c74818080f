"""Decision-function tests for every routing protocol."""

import random

import pytest

from oppsim.protocols import NodeView, make_policy
from oppsim.social import AnalyticsParams, SocialState
from oppsim.types import DecisionKind, Message


def _social(n=8, labels=None, **params):
    return SocialState(n, AnalyticsParams(**params), labels=labels)


def _msg(dst, tokens=1, hop=0):
    return Message("m1", 0, dst, 1000, 0, 86400, hop, tokens)


A = NodeView(0, "g0")
B = NodeView(1, "g1")


class _EgoStub:
    def __init__(self, sim, bet):
        self._sim = sim
        self._bet = bet

    def similarity(self, dst):
        return self._sim

    def betweenness(self):
        return self._bet


# ---------------------------------------------------------------------------
# social-oblivious protocols


def test_epidemic_always_replicates():
    policy = make_policy("epidemic")
    assert policy.decide(_social(), A, B, _msg(dst=5), 0).kind is DecisionKind.REPLICATE


def test_prophet_strictly_better_peer():
    social = _social()
    social.prophet[1].p[5] = 0.6
    social.prophet[0].p[5] = 0.4
    policy = make_policy("prophet")
    assert policy.decide(social, A, B, _msg(5), 0).kind is DecisionKind.REPLICATE


def test_prophet_tie_skips():
    social = _social()
    social.prophet[1].p[5] = 0.4
    social.prophet[0].p[5] = 0.4
    policy = make_policy("prophet")
    assert policy.decide(social, A, B, _msg(5), 0).kind is DecisionKind.SKIP


def test_prophet_both_unknown_skips():
    policy = make_policy("prophet")
    assert policy.decide(_social(), A, B, _msg(5), 0).kind is DecisionKind.SKIP


def test_spray_and_wait_binary_split():
    policy = make_policy("spray_and_wait")
    d = policy.decide(_social(), A, B, _msg(5, tokens=10), 0)
    assert d.kind is DecisionKind.REPLICATE and d.share == 5
    d = policy.decide(_social(), A, B, _msg(5, tokens=3), 0)
    assert d.kind is DecisionKind.REPLICATE and d.share == 1


def test_spray_and_wait_waiting_phase():
    policy = make_policy("spray_and_wait")
    assert policy.decide(_social(), A, B, _msg(5, tokens=1), 0).kind is DecisionKind.SKIP


def test_spray_and_wait_source_mode():
    policy = make_policy("spray_and_wait", {"binary": False})
    d = policy.decide(_social(), A, B, _msg(5, tokens=10), 0)
    assert d.kind is DecisionKind.REPLICATE and d.share == 1


def test_spray_and_focus_spray_phase_is_binary():
    policy = make_policy("spray_and_focus")
    d = policy.decide(_social(), A, B, _msg(5, tokens=10), 0)
    assert d.kind is DecisionKind.REPLICATE and d.share == 5


def test_spray_and_focus_timer_move():
    social = _social()
    now = 10_000
    social.history[0].last_end[5] = now - 5000
    social.history[1].last_end[5] = now - 100
    policy = make_policy("spray_and_focus")
    assert policy.decide(social, A, B, _msg(5, tokens=1), now).kind is DecisionKind.MOVE


def test_spray_and_focus_peer_never_met_skips():
    social = _social()
    social.history[0].last_end[5] = 100
    policy = make_policy("spray_and_focus")
    assert policy.decide(social, A, B, _msg(5, tokens=1), 10_000).kind is DecisionKind.SKIP


def test_spray_and_focus_equal_timers_skip():
    social = _social()
    social.history[0].last_end[5] = 500
    social.history[1].last_end[5] = 500
    policy = make_policy("spray_and_focus")
    assert policy.decide(social, A, B, _msg(5, tokens=1), 10_000).kind is DecisionKind.SKIP


def test_spray_and_focus_threshold_blocks_small_gains():
    social = _social()
    now = 10_000
    social.history[0].last_end[5] = now - 200
    social.history[1].last_end[5] = now - 100
    policy = make_policy("spray_and_focus", {"focus_threshold": 150})
    assert policy.decide(social, A, B, _msg(5, tokens=1), now).kind is DecisionKind.SKIP


def test_ebr_proportional_split():
    social = _social()
    social.rate[1].value = 3.0
    social.rate[0].value = 1.0
    policy = make_policy("ebr")
    d = policy.decide(social, A, B, _msg(5, tokens=10), 0)
    assert d.kind is DecisionKind.REPLICATE and d.share == 7


def test_ebr_zero_peer_rate_skips():
    social = _social()
    social.rate[0].value = 2.0
    policy = make_policy("ebr")
    assert policy.decide(social, A, B, _msg(5, tokens=10), 0).kind is DecisionKind.SKIP


def test_ebr_symmetric_even_split():
    social = _social()
    social.rate[0].value = 2.0
    social.rate[1].value = 2.0
    policy = make_policy("ebr")
    d = policy.decide(social, A, B, _msg(5, tokens=2), 0)
    assert d.kind is DecisionKind.REPLICATE and d.share == 1


def test_ebr_no_information_skips():
    policy = make_policy("ebr")
    assert policy.decide(_social(), A, B, _msg(5, tokens=10), 0).kind is DecisionKind.SKIP


def test_ebr_single_token_waits():
    social = _social()
    social.rate[1].value = 9.0
    policy = make_policy("ebr")
    assert policy.decide(social, A, B, _msg(5, tokens=1), 0).kind is DecisionKind.SKIP


def test_ebr_zero_carrier_rate_moves_whole_budget():
    social = _social()
    social.rate[1].value = 3.0
    policy = make_policy("ebr")
    assert policy.decide(social, A, B, _msg(5, tokens=4), 0).kind is DecisionKind.MOVE


# ---------------------------------------------------------------------------
# social-aware protocols


def test_label_moves_to_destination_group():
    labels = ["g0", "g1", "g1"] + ["gx"] * 5
    social = _social(labels=labels)
    policy = make_policy("label")
    assert policy.decide(social, A, B, _msg(2), 0).kind is DecisionKind.MOVE


def test_label_other_group_skips():
    labels = ["g0", "g9", "g1"] + ["gx"] * 5
    social = _social(labels=labels)
    policy = make_policy("label")
    peer = NodeView(1, "g9")
    assert policy.decide(social, A, peer, _msg(2), 0).kind is DecisionKind.SKIP


def test_label_carrier_already_in_group_skips():
    labels = ["g1", "g1", "g1"] + ["gx"] * 5
    social = _social(labels=labels)
    policy = make_policy("label")
    assert policy.decide(social, NodeView(0, "g1"), B, _msg(2), 0).kind is DecisionKind.SKIP


def test_simbet_relative_utility():
    social = _social()
    social.ego[0] = _EgoStub(sim=0, bet=1.0)
    social.ego[1] = _EgoStub(sim=2, bet=3.0)
    policy = make_policy("simbet")
    # util_peer = .5*(2/2) + .5*(3/4) = 0.875 > 0.125
    assert policy.decide(social, A, B, _msg(5), 0).kind is DecisionKind.MOVE


def test_simbet_identical_utilities_skip():
    social = _social()
    social.ego[0] = _EgoStub(sim=2, bet=3.0)
    social.ego[1] = _EgoStub(sim=2, bet=3.0)
    policy = make_policy("simbet")
    assert policy.decide(social, A, B, _msg(5), 0).kind is DecisionKind.SKIP


def test_simbet_both_zero_skip():
    social = _social()
    social.ego[0] = _EgoStub(sim=0, bet=0.0)
    social.ego[1] = _EgoStub(sim=0, bet=0.0)
    policy = make_policy("simbet")
    assert policy.decide(social, A, B, _msg(5), 0).kind is DecisionKind.SKIP


def _bubble_social():
    social = _social()
    social.communities = [frozenset({1, 2, 5, 6, 7})]  # destination 5's community
    return social


def test_bubble_handoff_into_destination_community():
    social = _bubble_social()
    policy = make_policy("bubble_rap")
    d = policy.decide(social, A, B, _msg(5), 0)  # carrier 0 outside, peer 1 inside
    assert d.kind is DecisionKind.MOVE


def test_bubble_local_rank_inside_community():
    social = _bubble_social()
    w = social.params.centrality_window
    social.history[1].windows = {0: {2, 6}}
    social.history[2].windows = {0: {6}}
    policy = make_policy("bubble_rap")
    carrier, peer = NodeView(2, "g"), NodeView(1, "g")
    d = policy.decide(social, carrier, peer, _msg(5), w)
    assert d.kind is DecisionKind.REPLICATE
    # reversed: peer has the lower local rank -> skip
    d = policy.decide(social, peer, carrier, _msg(5), w)
    assert d.kind is DecisionKind.SKIP


def test_bubble_global_rank_outside_community():
    social = _bubble_social()
    w = social.params.centrality_window
    social.history[0].windows = {0: {3}}
    social.history[3].windows = {0: {0, 4}}
    policy = make_policy("bubble_rap")
    d = policy.decide(social, NodeView(0, "g"), NodeView(3, "g"), _msg(5), w)
    assert d.kind is DecisionKind.REPLICATE  # carrier keeps its copy


def test_peoplerank_compare():
    social = _social()
    social.rank[1].rank = 1.4
    social.rank[0].rank = 0.9
    policy = make_policy("peoplerank")
    assert policy.decide(social, A, B, _msg(5), 0).kind is DecisionKind.REPLICATE
    social.rank[0].rank = 1.4
    assert policy.decide(social, A, B, _msg(5), 0).kind is DecisionKind.SKIP


def _credit_and_fold(social, node, peer, day_seconds, days=1):
    prof = social.profile[node]
    for d in range(days):
        prof.credit(peer, d * 86400, d * 86400 + day_seconds)
    prof.fold_to(days * 86400)


def test_dlife_stronger_weight_wins():
    social = _social()
    _credit_and_fold(social, 1, 5, 600)
    policy = make_policy("dlife")
    assert policy.decide(social, A, B, _msg(5), 86400).kind is DecisionKind.REPLICATE


def test_dlife_importance_breaks_zero_weights():
    social = _social()
    _credit_and_fold(social, 1, 3, 600)  # peer is important via node 3, not dst
    policy = make_policy("dlife")
    assert policy.decide(social, A, B, _msg(5), 86400).kind is DecisionKind.REPLICATE


def test_dlife_full_tie_skips():
    social = _social()
    policy = make_policy("dlife")
    assert policy.decide(social, A, B, _msg(5), 86400).kind is DecisionKind.SKIP


def test_dlife_antisymmetry_on_random_profiles():
    rng = random.Random(17)
    policy = make_policy("dlife")
    for _ in range(40):
        social = _social()
        for node in (0, 1):
            for peer in (3, 4, 5):
                if rng.random() < 0.7:
                    _credit_and_fold(social, node, peer, rng.randint(0, 4000))
        d_ab = policy.decide(social, A, B, _msg(5), 86400).kind
        d_ba = policy.decide(social, B, A, _msg(5), 86400).kind
        assert not (d_ab is DecisionKind.REPLICATE and d_ba is DecisionKind.REPLICATE)


def test_dlifecomm_community_precedence():
    social = _social()
    social.communities = [frozenset({1, 5, 6, 7, 2})]
    _credit_and_fold(social, 0, 5, 3000)  # carrier has the stronger weight
    policy = make_policy("dlifecomm")
    assert policy.decide(social, A, B, _msg(5), 86400).kind is DecisionKind.REPLICATE
    # carrier inside, peer outside: community dominates the weight advantage
    _credit_and_fold(social, 3, 5, 3000)
    assert (
        policy.decide(social, NodeView(1, "g"), NodeView(3, "g"), _msg(5), 86400).kind
        is DecisionKind.SKIP
    )


def test_dlifecomm_falls_back_to_dlife():
    social = _social()
    social.communities = [frozenset({1, 2, 5, 6, 7})]
    policy = make_policy("dlifecomm")
    carrier, peer = NodeView(6, "g"), NodeView(1, "g")
    # both in the destination community, equal (zero) weights and importance
    assert policy.decide(social, carrier, peer, _msg(5), 86400).kind is DecisionKind.SKIP
    # neither in: behaves exactly like dlife on the same state
    _credit_and_fold(social, 3, 5, 600)
    dlife = make_policy("dlife")
    a, b = NodeView(0, "g"), NodeView(3, "g")
    assert (
        policy.decide(social, a, b, _msg(5), 86400).kind
        == dlife.decide(social, a, b, _msg(5), 86400).kind
    )


def test_comparator_antisymmetry_prophet_peoplerank():
    rng = random.Random(29)
    prophet = make_policy("prophet")
    peoplerank = make_policy("peoplerank")
    for _ in range(50):
        social = _social()
        social.prophet[0].p[5] = rng.random()
        social.prophet[1].p[5] = rng.random()
        social.rank[0].rank = rng.uniform(0.2, 3)
        social.rank[1].rank = rng.uniform(0.2, 3)
        for policy in (prophet, peoplerank):
            ab = policy.decide(social, A, B, _msg(5), 0).kind
            ba = policy.decide(social, B, A, _msg(5), 0).kind
            assert not (ab is DecisionKind.REPLICATE and ba is DecisionKind.REPLICATE)
