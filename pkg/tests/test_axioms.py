"""Fairness and efficiency checkers on known distributions."""

from fractions import Fraction

import pytest

from fairdiv import (
    Allocation,
    AllocationDistribution,
    BidProfile,
    Instance,
    balanced_like,
    check_befp,
    check_efa,
    check_efp,
    check_envy_bounded,
    check_pea,
    check_pep,
    check_prefix_efa,
    check_sefa,
    check_sefp,
    efa_forced_marginals,
    ex_ante_equivalent,
    ex_post_equivalent,
    like,
    marginals,
    maximum_like,
    orp,
    osd,
    pareto_like,
)

SWAP = Instance(((1, 2), (2, 1)))


def test_like_is_fair_ex_ante_but_not_ex_post():
    dist = like().run(SWAP)
    assert check_efa(dist).holds
    assert check_sefa(dist).holds
    v = check_efp(dist)
    assert not v.holds
    assert v.witness is not None and v.margin < 0


def test_sefa_holds_with_equality_for_like():
    # every agent's restricted expectation exactly matches the rival's
    dist = like().run(SWAP)
    assert check_sefa(dist).margin == 0


def test_osd_is_efficient_but_envied():
    dist = osd().run(SWAP)
    assert check_pea(dist).holds
    assert check_pea(dist).margin == 0
    assert check_pep(dist).holds
    assert not check_efa(dist).holds


def test_like_lottery_is_dominated_on_the_swap_instance():
    dist = like().run(SWAP)
    v = check_pea(dist)
    assert not v.holds
    assert v.margin == 1  # total utility 3 vs the achievable 4
    assert v.witness is not None
    w = check_pep(dist)
    assert not w.holds
    assert w.witness.allocation.owners == (0, 1)
    assert w.witness.dominator.owners == (1, 0)


def test_pareto_like_is_efficient_ex_post_only():
    dist = pareto_like().run(SWAP)
    assert check_pep(dist).holds
    assert not check_pea(dist).holds


def test_envy_bound_on_non_binary_utilities():
    dist = balanced_like().run(SWAP)
    with pytest.raises(ValueError):
        check_befp(dist)
    v = check_envy_bounded(dist, bound=1)
    assert v.holds and v.margin == 0
    assert not check_envy_bounded(dist, bound=Fraction(1, 2)).holds


def test_befp_on_binary_instances():
    inst = Instance(((1, 1, 1), (1, 1, 1)))
    assert check_befp(balanced_like().run(inst)).holds
    v = check_befp(like().run(inst))  # one agent can take all three items
    assert not v.holds
    assert v.witness.allocation is not None


def test_envy_verdicts_carry_one_based_witnesses():
    v = check_efa(osd().run(SWAP))
    payload = v.to_json()
    assert payload["holds"] is False
    assert payload["witness"]["agent"] in (1, 2)
    assert payload["witness"]["rival"] in (1, 2)
    assert payload["witness"]["allocation"] is None


def test_sefp_restricts_to_items_the_rival_likes():
    # agent 2 ignores item 1, so agent 1's credit drops to item 2 only
    inst = Instance(((2, 1), (0, 1)))
    dist = AllocationDistribution.from_map(inst, {Allocation((0, 1)): 1})
    assert check_efp(dist).holds
    v = check_sefp(dist)
    assert not v.holds
    assert v.witness.agent == 0 and v.witness.rival == 1
    assert v.witness.own == 0 and v.witness.others == 1


def test_checkers_accept_auditor_utilities():
    # run on strategic bids, judge against the true matrix
    bids = BidProfile(((1, 0), (2, 1)))
    dist = like().run(SWAP, bids)
    assert not check_efa(dist, SWAP.utilities).holds
    with pytest.raises(ValueError):
        check_efa(dist, ((1, 2, 3), (1, 1, 1)))


def test_pep_under_reported_bids():
    bids = ((1, 1), (1, 1))
    dist = like().run(SWAP, BidProfile(bids))
    # judged on the flat bids, nothing dominates anything
    assert check_pep(dist, bids).holds
    assert not check_pep(dist).holds


def test_equivalence_helpers():
    assert ex_ante_equivalent(like(), orp(), SWAP)
    assert not ex_post_equivalent(like(), orp(), SWAP)
    ident = Instance(((2, 1), (2, 1)))
    assert ex_post_equivalent(pareto_like(), like(), ident)
    assert ex_post_equivalent(maximum_like(), like(), ident)
    assert ex_ante_equivalent(balanced_like(), like(), ident)


def test_forced_marginals_require_positive_utilities():
    forced = efa_forced_marginals(SWAP)
    assert all(forced.entry(i, j) == Fraction(1, 2) for i in range(2) for j in range(2))
    with pytest.raises(ValueError):
        efa_forced_marginals(Instance(((1, 2), (0, 1))))


def test_prefix_efa():
    assert check_prefix_efa(like().run(SWAP)).holds
    v = check_prefix_efa(osd().run(SWAP))
    assert not v.holds
    assert v.axiom == "prefix-efa"
    # fair in the aggregate yet one-sided early on: only the prefix check sees it
    inst = Instance(((1, 1), (1, 1)))
    headheavy = AllocationDistribution.from_map(inst, {Allocation((0, 1)): 1})
    assert check_efa(headheavy).holds
    assert not check_prefix_efa(headheavy).holds


def test_verdict_boolean_protocol():
    good = check_efa(like().run(SWAP))
    bad = check_efa(osd().run(SWAP))
    assert bool(good) and not bool(bad)
