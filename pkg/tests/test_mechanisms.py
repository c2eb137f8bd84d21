"""Engine and feasibility rules against hand-computed distributions."""

from fractions import Fraction

import pytest

from fairdiv import (
    Allocation,
    AllocationDistribution,
    BidProfile,
    Instance,
    PriorityOrder,
    RuleInvariantError,
    WorkBoundExceeded,
    allocate,
    balanced_like,
    get_mechanism,
    like,
    marginals,
    maximum_like,
    orp,
    orp_distribution,
    osd,
    pareto_frontier,
    pareto_levels,
    pareto_like,
)
from fairdiv.mechanisms import FeasibilityRule, _positive_bidders

SWAP = Instance(((1, 2), (2, 1)))
CLOSE = Instance(((1, 4), (2, 3)))


def owners_map(dist):
    return {a.owners: p for a, p in dist}


# --- the shared two-item instance where all six rules differ ------------

def test_osd_identity_gives_everything_to_agent_one():
    assert owners_map(osd().run(SWAP)) == {(0, 0): Fraction(1)}


def test_osd_reversed_priority():
    assert owners_map(osd(PriorityOrder((1, 0))).run(SWAP)) == {(1, 1): Fraction(1)}


def test_orp_mixes_the_two_dictatorships():
    assert owners_map(orp().run(SWAP)) == {
        (0, 0): Fraction(1, 2),
        (1, 1): Fraction(1, 2),
    }


def test_like_is_uniform_over_positive_bidders():
    assert owners_map(like().run(SWAP)) == {
        (0, 0): Fraction(1, 4),
        (0, 1): Fraction(1, 4),
        (1, 0): Fraction(1, 4),
        (1, 1): Fraction(1, 4),
    }


def test_balanced_like_never_doubles_up_here():
    assert owners_map(balanced_like().run(SWAP)) == {
        (0, 1): Fraction(1, 2),
        (1, 0): Fraction(1, 2),
    }


def test_maximum_like_tracks_highest_bids():
    assert owners_map(maximum_like().run(SWAP)) == {(1, 0): Fraction(1)}


def test_pareto_like_prunes_the_dominated_branch():
    # giving item 2 to agent 2 after agent 1 took item 1 is dominated,
    # so that branch folds all its mass into the remaining extension
    assert owners_map(pareto_like().run(SWAP)) == {
        (0, 0): Fraction(1, 2),
        (1, 0): Fraction(1, 4),
        (1, 1): Fraction(1, 4),
    }


def test_pareto_like_support_on_close_values_is_everything():
    assert owners_map(pareto_like().run(CLOSE)) == {
        (0, 0): Fraction(1, 4),
        (0, 1): Fraction(1, 4),
        (1, 0): Fraction(1, 4),
        (1, 1): Fraction(1, 4),
    }


# --- rule-specific behavior ----------------------------------------------

def test_balanced_like_prefers_lighter_bundles():
    inst = Instance(((1, 1, 1), (1, 1, 1)))
    dist = balanced_like().run(inst)
    # after the first two items balance out, the third splits again
    for owners, p in owners_map(dist).items():
        assert owners[0] != owners[1]
        assert p == Fraction(1, 4)
    assert len(dist.support()) == 4


def test_maximum_like_splits_ties():
    inst = Instance(((2, 1), (2, 1)))
    assert owners_map(maximum_like().run(inst)) == {
        (0, 0): Fraction(1, 4),
        (0, 1): Fraction(1, 4),
        (1, 0): Fraction(1, 4),
        (1, 1): Fraction(1, 4),
    }


def test_zero_bid_column_discards_the_item():
    inst = Instance(((1, 2), (2, 1)))
    bids = BidProfile(((1, 0), (2, 0)))
    for mech in (osd(), orp(), like(), balanced_like(), maximum_like(), pareto_like()):
        dist = mech.run(inst, bids)
        assert all(a.owners[1] is None for a in dist.support()), mech.name


def test_empty_instance_yields_the_empty_allocation():
    inst = Instance(((), ()))
    dist = like().run(inst)
    assert owners_map(dist) == {(): Fraction(1)}


def test_allocate_rejects_mismatched_bids():
    with pytest.raises(ValueError):
        like().run(SWAP, BidProfile(((1, 2, 3), (1, 1, 1))))


def test_work_bound_on_wide_trees():
    inst = Instance(((1, 1, 1), (1, 1, 1)))
    with pytest.raises(WorkBoundExceeded):
        like().run(inst, max_nodes=4)
    assert len(like().run(inst, max_nodes=8).support()) == 8


def test_orp_work_bound_counts_priority_orders():
    inst = Instance(tuple((1,) for _ in range(6)))
    with pytest.raises(WorkBoundExceeded):
        orp().run(inst, max_nodes=100)


def test_orp_matches_explicit_dictatorship_mixture():
    from itertools import permutations

    for inst in (SWAP, CLOSE, Instance(((1, 0, 2), (1, 1, 0), (0, 3, 1)))):
        parts = [
            (osd(PriorityOrder(p)).run(inst), Fraction(1, 6 if inst.n == 3 else 2))
            for p in permutations(range(inst.n))
        ]
        assert AllocationDistribution.mix(parts).entries == orp().run(inst).entries


def test_rule_invariant_violations_are_reported():
    class NeverFeasible(FeasibilityRule):
        name = "never"

        def feasible(self, state, item, sizes, totals):
            return ()

    class AlwaysAgentZero(FeasibilityRule):
        name = "always"

        def feasible(self, state, item, sizes, totals):
            return (0,)

    with pytest.raises(RuleInvariantError):
        allocate(NeverFeasible(), SWAP)
    inst = Instance(((1, 2), (2, 1)))
    with pytest.raises(RuleInvariantError):
        allocate(AlwaysAgentZero(), inst, BidProfile(((1, 0), (1, 0))))


def test_prefix_of_run_equals_run_on_prefix_for_history_free_rules():
    # rules whose feasible sets ignore future items commute with truncation
    insts = [SWAP, CLOSE, Instance(((1, 0, 2), (2, 1, 1), (0, 1, 3)))]
    for mech in (osd(), like(), balanced_like(), maximum_like()):
        for inst in insts:
            full = mech.run(inst)
            for upto in range(inst.m + 1):
                assert full.prefix(upto).entries == mech.run(inst.prefix(upto)).entries


# --- the frontier rule's lookahead ----------------------------------------

DEAD_END = Instance(((18, 10, 10), (17, 4, 13)))


def test_pareto_levels_on_the_swap_instance():
    bids = BidProfile.sincere(SWAP)
    levels, viable = pareto_levels(bids, _positive_bidders(bids))
    assert set(levels[0]) == {(1, 0), (0, 2)}
    assert set(levels[1]) == {(3, 0), (2, 2), (0, 3)}
    # no dead ends here, so everything maximal stays reachable
    assert [set(v) for v in viable] == [set(lv) for lv in levels]


def test_pareto_levels_prune_unreachable_maximal_vectors():
    bids = BidProfile.sincere(DEAD_END)
    levels, viable = pareto_levels(bids, _positive_bidders(bids))
    # (18, 4) is maximal after two items but neither extension survives
    assert (18, 4) in levels[1]
    assert (18, 4) not in viable[1]
    assert set(viable[2]) == set(levels[2])


def test_pareto_like_survives_dead_ends_and_matches_the_frontier():
    dist = pareto_like().run(DEAD_END)
    support = {a.owners for a in dist.support()}
    front = {a.owners for a in pareto_frontier(DEAD_END)}
    assert support == front
    assert owners_map(dist) == {
        (0, 0, 0): Fraction(1, 4),
        (0, 0, 1): Fraction(1, 4),
        (1, 0, 0): Fraction(1, 8),
        (1, 0, 1): Fraction(1, 8),
        (1, 1, 1): Fraction(1, 4),
    }


def test_pareto_like_handles_fractional_bids():
    inst = Instance((
        (3, Fraction(5, 3), Fraction(5, 3)),
        (Fraction(17, 6), Fraction(2, 3), Fraction(13, 6)),
    ))
    support = {a.owners for a in pareto_like().run(inst).support()}
    assert support == {a.owners for a in pareto_frontier(inst)}


def test_pareto_like_judges_on_bids_not_utilities():
    # with flat bids every assignment is maximal, so the rule acts like
    # plain sharing even though true utilities are skewed
    bids = BidProfile(((1, 1), (1, 1)))
    dist = pareto_like().run(SWAP, bids)
    assert len(dist.support()) == 4


def test_get_mechanism_names_and_sigma():
    for name in ("osd", "orp", "like", "balanced-like", "maximum-like", "pareto-like"):
        assert get_mechanism(name).name == name
    sig = get_mechanism("osd", sigma=PriorityOrder((1, 0)))
    assert owners_map(sig.run(SWAP)) == {(1, 1): Fraction(1)}
    with pytest.raises(ValueError):
        get_mechanism("like", sigma=PriorityOrder((1, 0)))
    with pytest.raises(ValueError):
        get_mechanism("nope")
    with pytest.raises(ValueError):
        osd(PriorityOrder((0, 1, 2))).run(SWAP)


def test_osd_priority_order_sequences_are_accepted():
    assert owners_map(osd((1, 0)).run(SWAP)) == {(1, 1): Fraction(1)}


def test_orp_direct_evaluation_handles_discards():
    inst = Instance(((1, 2), (2, 1)))
    bids = BidProfile(((0, 2), (0, 1)))
    dist = orp_distribution(inst, bids)
    assert owners_map(dist) == {(None, 0): Fraction(1, 2), (None, 1): Fraction(1, 2)}
