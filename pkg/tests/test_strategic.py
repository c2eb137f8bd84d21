"""Deviation searches and behavioral probes, with re-simulated witnesses."""

from fractions import Fraction

import pytest

from fairdiv import (
    BidGrid,
    BidProfile,
    Instance,
    WorkBoundExceeded,
    balanced_like,
    bundle_utility,
    classify,
    like,
    maximum_like,
    memoryless_probe,
    orp,
    osd,
    osp_falsify,
    pareto_like,
    sp_falsify,
    step_probe,
)

SWAP = Instance(((1, 2), (2, 1)))


def expected_true_value(dist, agent, utilities):
    return sum(p * bundle_utility(a, agent, agent, utilities) for a, p in dist)


def resimulate(mech, instance, deviation):
    """Replay a row deviation and return the liar's expected true utility."""
    bids = BidProfile.sincere(instance).replace_row(deviation.agent, deviation.bid_row)
    dist = mech.run(instance, bids)
    return expected_true_value(dist, deviation.agent, instance.utilities)


def test_bid_grid_contents():
    grid = BidGrid()
    assert grid.values(SWAP, 0, 0) == (0, Fraction(1, 2), 1, 2, 4)
    assert grid.values(SWAP, 1, 1) == (0, Fraction(1, 2), 1, 2, 4)
    wide = BidGrid(extra=(7,))
    assert 7 in wide.values(SWAP, 0, 0)
    with pytest.raises(ValueError):
        BidGrid(extra=(-1,)).values(SWAP, 0, 0)


def test_honest_mechanisms_have_no_row_deviation():
    for mech in (osd(), orp(), like()):
        assert sp_falsify(mech, SWAP) is None
        assert osp_falsify(mech, SWAP) is None


def test_maximum_like_row_deviation():
    d = sp_falsify(maximum_like(), SWAP)
    assert d is not None
    assert d.agent == 0
    assert d.bid_row == (2, 2)
    assert d.sincere_value == 2 and d.deviant_value == Fraction(5, 2)
    assert d.gain == Fraction(1, 2)
    assert resimulate(maximum_like(), SWAP, d) == d.deviant_value


def test_pareto_like_row_deviation():
    d = sp_falsify(pareto_like(), SWAP)
    assert d is not None
    assert d.agent == 1
    assert d.bid_row == (Fraction(1, 2), 1)
    assert d.sincere_value == Fraction(5, 4) and d.deviant_value == Fraction(3, 2)
    assert resimulate(pareto_like(), SWAP, d) == d.deviant_value


def test_balanced_like_needs_multiple_items_to_lie_profitably():
    single = Instance(((1,), (2,)))
    assert sp_falsify(balanced_like(), single) is None
    ident = Instance(((1, 2), (1, 2)))
    d = sp_falsify(balanced_like(), ident)
    assert d is not None
    assert d.agent == 0 and d.bid_row == (0, Fraction(1, 2))
    assert d.sincere_value == Fraction(3, 2) and d.deviant_value == 2
    assert resimulate(balanced_like(), ident, d) == 2


def test_balanced_like_binary_row_deviation():
    inst = Instance(((1, 1, 1), (1, 1, 0), (1, 0, 1)))
    d = sp_falsify(balanced_like(), inst)
    assert d is not None
    assert d.sincere_value == Fraction(13, 12)
    assert d.deviant_value == Fraction(9, 8)
    assert resimulate(balanced_like(), inst, d) == Fraction(9, 8)


def test_balanced_like_has_no_single_item_deviation():
    # underbidding pays only through its later balancing effect, which the
    # at-the-moment comparison does not credit
    for inst in (SWAP, Instance(((1, 2), (1, 2)))):
        assert osp_falsify(balanced_like(), inst) is None


def test_maximum_like_single_item_deviation():
    d = osp_falsify(maximum_like(), SWAP)
    assert d is not None
    assert d.agent == 0 and d.item == 0
    assert d.bid_row == (2, 2)
    assert d.sincere_value == 0 and d.deviant_value == Fraction(1, 2)


def test_pareto_like_single_item_deviation():
    d = osp_falsify(pareto_like(), SWAP)
    assert d is not None
    assert d.agent == 1 and d.item == 1
    assert d.bid_row == (2, 4)
    assert d.sincere_value == Fraction(5, 4) and d.deviant_value == Fraction(3, 2)


def test_step_probes():
    for mech in (osd(), orp(), like(), balanced_like()):
        assert step_probe(mech, SWAP) is None, mech.name
    w = step_probe(maximum_like(), SWAP)
    assert (w.agent, w.item, w.bid) == (0, 0, 2)
    assert w.affected_item is None
    w = step_probe(pareto_like(), SWAP)
    assert (w.agent, w.item, w.bid) == (0, 0, 4)


def test_memoryless_probes():
    for mech in (osd(), orp(), like(), maximum_like()):
        assert memoryless_probe(mech, SWAP) is None, mech.name
    w = memoryless_probe(balanced_like(), SWAP)
    assert (w.agent, w.item, w.bid, w.affected_item) == (0, 0, 0, 1)
    w = memoryless_probe(pareto_like(), SWAP)
    assert (w.agent, w.item, w.bid, w.affected_item) == (0, 0, 0, 1)


def test_classification_matrix():
    suite = [("swap", SWAP), ("identical", Instance(((1, 2), (1, 2))))]
    expected = {
        "osd": (True, True, False),
        "orp": (True, True, False),
        "like": (True, True, False),
        "balanced-like": (True, False, True),
        "maximum-like": (False, True, True),
        "pareto-like": (False, False, True),
    }
    mechs = (osd(), orp(), like(), balanced_like(), maximum_like(), pareto_like())
    for mech in mechs:
        prof = classify(mech, suite)
        assert (prof.step, prof.memoryless, prof.manipulable) == expected[mech.name]
        assert prof.characterization_consistent


def test_profile_json_is_one_based():
    prof = classify(maximum_like(), [("swap", SWAP)])
    payload = prof.to_json()
    assert payload["manipulable"] is True
    assert payload["sp_witness"]["instance"] == "swap"
    assert payload["sp_witness"]["agent"] == 1
    assert payload["step_witness"]["item"] == 1


def test_deviation_json():
    d = sp_falsify(maximum_like(), SWAP)
    payload = d.to_json()
    assert payload["agent"] == 1
    assert payload["bids"] == ["2", "2"]
    assert payload["item"] is None
    assert payload["gain"] == "1/2"


def test_candidate_budget():
    with pytest.raises(WorkBoundExceeded):
        sp_falsify(maximum_like(), SWAP, max_candidates=3)
