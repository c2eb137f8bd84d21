"""Deviation search: manipulability falsifiers and behavioral probes.

All searches are deterministic. Candidate bids come from a finite grid
built from the values already in the instance plus a value below the
smallest positive entry and one above the largest, which is enough to
shift any threshold comparison a mechanism in this family can make.
Finding a deviation proves manipulability; finding none is evidence
bounded by the grid, which is how the falsifiers are meant to be read.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .core import (
    BidProfile,
    Instance,
    Value,
    WorkBoundExceeded,
    as_value,
    bundle_utility,
    format_value,
    marginals,
)
from .mechanisms import Mechanism

DEFAULT_MAX_CANDIDATES = 10**6


@dataclass(frozen=True)
class BidGrid:
    """Finite bid menu per agent-item pair; ``extra`` values join every menu."""

    extra: tuple[Value, ...] = ()

    def values(self, instance: Instance, agent: int, item: int) -> tuple[Value, ...]:
        pool = set(instance.column(item))
        pool.update(instance.utilities[agent])
        positive = [x for x in pool if x > 0]
        grid = {as_value(0)}
        grid.update(pool)
        if positive:
            grid.add(as_value(Fraction(min(positive), 2)))
            grid.add(as_value(2 * max(positive)))
        grid.update(as_value(x) for x in self.extra)
        if any(x < 0 for x in grid):
            raise ValueError("bids must be nonnegative")
        return tuple(sorted(grid))


@dataclass(frozen=True)
class Deviation:
    """A profitable lie: the row bid by ``agent`` and the utility change.

    ``item`` is None for a free-form row deviation and an item index when
    the lie is confined to that single item, in which case the utilities
    are expectations over the items up to and including it.
    """

    agent: int
    bid_row: tuple[Value, ...]
    item: Optional[int]
    sincere_value: Value
    deviant_value: Value

    @property
    def gain(self) -> Value:
        return as_value(self.deviant_value - self.sincere_value)

    def to_json(self) -> dict:
        return {
            "agent": self.agent + 1,
            "bids": [format_value(x) for x in self.bid_row],
            "item": None if self.item is None else self.item + 1,
            "sincere_value": format_value(self.sincere_value),
            "deviant_value": format_value(self.deviant_value),
            "gain": format_value(self.gain),
        }


@dataclass(frozen=True)
class ProbeWitness:
    """A bid change at one cell that moved probabilities it should not move."""

    agent: int
    item: int
    bid: Value
    affected_item: Optional[int] = None

    def to_json(self) -> dict:
        return {
            "agent": self.agent + 1,
            "item": self.item + 1,
            "bid": format_value(self.bid),
            "affected_item": None if self.affected_item is None else self.affected_item + 1,
        }


def _expected_true_value(dist, agent: int, utilities) -> Value:
    total = 0
    for alloc, prob in dist:
        total += prob * bundle_utility(alloc, agent, agent, utilities)
    return as_value(total)


def sp_falsify(mech: Mechanism, instance: Instance, grid: Optional[BidGrid] = None, *,
               max_candidates: int = DEFAULT_MAX_CANDIDATES,
               max_nodes: Optional[int] = None) -> Optional[Deviation]:
    """Search whole-row lies for one that raises the liar's expected utility.

    Agents are tried in ascending order and rows in lexicographic grid
    order, so the first deviation found is deterministic.
    """
    grid = grid or BidGrid()
    u = instance.utilities
    sincere = BidProfile.sincere(instance)
    base = mech.run(instance, max_nodes=max_nodes)
    for agent in range(instance.n):
        menus = [grid.values(instance, agent, j) for j in range(instance.m)]
        count = 1
        for menu in menus:
            count *= len(menu)
        if count > max_candidates:
            raise WorkBoundExceeded(
                f"{count} candidate rows for agent {agent + 1} exceed {max_candidates}"
            )
        baseline = _expected_true_value(base, agent, u)
        for row in itertools.product(*menus):
            if row == u[agent]:
                continue
            dist = mech.run(instance, sincere.replace_row(agent, row), max_nodes=max_nodes)
            value = _expected_true_value(dist, agent, u)
            if value > baseline:
                return Deviation(agent, row, None, baseline, value)
    return None


def osp_falsify(mech: Mechanism, instance: Instance, grid: Optional[BidGrid] = None, *,
                max_nodes: Optional[int] = None) -> Optional[Deviation]:
    """Search single-item lies judged at the moment the item is decided.

    The liar bids sincerely before item j, misreports item j only, and the
    comparison is over expected true utility from the items up to and
    including j. Lies that sacrifice now to gain later are invisible here
    on purpose; this captures manipulations that are obvious as played.
    """
    grid = grid or BidGrid()
    u = instance.utilities
    for item in range(instance.m):
        prefix = instance.prefix(item + 1)
        sincere = BidProfile.sincere(prefix)
        base = mech.run(prefix, max_nodes=max_nodes)
        for agent in range(instance.n):
            baseline = _expected_true_value(base, agent, prefix.utilities)
            for bid in grid.values(instance, agent, item):
                if bid == u[agent][item]:
                    continue
                bids = sincere.replace_bid(agent, item, bid)
                dist = mech.run(prefix, bids, max_nodes=max_nodes)
                value = _expected_true_value(dist, agent, prefix.utilities)
                if value > baseline:
                    row = u[agent][:item] + (bid,) + u[agent][item + 1:]
                    return Deviation(agent, row, item, baseline, value)
    return None


def step_probe(mech: Mechanism, instance: Instance, grid: Optional[BidGrid] = None, *,
               max_nodes: Optional[int] = None) -> Optional[ProbeWitness]:
    """Witness that outcomes depend on a positive bid's size, not just its sign.

    Replaces one positive sincere bid with another positive grid value and
    reports the first replacement that changes the output distribution.
    """
    grid = grid or BidGrid()
    sincere = BidProfile.sincere(instance)
    base = mech.run(instance, max_nodes=max_nodes)
    for agent in range(instance.n):
        for item in range(instance.m):
            if instance.utility(agent, item) <= 0:
                continue
            for bid in grid.values(instance, agent, item):
                if bid <= 0 or bid == instance.utility(agent, item):
                    continue
                dist = mech.run(instance, sincere.replace_bid(agent, item, bid),
                                max_nodes=max_nodes)
                if dist.entries != base.entries:
                    return ProbeWitness(agent, item, bid)
    return None


def memoryless_probe(mech: Mechanism, instance: Instance,
                     grid: Optional[BidGrid] = None, *,
                     max_nodes: Optional[int] = None) -> Optional[ProbeWitness]:
    """Witness that an earlier bid steers a later item's probabilities.

    Perturbs one earlier cell at a time and compares the marginal
    probability columns of every later item against the sincere run.
    """
    grid = grid or BidGrid()
    sincere = BidProfile.sincere(instance)
    base = marginals(mech.run(instance, max_nodes=max_nodes))
    for item in range(instance.m - 1):
        for agent in range(instance.n):
            for bid in grid.values(instance, agent, item):
                if bid == instance.utility(agent, item):
                    continue
                dist = mech.run(instance, sincere.replace_bid(agent, item, bid),
                                max_nodes=max_nodes)
                p = marginals(dist)
                for later in range(item + 1, instance.m):
                    if any(p.entry(i, later) != base.entry(i, later)
                           for i in range(instance.n)):
                        return ProbeWitness(agent, item, bid, later)
    return None


@dataclass(frozen=True)
class MechanismProfile:
    """Behavioral fingerprint of a mechanism over a suite of instances."""

    mechanism: str
    step: bool
    memoryless: bool
    manipulable: bool
    step_witness: Optional[tuple[str, ProbeWitness]] = None
    memoryless_witness: Optional[tuple[str, ProbeWitness]] = None
    sp_witness: Optional[tuple[str, Deviation]] = None

    @property
    def characterization_consistent(self) -> bool:
        """Sign-only plus history-free behavior should coincide with honesty
        being optimal, and the suite should witness both directions."""
        return (self.step and self.memoryless) == (not self.manipulable)

    def to_json(self) -> dict:
        def tag(pair):
            return None if pair is None else {"instance": pair[0], **pair[1].to_json()}

        return {
            "mechanism": self.mechanism,
            "step": self.step,
            "memoryless": self.memoryless,
            "manipulable": self.manipulable,
            "characterization_consistent": self.characterization_consistent,
            "step_witness": tag(self.step_witness),
            "memoryless_witness": tag(self.memoryless_witness),
            "sp_witness": tag(self.sp_witness),
        }


def classify(mech: Mechanism, suite: Sequence[tuple[str, Instance]],
             grid: Optional[BidGrid] = None, *,
             max_candidates: int = DEFAULT_MAX_CANDIDATES,
             max_nodes: Optional[int] = None) -> MechanismProfile:
    """Profile a mechanism on a suite: probes plus the row-lie falsifier."""
    grid = grid or BidGrid()
    step_w = memoryless_w = sp_w = None
    for label, inst in suite:
        if step_w is None:
            w = step_probe(mech, inst, grid, max_nodes=max_nodes)
            if w is not None:
                step_w = (label, w)
        if memoryless_w is None:
            w = memoryless_probe(mech, inst, grid, max_nodes=max_nodes)
            if w is not None:
                memoryless_w = (label, w)
        if sp_w is None:
            d = sp_falsify(mech, inst, grid, max_candidates=max_candidates,
                           max_nodes=max_nodes)
            if d is not None:
                sp_w = (label, d)
    return MechanismProfile(
        mechanism=mech.name,
        step=step_w is None,
        memoryless=memoryless_w is None,
        manipulable=sp_w is not None,
        step_witness=step_w,
        memoryless_witness=memoryless_w,
        sp_witness=sp_w,
    )
