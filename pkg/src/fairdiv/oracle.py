"""Ground-truth allocation analysis: enumeration, dominance, and exact LP.

Everything here is deliberately brute force. Allocations are enumerated
item by item, Pareto comparisons are pairwise over full utility vectors,
and the question "can any lottery over allocations beat this expected
utility point" is decided by a small simplex over Fractions. These are the
oracles that the mechanism engine and the axiom checkers are audited
against, so they share no shortcuts with them.

Dominance can be judged under two different matrices: the bids (the
mechanism's view of the world) or the utilities (the auditor's view). The
``values`` argument picks the matrix; it defaults to the instance's own
utilities.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Optional, Sequence

from .core import (
    DEFAULT_MAX_NODES,
    Allocation,
    BidProfile,
    FairDivError,
    Instance,
    Value,
    WorkBoundExceeded,
    as_value,
)


class InfeasibleError(FairDivError):
    """The linear program has no feasible point."""


class UnboundedError(FairDivError):
    """The linear program is unbounded above."""


def utility_vector(alloc: Allocation, values: Sequence[Sequence[Value]]) -> tuple[Value, ...]:
    """Each agent's value for their own bundle, as an exact tuple."""
    n = len(values)
    acc: list[Value] = [0] * n
    for j, o in enumerate(alloc.owners):
        if o is not None:
            acc[o] += values[o][j]
    return tuple(as_value(x) for x in acc)


def enumerate_allocations(instance: Instance, bids: Optional[BidProfile] = None, *,
                          max_nodes: Optional[int] = None) -> list[Allocation]:
    """All non-wasteful allocations of the instance's items.

    Each item goes to one of its positive bidders; an item with an all-zero
    bid column is discarded in every allocation. Output is in canonical
    (sorted) order.
    """
    if bids is None:
        bids = BidProfile.sincere(instance)
    if not bids.matches(instance):
        raise ValueError("bid profile shape differs from instance")
    bound = DEFAULT_MAX_NODES if max_nodes is None else max_nodes
    options: list[tuple[Optional[int], ...]] = []
    count = 1
    for j in range(instance.m):
        pos = tuple(i for i in range(instance.n) if bids.bid(i, j) > 0)
        opts = pos if pos else (None,)
        count *= len(opts)
        if count > bound:
            raise WorkBoundExceeded(f"enumeration may exceed {bound} allocations")
        options.append(opts)
    allocs = [Allocation(owners) for owners in product(*options)]
    allocs.sort(key=Allocation.sort_key)
    return allocs


def pareto_dominates(a: Allocation, b: Allocation,
                     values: Sequence[Sequence[Value]]) -> bool:
    """True when ``a`` is at least as good as ``b`` for everyone and strictly
    better for someone, measured by ``values``."""
    va = utility_vector(a, values)
    vb = utility_vector(b, values)
    return va != vb and all(x >= y for x, y in zip(va, vb))


def is_pep(alloc: Allocation, instance: Instance, bids: Optional[BidProfile] = None, *,
           values: Optional[Sequence[Sequence[Value]]] = None,
           max_nodes: Optional[int] = None) -> bool:
    """Is the allocation Pareto efficient among all same-prefix allocations?

    The comparison class is every non-wasteful allocation under ``bids``;
    dominance is measured by ``values``. Defaults give the auditor's view
    (sincere bids, true utilities); pass the bid matrix as ``values`` to
    take the mechanism's view.
    """
    if values is None:
        values = instance.utilities
    target = utility_vector(alloc, values)
    for other in enumerate_allocations(instance, bids, max_nodes=max_nodes):
        vo = utility_vector(other, values)
        if vo != target and all(x >= y for x, y in zip(vo, target)):
            return False
    return True


def pareto_frontier(instance: Instance, bids: Optional[BidProfile] = None, *,
                    values: Optional[Sequence[Sequence[Value]]] = None,
                    max_nodes: Optional[int] = None) -> list[Allocation]:
    """All Pareto efficient non-wasteful allocations, canonically ordered."""
    if values is None:
        values = instance.utilities
    allocs = enumerate_allocations(instance, bids, max_nodes=max_nodes)
    vectors = [utility_vector(a, values) for a in allocs]
    out = []
    for i, va in enumerate(vectors):
        dominated = False
        for vb in vectors:
            if vb != va and all(x >= y for x, y in zip(vb, va)):
                dominated = True
                break
        if not dominated:
            out.append(allocs[i])
    return out


@dataclass(frozen=True)
class LPSolution:
    """Outcome of the domination LP for an expected-utility point.

    ``objective`` is the maximal total surplus that any lottery over
    allocations can add on top of the given point while making nobody worse
    off. Zero means the point is Pareto efficient ex ante. ``weights`` is
    an optimal lottery (one representative allocation per distinct utility
    vector) and ``gains`` the per-agent surplus it achieves.
    """

    objective: Fraction
    weights: tuple[tuple[Allocation, Fraction], ...]
    gains: tuple[Fraction, ...]


def _simplex_maximize(c: Sequence[Fraction],
                      constraints: Sequence[tuple[Sequence[Fraction], str, Fraction]],
                      ) -> tuple[Fraction, list[Fraction]]:
    """Maximize c.x subject to rows (coeffs, rel, rhs) and x >= 0.

    rel is one of '<=', '>=', '=='. Exact two-phase simplex with Bland's
    rule, so the run is deterministic and cannot cycle. Raises
    InfeasibleError or UnboundedError accordingly.
    """
    nv = len(c)
    rows: list[list[Fraction]] = []
    rels: list[str] = []
    for coeffs, rel, rhs in constraints:
        if len(coeffs) != nv:
            raise ValueError("constraint width differs from objective")
        row = [Fraction(x) for x in coeffs]
        b = Fraction(rhs)
        if b < 0:
            row = [-x for x in row]
            b = -b
            rel = {"<=": ">=", ">=": "<=", "==": "=="}[rel]
        rows.append(row + [b])
        rels.append(rel)

    nrows = len(rows)
    # column layout: [original vars][one slack or surplus per inequality][artificials]
    n_slack = sum(1 for r in rels if r != "==")
    slack_of: dict[int, int] = {}
    k = 0
    for i, r in enumerate(rels):
        if r != "==":
            slack_of[i] = nv + k
            k += 1
    art_of: dict[int, int] = {}
    k = 0
    for i, r in enumerate(rels):
        if r in ("==", ">="):
            art_of[i] = nv + n_slack + k
            k += 1
    ncols = nv + n_slack + len(art_of)

    tab: list[list[Fraction]] = []
    basis: list[int] = []
    for i, row in enumerate(rows):
        full = row[:-1] + [Fraction(0)] * (ncols - nv) + [row[-1]]
        if i in slack_of:
            full[slack_of[i]] = Fraction(1) if rels[i] == "<=" else Fraction(-1)
        if i in art_of:
            full[art_of[i]] = Fraction(1)
            basis.append(art_of[i])
        else:
            basis.append(slack_of[i])
        tab.append(full)

    def pivot(r: int, col: int) -> None:
        piv = tab[r][col]
        tab[r] = [x / piv for x in tab[r]]
        for i in range(nrows):
            if i != r and tab[i][col]:
                f = tab[i][col]
                tab[i] = [a - f * b for a, b in zip(tab[i], tab[r])]
        basis[r] = col

    def run(obj: list[Fraction], live: int) -> None:
        # Bland's rule: smallest eligible entering column, then the leaving
        # row with the smallest ratio, ties broken by smallest basis index.
        while True:
            lam = [obj[basis[i]] for i in range(nrows)]
            enter = -1
            for j in range(live):
                rc = obj[j]
                for i in range(nrows):
                    if tab[i][j]:
                        rc -= lam[i] * tab[i][j]
                if rc > 0:
                    enter = j
                    break
            if enter < 0:
                return
            leave = -1
            best: Optional[Fraction] = None
            for i in range(nrows):
                a = tab[i][enter]
                if a > 0:
                    t = tab[i][-1] / a
                    if best is None or t < best or (t == best and basis[i] < basis[leave]):
                        best = t
                        leave = i
            if leave < 0:
                raise UnboundedError("objective is unbounded above")
            pivot(leave, enter)

    if art_of:
        phase1 = [Fraction(0)] * ncols
        for col in art_of.values():
            phase1[col] = Fraction(-1)
        run(phase1, ncols)
        art_cols = set(art_of.values())
        residue = sum(tab[i][-1] for i in range(nrows) if basis[i] in art_cols)
        if residue != 0:
            raise InfeasibleError("no feasible point")
        # drive leftover zero-level artificials out of the basis
        for i in range(nrows):
            if basis[i] in art_cols:
                for j in range(nv + n_slack):
                    if tab[i][j]:
                        pivot(i, j)
                        break

    obj2 = [Fraction(x) for x in c] + [Fraction(0)] * (ncols - nv)
    live = nv + n_slack  # artificial columns are dead in phase 2
    run(obj2, live)

    x = [Fraction(0)] * nv
    for i in range(nrows):
        if basis[i] < nv:
            x[basis[i]] = tab[i][-1]
    value = sum((ci * xi for ci, xi in zip(c, x)), Fraction(0))
    return value, x


def pea_solution(own_expected: Sequence[Value], instance: Instance,
                 bids: Optional[BidProfile] = None, *,
                 values: Optional[Sequence[Sequence[Value]]] = None,
                 max_nodes: Optional[int] = None) -> LPSolution:
    """Best Pareto improvement over an expected-utility point, if any.

    Solves: maximize the total surplus of a lottery over non-wasteful
    allocations that gives every agent at least their current expected
    utility. Distinct allocations with equal utility vectors are collapsed
    into one LP column. Raises InfeasibleError when the point is not
    achievable by any lottery, which signals a caller error.
    """
    if values is None:
        values = instance.utilities
    n = instance.n
    point = [as_value(x) for x in own_expected]
    if len(point) != n:
        raise ValueError("expected one utility per agent")
    allocs = enumerate_allocations(instance, bids, max_nodes=max_nodes)
    groups: dict[tuple[Value, ...], Allocation] = {}
    for a in allocs:
        v = utility_vector(a, values)
        groups.setdefault(v, a)
    vectors = list(groups)
    g = len(vectors)

    c = [Fraction(0)] * g + [Fraction(1)] * n
    constraints: list[tuple[list[Fraction], str, Fraction]] = []
    for i in range(n):
        row = [Fraction(vec[i]) for vec in vectors]
        row += [Fraction(-1) if k == i else Fraction(0) for k in range(n)]
        constraints.append((row, ">=", Fraction(point[i])))
    constraints.append(([Fraction(1)] * g + [Fraction(0)] * n, "==", Fraction(1)))

    value, x = _simplex_maximize(c, constraints)
    weights = tuple(
        (groups[vectors[k]], x[k]) for k in range(g) if x[k] > 0
    )
    gains = tuple(x[g + i] for i in range(n))
    return LPSolution(value, weights, gains)


def is_pea(own_expected: Sequence[Value], instance: Instance,
           bids: Optional[BidProfile] = None, *,
           values: Optional[Sequence[Sequence[Value]]] = None,
           max_nodes: Optional[int] = None) -> bool:
    """Is the expected-utility point Pareto efficient over all lotteries?"""
    sol = pea_solution(own_expected, instance, bids, values=values, max_nodes=max_nodes)
    return sol.objective == 0
