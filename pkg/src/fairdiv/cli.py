"""Command line front end.

Subcommands:
  run       run one mechanism on an instance and print its distribution
  check     evaluate fairness and efficiency axioms on a mechanism's output
  falsify   search for strategic deviations or behavioral witnesses
  table     recompute the verdict table over instance suites and compare it
            against the expected verdicts
  theorems  mechanically check the library's named claims
  gen       generate random instances from a utility domain
  examples  print the built-in worked examples

Exit codes: 0 success, or every checked property held; 1 a checked property
failed, a witness was found, or a table verdict mismatched; 2 inconclusive
because a work bound was exceeded; 3 usage or input errors.

Agents and items are 1-based everywhere in input and output.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from dataclasses import dataclass
from fractions import Fraction
from itertools import permutations
from pathlib import Path
from typing import Optional, Sequence

from .axioms import (
    CHECKERS,
    check_befp,
    check_efa,
    check_envy_bounded,
    check_pea,
    check_pep,
    check_prefix_efa,
    check_sefa,
    efa_forced_marginals,
)
from .core import (
    AllocationDistribution,
    BidProfile,
    Instance,
    PriorityOrder,
    WorkBoundExceeded,
    expected_utilities,
    format_value,
    marginals,
)
from .instances import (
    DOMAIN_NAMES,
    DomainSpec,
    ParseError,
    WORKED_EXAMPLE_IDS,
    build_table_manifest,
    counterexample_instances,
    generate,
    load_manifest,
    parse_bids,
    parse_instance,
    parse_rational,
    random_suite,
    serialize_instance,
    validate_domain,
    worked_example,
)
from .mechanisms import (
    MECHANISM_NAMES,
    Mechanism,
    balanced_like,
    get_mechanism,
    like,
    maximum_like,
    osd,
    orp,
    pareto_levels,
    pareto_like,
)
from .oracle import pareto_frontier, pea_solution, utility_vector
from .strategic import (
    BidGrid,
    classify,
    memoryless_probe,
    osp_falsify,
    sp_falsify,
    step_probe,
)

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_INCONCLUSIVE = 2
EXIT_USAGE = 3

COLUMNS = ("sp", "osp", "efa", "sefa", "efp", "sefp", "befp", "pea", "pep")
BLOCKS = ("general", "identical", "binary")
BLOCK_ROWS = {
    "general": ("orp", "osd", "maximum-like", "pareto-like", "like", "balanced-like"),
    "identical": ("like", "balanced-like"),
    "binary": ("like", "balanced-like"),
}
BLOCK_TITLES = {
    "general": "general utilities",
    "identical": "identical utilities",
    "binary": "binary utilities",
}


def _expected_row(cells: str) -> dict[str, tuple[bool, bool]]:
    out = {}
    for col, cell in zip(COLUMNS, cells.split()):
        out[col] = (cell.rstrip("*") == "+", cell.endswith("*"))
    return out


# verdict, with a star when the claim is quoted from earlier work rather
# than established by this library's own suites
EXPECTED_TABLE: dict[str, dict[str, dict[str, tuple[bool, bool]]]] = {
    "general": {
        "orp":           _expected_row("+  +  +  +  x  x  x  x  +"),
        "osd":           _expected_row("+  +  x  x  x  x  x  +  +"),
        "maximum-like":  _expected_row("x  x  x  x  x  x  x  +  +"),
        "pareto-like":   _expected_row("x  x  x  x  x  x  x  x  +"),
        "like":          _expected_row("+* +  +* +  x* x  x* x  x"),
        "balanced-like": _expected_row("x* +  x* x  x* x  x* x  x"),
    },
    "identical": {
        "like":          _expected_row("+* +  +* +  x* x  x  +  +"),
        "balanced-like": _expected_row("x  +  +  +  x* x  x  +  +"),
    },
    "binary": {
        "like":          _expected_row("+* +  +* +  x* x  x* +  +"),
        "balanced-like": _expected_row("x* +  +* x  x* x  +* +  +"),
    },
}


class _Parser(argparse.ArgumentParser):
    """argparse with usage failures remapped to this tool's exit code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _fail(message: str) -> None:
    print(f"fairdiv: error: {message}", file=sys.stderr)


def _read_text(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    return Path(path).read_text(encoding="utf-8")


def _max_nodes(args) -> Optional[int]:
    if getattr(args, "max_nodes", None) is not None:
        return args.max_nodes
    env = os.environ.get("FAIRDIV_MAX_NODES")
    return int(env) if env else None


def _resolve_instance(args) -> Instance:
    if (args.instance is None) == (getattr(args, "example", None) is None):
        raise ValueError("provide exactly one of --instance or --example")
    if getattr(args, "example", None) is not None:
        inst, _ = worked_example(args.example)
        return inst
    return parse_instance(_read_text(args.instance))


def _resolve_bids(args, instance: Instance) -> Optional[BidProfile]:
    if getattr(args, "bids", None) is None:
        return None
    bids = parse_bids(_read_text(args.bids))
    if not bids.matches(instance):
        raise ValueError("bid profile shape differs from instance")
    return bids


def _resolve_mechanism(args) -> Mechanism:
    sigma = getattr(args, "sigma", None)
    if sigma is not None:
        order = PriorityOrder.from_one_based(int(t) for t in sigma.split(","))
        return get_mechanism(args.mechanism, sigma=order)
    return get_mechanism(args.mechanism)


def _grid_from_args(args) -> BidGrid:
    extras = tuple(parse_rational(t) for t in (getattr(args, "extra_bid", None) or ()))
    return BidGrid(extras)


def _owners_json(alloc) -> list:
    return [None if o is None else o + 1 for o in alloc.owners]


def _dist_json(dist: AllocationDistribution) -> list[dict]:
    return [
        {"owners": _owners_json(a), "probability": format_value(p)} for a, p in dist
    ]


def _matrix_json(rows) -> list[list[str]]:
    return [[format_value(x) for x in row] for row in rows]


def _witness_text(payload: Optional[dict]) -> str:
    if not payload:
        return ""
    parts = [f"{k}={v}" for k, v in payload.items() if v is not None and k != "kind"]
    kind = payload.get("kind", "witness")
    return f" [{kind}: {', '.join(parts)}]"


# --- run ---------------------------------------------------------------

def cmd_run(args) -> int:
    instance = _resolve_instance(args)
    bids = _resolve_bids(args, instance)
    mech = _resolve_mechanism(args)
    dist = mech.run(instance, bids, max_nodes=_max_nodes(args))
    p = marginals(dist)
    ubar = expected_utilities(p, instance.utilities)
    if args.json:
        print(json.dumps({
            "mechanism": mech.name,
            "agents": instance.n,
            "items": instance.m,
            "distribution": _dist_json(dist),
            "marginals": _matrix_json(p.p),
            "expected_own": [format_value(x) for x in ubar.own()],
        }, indent=2))
        return EXIT_OK
    print(f"mechanism: {mech.name}")
    print(f"agents: {instance.n}  items: {instance.m}")
    print("distribution:")
    for alloc, prob in dist:
        print(f"  {format_value(prob):>8}  {alloc}")
    print("marginals:")
    for i in range(instance.n):
        row = " ".join(format_value(p.entry(i, j)) for j in range(instance.m))
        print(f"  agent {i + 1}: {row}")
    own = " ".join(format_value(x) for x in ubar.own())
    print(f"expected own utilities: {own}")
    return EXIT_OK


# --- check -------------------------------------------------------------

def _axiom_plan(names: Sequence[str], instance: Instance, bound) -> list[tuple[str, object]]:
    plan: list[tuple[str, object]] = []
    for name in names:
        if name == "all":
            base = ["efp", "efa", "sefp", "sefa", "pea", "pep"]
            if validate_domain(instance, "binary"):
                base.insert(4, "befp")
            plan.extend((b, CHECKERS[b]) for b in base)
        elif name == "envy-bounded":
            plan.append((name, lambda d: check_envy_bounded(d, bound=bound)))
        elif name == "prefix-efa":
            plan.append((name, check_prefix_efa))
        else:
            plan.append((name, CHECKERS[name]))
    seen = set()
    unique = []
    for name, fn in plan:
        if name not in seen:
            seen.add(name)
            unique.append((name, fn))
    return unique


def cmd_check(args) -> int:
    instance = _resolve_instance(args)
    bids = _resolve_bids(args, instance)
    mech = _resolve_mechanism(args)
    dist = mech.run(instance, bids, max_nodes=_max_nodes(args))
    bound = parse_rational(args.bound)
    plan = _axiom_plan(args.axiom or ["all"], instance, bound)
    results = [(name, fn(dist)) for name, fn in plan]
    ok = all(v.holds for _, v in results)
    if args.json:
        print(json.dumps({
            "mechanism": mech.name,
            "verdicts": [v.to_json() | {"axiom": name} for name, v in results],
            "all_hold": ok,
        }, indent=2))
        return EXIT_OK if ok else EXIT_FAIL
    for name, v in results:
        if v.holds:
            slack = "" if v.margin is None else f" (margin {format_value(v.margin)})"
            print(f"{name}: holds{slack}")
        else:
            w = None if v.witness is None else v.witness.to_json()
            print(f"{name}: FAILS{_witness_text(w)}")
    return EXIT_OK if ok else EXIT_FAIL


# --- falsify -----------------------------------------------------------

def cmd_falsify(args) -> int:
    instance = _resolve_instance(args)
    mech = _resolve_mechanism(args)
    grid = _grid_from_args(args)
    nodes = _max_nodes(args)
    if args.property == "sp":
        found = sp_falsify(mech, instance, grid,
                           max_candidates=args.max_candidates, max_nodes=nodes)
    elif args.property == "osp":
        found = osp_falsify(mech, instance, grid, max_nodes=nodes)
    elif args.property == "step":
        found = step_probe(mech, instance, grid, max_nodes=nodes)
    else:
        found = memoryless_probe(mech, instance, grid, max_nodes=nodes)
    if args.json:
        print(json.dumps({
            "mechanism": mech.name,
            "property": args.property,
            "witness": None if found is None else found.to_json(),
        }, indent=2))
        return EXIT_OK if found is None else EXIT_FAIL
    if found is None:
        print(f"{args.property}: no witness found on the bid grid")
        return EXIT_OK
    print(f"{args.property}: witness found{_witness_text(found.to_json())}")
    return EXIT_FAIL


# --- gen ---------------------------------------------------------------

def cmd_gen(args) -> int:
    if args.count < 1:
        raise ValueError("--count must be at least 1")
    if args.count > 1 and args.out_dir is None:
        raise ValueError("--count above 1 needs --out-dir")
    labels = []
    for k in range(args.count):
        seed = args.seed + k
        spec = DomainSpec(args.domain, args.agents, args.items, seed,
                          bound=args.bound)
        inst = generate(spec)
        label = f"{args.domain}-n{args.agents}m{args.items}-s{seed}"
        if args.out_dir is None:
            print(f"# {label}")
            sys.stdout.write(serialize_instance(inst))
        else:
            path = Path(args.out_dir)
            path.mkdir(parents=True, exist_ok=True)
            target = path / f"{label}.txt"
            target.write_text(f"# {label}\n" + serialize_instance(inst), encoding="utf-8")
            labels.append(str(target))
    for name in labels:
        print(name)
    return EXIT_OK


# --- examples ----------------------------------------------------------

def _example_payload(eid: int, max_nodes: Optional[int]) -> dict:
    instance, constructed = worked_example(eid)
    payload: dict = {
        "id": eid,
        "utilities": _matrix_json(instance.utilities),
        "mechanisms": {},
    }
    if constructed is None:
        for name in MECHANISM_NAMES:
            mech = get_mechanism(name)
            dist = mech.run(instance, max_nodes=max_nodes)
            payload["mechanisms"][name] = _dist_json(dist)
    else:
        dist = constructed.run(instance, max_nodes=max_nodes)
        base = constructed.base.run(instance, max_nodes=max_nodes)
        payload["constructed"] = {
            "name": constructed.name,
            "distribution": _dist_json(dist),
            "base": constructed.base.name,
            "base_distribution": _dist_json(base),
        }
        if eid == 2:
            payload["constructed"]["efa"] = check_efa(dist).to_json()
            payload["constructed"]["marginals_match_base"] = (
                marginals(dist) == marginals(base)
            )
        if eid == 4:
            payload["constructed"]["pep"] = check_pep(dist).to_json()
            payload["constructed"]["pea"] = check_pea(dist).to_json()
    return payload


def cmd_examples(args) -> int:
    ids = [args.id] if args.id is not None else list(WORKED_EXAMPLE_IDS)
    payloads = [_example_payload(eid, _max_nodes(args)) for eid in ids]
    if args.json:
        print(json.dumps({"examples": payloads}, indent=2))
        return EXIT_OK
    for payload in payloads:
        print(f"example {payload['id']}")
        print("  utilities:")
        for row in payload["utilities"]:
            print("    " + " ".join(row))
        if "constructed" in payload:
            c = payload["constructed"]
            print(f"  constructed mechanism: {c['name']} (base: {c['base']})")
            for entry in c["distribution"]:
                owners = " ".join("-" if o is None else str(o) for o in entry["owners"])
                print(f"    {entry['probability']:>6}  owners: {owners}")
            if "efa" in c:
                state = "holds" if c["efa"]["holds"] else "fails"
                print(f"  envy-freeness ex ante: {state};"
                      f" marginals match base: {c['marginals_match_base']}")
            if "pep" in c:
                print(f"  efficiency ex post: {'holds' if c['pep']['holds'] else 'fails'};"
                      f" ex ante: {'holds' if c['pea']['holds'] else 'fails'}")
        else:
            for name, entries in payload["mechanisms"].items():
                cells = ", ".join(
                    f"{e['probability']} -> "
                    + " ".join("-" if o is None else str(o) for o in e["owners"])
                    for e in entries
                )
                print(f"  {name}: {cells}")
        print()
    return EXIT_OK


# --- table -------------------------------------------------------------

@dataclass
class CellOutcome:
    verdict: bool
    witness_instance: Optional[str] = None
    witness: Optional[dict] = None


def _axiom_cell(column: str, block: str,
                runs: Sequence[tuple[str, AllocationDistribution]],
                max_nodes: Optional[int]) -> CellOutcome:
    for label, dist in runs:
        if column == "befp":
            verdict = (check_befp(dist) if block == "binary"
                       else check_envy_bounded(dist, bound=1))
        elif column in ("pea", "pep"):
            verdict = CHECKERS[column](dist, max_nodes=max_nodes)
        else:
            verdict = CHECKERS[column](dist)
        if not verdict.holds:
            payload = {} if verdict.witness is None else verdict.witness.to_json()
            if verdict.margin is not None:
                payload["margin"] = format_value(verdict.margin)
            return CellOutcome(False, label, payload)
    return CellOutcome(True)


def _search_cell(column: str, mech: Mechanism,
                 suite: Sequence[tuple[str, Instance]],
                 max_nodes: Optional[int]) -> CellOutcome:
    for label, inst in suite:
        if column == "sp":
            found = sp_falsify(mech, inst, max_nodes=max_nodes)
        else:
            found = osp_falsify(mech, inst, max_nodes=max_nodes)
        if found is not None:
            return CellOutcome(False, label, found.to_json())
    return CellOutcome(True)


def _evaluate_block(block: str, suite: Sequence[tuple[str, Instance]],
                    max_nodes: Optional[int]) -> dict[str, dict[str, CellOutcome]]:
    out: dict[str, dict[str, CellOutcome]] = {}
    for mech_name in BLOCK_ROWS[block]:
        mech = get_mechanism(mech_name)
        runs = [(label, mech.run(inst, max_nodes=max_nodes)) for label, inst in suite]
        cells: dict[str, CellOutcome] = {}
        for column in COLUMNS:
            if column in ("sp", "osp"):
                cells[column] = _search_cell(column, mech, suite, max_nodes)
            else:
                cells[column] = _axiom_cell(column, block, runs, max_nodes)
        out[mech_name] = cells
    return out


def _cell_mark(verdict: bool, prior: bool) -> str:
    return ("+" if verdict else "x") + ("*" if prior else "")


def cmd_table(args) -> int:
    if args.write_manifest is not None:
        text = json.dumps(build_table_manifest(args.per_block, args.seed), indent=2)
        if args.write_manifest == "-":
            print(text)
        else:
            Path(args.write_manifest).write_text(text + "\n", encoding="utf-8")
        return EXIT_OK
    if args.manifest is not None:
        manifest = load_manifest(_read_text(args.manifest))
    else:
        manifest = load_manifest(build_table_manifest(args.per_block, args.seed))
    blocks = [b for b in BLOCKS if b in manifest]
    if args.block:
        blocks = [b for b in blocks if b in args.block]
    if not blocks:
        raise ValueError("no blocks selected")
    nodes = _max_nodes(args)
    started = time.perf_counter()
    mismatches: list[dict] = []
    report: dict = {"columns": list(COLUMNS), "blocks": {}}
    for block in blocks:
        suite = manifest[block]
        results = _evaluate_block(block, suite, nodes)
        rows = []
        for mech_name in BLOCK_ROWS[block]:
            cells = {}
            for column in COLUMNS:
                outcome = results[mech_name][column]
                expected, prior = EXPECTED_TABLE[block][mech_name][column]
                matches = outcome.verdict == expected
                cells[column] = {
                    "verdict": "+" if outcome.verdict else "x",
                    "expected": "+" if expected else "x",
                    "matches": matches,
                    "source": "prior work" if prior else "established here",
                    "witness_instance": outcome.witness_instance,
                    "witness": outcome.witness,
                }
                if not matches:
                    mismatches.append({
                        "block": block,
                        "mechanism": mech_name,
                        "column": column,
                        "expected": "+" if expected else "x",
                        "computed": "+" if outcome.verdict else "x",
                        "witness_instance": outcome.witness_instance,
                    })
            rows.append({"mechanism": mech_name, "cells": cells})
        report["blocks"][block] = {"instances": len(suite), "rows": rows}
    report["mismatches"] = mismatches
    report["all_match"] = not mismatches
    if args.json:
        print(json.dumps(report, indent=2))
        return EXIT_OK if not mismatches else EXIT_FAIL
    print("recomputed verdict table")
    print("columns: " + " ".join(COLUMNS))
    print("cells: + holds on the block suite, x fails with a stored witness,"
          " * verdict reported in earlier work")
    print("the befp column checks the one-item envy bound outside the binary block")
    for block in blocks:
        info = report["blocks"][block]
        print()
        print(f"block: {BLOCK_TITLES[block]} ({info['instances']} instances)")
        header = f"  {'mechanism':<14}" + "".join(f"{c:<5}" for c in COLUMNS)
        print(header)
        for row in info["rows"]:
            marks = []
            for column in COLUMNS:
                cell = row["cells"][column]
                marks.append(_cell_mark(cell["verdict"] == "+",
                                        cell["source"] == "prior work"))
            print(f"  {row['mechanism']:<14}" + "".join(f"{m:<5}" for m in marks))
    print()
    if mismatches:
        for mm in mismatches:
            where = f"{mm['block']}/{mm['mechanism']}/{mm['column']}"
            inst = f" (instance {mm['witness_instance']})" if mm["witness_instance"] else ""
            print(f"MISMATCH {where}: expected {mm['expected']},"
                  f" computed {mm['computed']}{inst}")
    else:
        print("all verdicts match the expected table")
    print(f"runtime: {time.perf_counter() - started:.1f}s")
    return EXIT_OK if not mismatches else EXIT_FAIL


# --- theorems ----------------------------------------------------------

def _positive_columns(bids: BidProfile) -> tuple[tuple[int, ...], ...]:
    return tuple(
        tuple(i for i in range(bids.n) if bids.bid(i, j) > 0) for j in range(bids.m)
    )


def _theorem_suites(seed: int):
    base = counterexample_instances()
    mixed = base + random_suite(12, seed)
    identical = ([(l, i) for l, i in base if validate_domain(i, "identical-cardinal")]
                 + random_suite(8, seed + 1, domains=("identical-cardinal",)))
    binary = ([(l, i) for l, i in base if validate_domain(i, "binary")]
              + random_suite(8, seed + 2, domains=("binary",)))
    positive = [(l, i) for l, i in mixed
                if all(x > 0 for row in i.utilities for x in row)]
    return mixed, identical, binary, positive


def _theorem_checks(seed: int, nodes: Optional[int]) -> list[dict]:
    mixed, identical, binary, positive = _theorem_suites(seed)
    checks: list[dict] = []

    def add(name: str, ok: bool, note: str) -> None:
        checks.append({"name": name, "ok": bool(ok), "note": note})

    # 1: the engine's incremental frontier agrees with brute-force search,
    # and the frontier rule's support is exactly the enumerated frontier
    ok = True
    pl = pareto_like()
    for _, inst in mixed:
        bids = BidProfile.sincere(inst)
        levels, viable = pareto_levels(bids, _positive_columns(bids))
        for j in range(1, inst.m + 1):
            sub = inst.prefix(j)
            brute = {utility_vector(a, sub.utilities)
                     for a in pareto_frontier(sub, max_nodes=nodes)}
            ok = ok and set(levels[j - 1]) == brute
            ok = ok and viable[j - 1] <= brute
        support = {a.owners for a in pl.run(inst, max_nodes=nodes).support()}
        front = {a.owners for a in pareto_frontier(inst, max_nodes=nodes)}
        ok = ok and support == front
    add("pareto-frontier-routes-agree", ok,
        f"incremental vs enumerated frontiers on {len(mixed)} instances, all prefixes")

    # 2: honesty is optimal exactly for sign-only, history-free rules
    expected_profiles = {
        "osd": (True, True), "orp": (True, True), "like": (True, True),
        "balanced-like": (True, False), "maximum-like": (False, True),
        "pareto-like": (False, False),
    }
    bad = []
    for name, flags in expected_profiles.items():
        prof = classify(get_mechanism(name), mixed, max_nodes=nodes)
        if (prof.step, prof.memoryless) != flags or not prof.characterization_consistent:
            bad.append(name)
    add("honesty-needs-sign-and-history-independence", not bad,
        "profiles diverge for: " + ", ".join(bad) if bad else
        f"six mechanisms profiled on {len(mixed)} instances")

    # 3: the direct uniform-priority evaluation equals the explicit mixture
    ok = True
    for _, inst in mixed:
        fact = math.factorial(inst.n)
        parts = [(osd(PriorityOrder(p)).run(inst, max_nodes=nodes), Fraction(1, fact))
                 for p in permutations(range(inst.n))]
        ok = ok and AllocationDistribution.mix(parts).entries == orp().run(
            inst, max_nodes=nodes).entries
    add("priority-mixture-equals-direct-average", ok,
        f"checked on {len(mixed)} instances")

    # 4: every positive bidder gets an equal share of each item
    ok = True
    for _, inst in mixed:
        p = marginals(like().run(inst, max_nodes=nodes))
        for j in range(inst.m):
            pos = [i for i in range(inst.n) if inst.utility(i, j) > 0]
            for i in range(inst.n):
                want = Fraction(1, len(pos)) if i in pos else 0
                ok = ok and p.entry(i, j) == want
        ok = ok and marginals(orp().run(inst, max_nodes=nodes)) == p
    add("positive-bidders-share-items-equally", ok,
        f"marginals and the uniform-priority match on {len(mixed)} instances")

    # 5: equal sharing is envy-free ex ante, including the strong variant
    ok = True
    for mech in (like(), orp()):
        for _, inst in mixed:
            dist = mech.run(inst, max_nodes=nodes)
            ok = ok and check_efa(dist).holds and check_sefa(dist).holds
    add("uniform-sharing-is-envy-free-ex-ante", ok,
        f"both sharing rules on {len(mixed)} instances")

    # 6: bundle balancing caps envy at one item on 0/1 utilities; plain
    #    sharing does not
    bl_ok = all(check_befp(balanced_like().run(i, max_nodes=nodes)).holds
                for _, i in binary)
    like_breaks = any(not check_befp(like().run(i, max_nodes=nodes)).holds
                      for _, i in binary)
    add("balanced-bundles-bound-envy-on-binary", bl_ok and like_breaks,
        f"{len(binary)} binary instances; unbalanced sharing exceeds the bound")

    # 7: dictatorships and highest-bidder rules are efficient both ways
    ok = True
    for _, inst in mixed:
        mechs = (osd(), osd(tuple(reversed(range(inst.n)))), maximum_like())
        for mech in mechs:
            dist = mech.run(inst, max_nodes=nodes)
            ok = (ok and check_pea(dist, max_nodes=nodes).holds
                  and check_pep(dist, max_nodes=nodes).holds)
    add("dictatorships-and-top-bidders-are-efficient", ok,
        f"two priority orders and the top-bidder rule on {len(mixed)} instances")

    # 8: the frontier rule never outputs a dominated allocation, yet its
    #    lottery can be dominated
    pep_ok = all(check_pep(pareto_like().run(i, max_nodes=nodes),
                           max_nodes=nodes).holds for _, i in mixed)
    pea_breaks = any(not check_pea(pareto_like().run(i, max_nodes=nodes),
                                   max_nodes=nodes).holds for _, i in mixed)
    add("frontier-rule-is-efficient-ex-post-only", pep_ok and pea_breaks,
        f"{len(mixed)} instances; at least one lottery improvement found")

    # 9: item-by-item envy-freeness pins marginals to equal shares when
    #    everyone likes everything
    ok = True
    for _, inst in positive:
        dist = like().run(inst, max_nodes=nodes)
        ok = (ok and check_prefix_efa(dist).holds
              and marginals(dist) == efa_forced_marginals(inst))
    add("stepwise-envy-freeness-forces-equal-shares", ok,
        f"{len(positive)} all-positive instances")

    # 10: those forced equal shares can be dominated, so stepwise envy-free
    #     and ex ante efficient are incompatible
    inst, _ = worked_example(1)
    forced = efa_forced_marginals(inst)
    own = expected_utilities(forced, inst.utilities).own()
    sol = pea_solution(own, inst, max_nodes=nodes)
    ok = own == (Fraction(3, 2), Fraction(3, 2)) and sol.objective == 1
    dl = like().run(inst, max_nodes=nodes)
    ok = ok and check_prefix_efa(dl).holds and not check_pea(dl, max_nodes=nodes).holds
    for mech in (osd(), maximum_like()):
        d = mech.run(inst, max_nodes=nodes)
        ok = (ok and check_pea(d, max_nodes=nodes).holds
              and not check_prefix_efa(d).holds)
    add("equal-shares-conflict-with-ex-ante-efficiency", ok,
        "forced shares lose total utility 1 to a lottery on the swap instance")

    # 11: with zero utilities allowed, envy-freeness ex ante does not pin
    #     down the marginals
    inst2, tilted = worked_example(2)
    d2 = tilted.run(inst2, max_nodes=nodes)
    ok = (check_efa(d2).holds
          and marginals(d2) != marginals(like().run(inst2, max_nodes=nodes)))
    add("tilted-variant-stays-envy-free-ex-ante", ok,
        "hand-tilted sharing keeps envy-freeness with different marginals")

    # 12: changing one instance's outcome can break efficiency outright
    inst4, patched = worked_example(4)
    d4 = patched.run(inst4, max_nodes=nodes)
    v_pep = check_pep(d4, max_nodes=nodes)
    v_pea = check_pea(d4, max_nodes=nodes)
    ok = (not v_pep.holds) and (not v_pea.holds) and v_pea.margin == Fraction(3, 4)
    add("one-instance-exception-breaks-efficiency", ok,
        "patched top-bidder rule is dominated ex post and ex ante")

    # 13: with identical utilities the rules collapse and become efficient
    ok = True
    for _, inst in identical:
        dl = like().run(inst, max_nodes=nodes)
        ok = ok and pareto_like().run(inst, max_nodes=nodes).entries == dl.entries
        ok = ok and maximum_like().run(inst, max_nodes=nodes).entries == dl.entries
        ok = ok and marginals(balanced_like().run(inst, max_nodes=nodes)) == marginals(dl)
        for mech in (like(), balanced_like()):
            d = mech.run(inst, max_nodes=nodes)
            ok = (ok and check_pea(d, max_nodes=nodes).holds
                  and check_pep(d, max_nodes=nodes).holds)
    add("identical-preferences-collapse-the-rules", ok,
        f"{len(identical)} identical-utility instances")

    return checks


def cmd_theorems(args) -> int:
    started = time.perf_counter()
    checks = _theorem_checks(args.seed, _max_nodes(args))
    ok = all(c["ok"] for c in checks)
    if args.json:
        print(json.dumps({"checks": checks, "all_ok": ok}, indent=2))
        return EXIT_OK if ok else EXIT_FAIL
    width = max(len(c["name"]) for c in checks)
    for c in checks:
        mark = "ok  " if c["ok"] else "FAIL"
        print(f"{mark} {c['name']:<{width}}  {c['note']}")
    print(f"{'all claims verified' if ok else 'SOME CLAIMS FAILED'}"
          f" ({time.perf_counter() - started:.1f}s)")
    return EXIT_OK if ok else EXIT_FAIL


# --- parser ------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fairdiv",
                     description="exact online fair division mechanisms")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add_instance_opts(p):
        p.add_argument("--instance", metavar="PATH",
                       help="instance file, or - for stdin")
        p.add_argument("--example", type=int, choices=WORKED_EXAMPLE_IDS,
                       help="use a worked example's instance")

    def add_common(p, *, bids=True):
        p.add_argument("--max-nodes", type=int, metavar="N",
                       help="work bound on expansion tree leaves"
                            " (env FAIRDIV_MAX_NODES)")
        p.add_argument("--json", action="store_true", help="machine readable output")
        if bids:
            p.add_argument("--bids", metavar="PATH",
                           help="bid matrix file (defaults to sincere bids)")

    p_run = sub.add_parser("run", help="run a mechanism and print its distribution")
    p_run.add_argument("mechanism", choices=MECHANISM_NAMES)
    p_run.add_argument("--sigma", metavar="ORDER",
                       help="1-based priority order for osd, e.g. 2,1")
    add_instance_opts(p_run)
    add_common(p_run)
    p_run.set_defaults(func=cmd_run)

    p_check = sub.add_parser("check", help="check axioms on a mechanism's output")
    p_check.add_argument("mechanism", choices=MECHANISM_NAMES)
    p_check.add_argument("--sigma", metavar="ORDER")
    add_instance_opts(p_check)
    p_check.add_argument("--axiom", action="append",
                         choices=["all", "efp", "efa", "sefp", "sefa", "befp",
                                  "envy-bounded", "pea", "pep", "prefix-efa"],
                         help="repeatable; default: all applicable")
    p_check.add_argument("--bound", default="1", metavar="P/Q",
                         help="envy bound for the envy-bounded axiom")
    add_common(p_check)
    p_check.set_defaults(func=cmd_check)

    p_fal = sub.add_parser("falsify",
                           help="search for deviations or behavioral witnesses")
    p_fal.add_argument("mechanism", choices=MECHANISM_NAMES)
    p_fal.add_argument("--sigma", metavar="ORDER")
    add_instance_opts(p_fal)
    p_fal.add_argument("--property", choices=["sp", "osp", "step", "memoryless"],
                       default="sp")
    p_fal.add_argument("--extra-bid", action="append", metavar="P/Q",
                       help="extra value to add to every bid menu; repeatable")
    p_fal.add_argument("--max-candidates", type=int, default=10**6,
                       help="bound on candidate rows per agent")
    add_common(p_fal, bids=False)
    p_fal.set_defaults(func=cmd_falsify)

    p_tab = sub.add_parser("table", help="recompute the verdict table")
    p_tab.add_argument("--manifest", metavar="PATH",
                       help="JSON suite manifest, or - for stdin")
    p_tab.add_argument("--per-block", type=int, default=200,
                       help="suite size per block for the default manifest")
    p_tab.add_argument("--seed", type=int, default=20240801,
                       help="seed for the default manifest's random fill")
    p_tab.add_argument("--block", action="append", choices=BLOCKS,
                       help="restrict to one block; repeatable")
    p_tab.add_argument("--write-manifest", metavar="PATH",
                       help="write the default manifest and exit (- for stdout)")
    add_common(p_tab, bids=False)
    p_tab.set_defaults(func=cmd_table)

    p_thm = sub.add_parser("theorems", help="mechanically check the named claims")
    p_thm.add_argument("--seed", type=int, default=20240803,
                       help="seed for the random part of the check suites")
    add_common(p_thm, bids=False)
    p_thm.set_defaults(func=cmd_theorems)

    p_gen = sub.add_parser("gen", help="generate instances from a domain")
    p_gen.add_argument("--domain", choices=DOMAIN_NAMES, required=True)
    p_gen.add_argument("-n", "--agents", type=int, required=True)
    p_gen.add_argument("-m", "--items", type=int, required=True)
    p_gen.add_argument("--seed", type=int, required=True)
    p_gen.add_argument("--bound", type=int, default=3)
    p_gen.add_argument("--count", type=int, default=1)
    p_gen.add_argument("--out-dir", metavar="DIR")
    p_gen.set_defaults(func=cmd_gen)

    p_ex = sub.add_parser("examples", help="print the built-in worked examples")
    p_ex.add_argument("--id", type=int, choices=WORKED_EXAMPLE_IDS)
    add_common(p_ex, bids=False)
    p_ex.set_defaults(func=cmd_examples)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        _fail(str(exc))
        return EXIT_USAGE
    except WorkBoundExceeded as exc:
        _fail(str(exc))
        return EXIT_INCONCLUSIVE
    except (ValueError, OSError) as exc:
        _fail(str(exc))
        return EXIT_USAGE


def entry() -> None:
    sys.exit(main())
