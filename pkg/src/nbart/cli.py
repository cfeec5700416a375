"""Command-line front end.

    nbart run --scenario FILE [--scenario FILE ...] --out DIR [--seeds a..b] [--expect-failure] [--parallel N]
    nbart game --scenario FILE --out DIR
    nbart complexity --scenario GRIDFILE --out DIR
    nbart validate --out DIR [--full] [--seeds a..b] [--mutation NAME] [--expect-failure]

Exit status: 0 success, 1 a check failed (or, with --expect-failure, none
did), 2 invalid input.
"""

from __future__ import annotations

import argparse
import configparser
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import List, Optional

from .errors import InvalidParams, NbartError

EXIT_OK, EXIT_FAIL, EXIT_INVALID = 0, 1, 2


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text)
    tmp.replace(path)


def _json(data) -> str:
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


def load_scenario(path, seeds: Optional[str] = None, simultaneous: bool = True):
    from .scenario import load, parse_seeds
    from .simnet import run

    try:
        sc = load(path)
    except configparser.Error as e:
        raise InvalidParams(f"cannot parse {path}: {e}") from None
    except OSError as e:
        raise InvalidParams(f"cannot read {path}: {e.strerror}") from None
    if seeds:
        sc = replace(sc, seeds=parse_seeds(seeds))
    sc.validate(simultaneous)
    if sc.regime != "basic":
        sc.costs.check_benefits(run(replace(sc, byzantine={}, coalitions=()), 0, "fifo"))
    return sc


# -- run -------------------------------------------------------------------------


def _cells(sc):
    from .scenario import sweep_assignments

    for seed in sc.seeds:
        assignments = list(sweep_assignments(sc, seed)) if sc.byzantine_sweep else [dict(sc.byzantine)]
        for k, byz in enumerate(assignments):
            for policy in sc.policies:
                yield seed, policy, k, byz


def _one_run(args):
    from .game import nbart_oracles, predicates, utility
    from .metrics import measure
    from .simnet import export_text, run

    sc, seed, policy, k, byz, keep_trace = args
    t = run(replace(sc, byzantine=byz), seed, policy)
    oracles = nbart_oracles(t)
    preds, _ = predicates(t)
    rec = {
        "seed": seed,
        "policy": policy,
        "assignment": k,
        "byzantine": {str(n): b for n, b in sorted(byz.items())},
        "oracles": {k: r.passed for k, r in oracles.results.items()},
        "passed": oracles.all_passed,
        "predicates": {str(n): v for n, v in sorted(preds.items())},
        "certify_count": sum(1 for _ in t.of_kind("certify")),
        "utility": {n: row["u"] for n, row in utility(t, sc.costs).as_dict().items()},
    }
    if not oracles.all_passed:
        rec["witness"] = {k: oracles.results[k].witness for k in oracles.failed()}
    if not byz and not sc.coalitions:
        rec["complexity"] = measure(t).as_dict()
    keep = keep_trace == "all" or (keep_trace == "failures" and not oracles.all_passed)
    return rec, export_text(t) if keep else None


def cmd_run(args) -> int:
    scenarios = [load_scenario(path, args.seeds) for path in args.scenario]
    out = Path(args.out)
    names = [sc.name for sc in scenarios]
    if len(set(names)) != len(names):
        raise InvalidParams("scenario names must be distinct when running several")
    status = EXIT_OK
    for sc in scenarios:
        where = out if len(scenarios) == 1 else out / sc.name
        code = _run_scenario(sc, where, args)
        status = max(status, code)
    return status


def _run_scenario(sc, out: Path, args) -> int:
    jobs = [(sc, seed, policy, k, byz, args.traces) for seed, policy, k, byz in _cells(sc)]
    if args.parallel > 1:
        with ProcessPoolExecutor(args.parallel) as ex:
            results = list(ex.map(_one_run, jobs, chunksize=64))
    else:
        results = [_one_run(j) for j in jobs]
    runs = []
    worst: dict = {}
    for rec, trace_text in results:
        runs.append(rec)
        if trace_text is not None:
            name = f"{sc.name}-{rec['policy']}-s{rec['seed']}-a{rec['assignment']}.trace"
            _write(out / "traces" / name, trace_text)
        for n, u in rec["utility"].items():
            if n not in rec["byzantine"]:
                worst[n] = min(worst.get(n, u), u)
    failed = [r for r in runs if not r["passed"]]
    expect_failure = args.expect_failure or sc.expect_failure
    report = {
        "scenario": sc.name,
        "runs": len(runs),
        "passed": len(runs) - len(failed),
        "pass_rate": (len(runs) - len(failed)) / len(runs) if runs else 0.0,
        "worst_utility": worst,
        "expect_failure": expect_failure,
        "first_failure": failed[0] if failed else None,
    }
    _write(out / "report.json", _json(report))
    _write(out / "runs.jsonl", "".join(json.dumps(r, sort_keys=True) + "\n" for r in runs))
    print(f"{sc.name}: {report['passed']}/{len(runs)} runs pass all seven properties")
    if failed:
        f = failed[0]
        bad = [k for k, ok in f["oracles"].items() if not ok]
        print(f"first failure: seed {f['seed']} {f['policy']} byz {f['byzantine']}: {', '.join(bad)}")
    if expect_failure:
        return EXIT_OK if failed else EXIT_FAIL
    return EXIT_FAIL if failed else EXIT_OK


# -- game ------------------------------------------------------------------------------


def cotolerance_table(result) -> str:
    head = ["coalition", "deviation", "claim", "measured", "cells", "min_benefit", "u_bar", "u_bar_honest", "oracles", "verdict"]
    lines = ["\t".join(head)]
    for r in result.rows:
        lines.append("\t".join([
            r.coalition, r.deviation,
            "compliant" if r.claimed_compliant else "non-compliant",
            "compliant" if r.compliant else "non-compliant",
            str(r.cells),
            ",".join(f"{k}={v:g}" for k, v in r.min_benefit.items()),
            ",".join(f"{k}={v:g}" for k, v in r.u_bar.items()),
            ",".join(f"{k}={v:g}" for k, v in r.u_bar_honest.items()),
            "pass" if r.oracles_ok else "FAIL",
            "ok" if r.verdict else "FAIL: " + r.witness,
        ]))
    lines.append("")
    lines.append(f"verdict: {'cotolerant over catalog' if result.verdict else 'NOT cotolerant'}")
    if result.nash is not None:
        lines.append(f"nash: {'no unilateral catalog deviation beats the honest profile' if result.nash else 'violated'}")
    lines.append(f"runs: {result.runs}")
    lines.append(f"caveat: {result.caveat}")
    return "\n".join(lines) + "\n"


def cmd_game(args) -> int:
    from .game import check_cotolerance

    # each listed coalition is tested on its own, so they may overlap
    sc = load_scenario(args.scenario, None, simultaneous=False)
    if sc.regime != "game":
        sc.params.validate("game")
    if not sc.coalitions and not sc.singletons:
        raise InvalidParams("game needs [coalitions] or singletons = true in [game]")
    res = check_cotolerance(sc)
    out = Path(args.out)
    _write(out / "cotolerance.txt", cotolerance_table(res))
    _write(out / "game.json", _json({"scenario": sc.name, **res.as_dict()}))
    print(cotolerance_table(res).split("\n\n")[-1], end="")
    ok = res.verdict and (res.nash is not False)
    return EXIT_OK if ok else EXIT_FAIL


# -- complexity --------------------------------------------------------------------------


def load_grid(path):
    from .metrics import GridCell
    from .topology import Params

    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(Path(path).read_text())
    except (configparser.Error, OSError) as e:
        raise InvalidParams(f"cannot read grid {path}: {e}") from None
    keys = {"n_p", "n_c", "f_p", "f_c", "b", "omega", "value_bytes", "seed"}
    cells, crypto = [], {}
    for name in cp.sections():
        sec = cp[name]
        if name == "crypto":
            extra = set(sec) - {"hash_bits", "sig_bits"}
            if extra:
                raise InvalidParams(f"unknown keys in [crypto]: {', '.join(sorted(extra))}")
            crypto = {k: int(v) for k, v in sec.items()}
            continue
        extra = set(sec) - keys
        if extra:
            raise InvalidParams(f"unknown keys in [{name}]: {', '.join(sorted(extra))}")
        try:
            params = Params(int(sec["n_p"]), int(sec["n_c"]), int(sec["f_p"]), int(sec["f_c"]), int(sec["b"]),
                            omega=int(sec.get("omega", "8")))
            cells.append((name, GridCell(params, int(sec["value_bytes"]), int(sec.get("seed", "0")))))
        except KeyError as e:
            raise InvalidParams(f"missing key {e.args[0]} in [{name}]") from None
    if not cells:
        raise InvalidParams("grid has no cells")
    return cells, crypto


def cmd_complexity(args) -> int:
    from .codec import ValuePayload
    from .metrics import sweep
    from .scenario import Scenario

    cells, crypto = load_grid(args.scenario)
    base = Scenario(cells[0][1].params, ValuePayload(b"\x00" * 8), **crypto)
    reports = sweep(base, [c for _, c in cells])
    rows = [{"cell": name, **r.as_dict()} for (name, _), r in zip(cells, reports)]
    cols = ["cell", "n_p", "n_c", "f_p", "b", "l_v", "producer_consumer_messages", "formula_msgs",
            "block_bits", "formula_block_bits", "hash_sig_bits", "formula_hash_sig_bits", "framing_bits", "bits_ratio"]
    text = "\t".join(cols) + "\n" + "".join("\t".join(str(r[c]) for c in cols) + "\n" for r in rows)
    out = Path(args.out)
    _write(out / "complexity.txt", text)
    _write(out / "complexity.json", _json(rows))
    print(text, end="")
    exact = all(r["producer_consumer_messages"] == r["formula_msgs"]
                and r["block_bits"] == r["formula_block_bits"]
                and r["hash_sig_bits"] == r["formula_hash_sig_bits"] for r in rows)
    return EXIT_OK if exact else EXIT_FAIL


# -- validate ------------------------------------------------------------------------------


def cmd_validate(args) -> int:
    from .scenario import parse_seeds
    from .simnet import export_text
    from .verification import MUTATIONS, conformance_suite

    if args.seeds:
        seeds = parse_seeds(args.seeds)
    else:
        seeds = range(500) if args.full else range(20)
    variant = None
    if args.mutation:
        if args.mutation not in MUTATIONS:
            raise InvalidParams(f"unknown mutation {args.mutation!r}; choose from {', '.join(MUTATIONS)}")
        variant = MUTATIONS[args.mutation]
    res = conformance_suite(seeds, variant, include_game=args.full)
    out = Path(args.out)
    lines = res.lines()
    _write(out / "conformance.txt", "\n".join(lines) + "\n")
    for c in res.checks:
        if c.witness_trace is not None:
            _write(out / "witness" / f"{c.name}.trace", export_text(c.witness_trace))
    print("\n".join(lines))
    if args.expect_failure:
        return EXIT_FAIL if res.passed else EXIT_OK
    return EXIT_OK if res.passed else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nbart", description="Simulate and check N-party BAR transfer.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a scenario over its seeds and check the seven properties")
    r.add_argument("--scenario", required=True, action="append", help="repeat to run several scenarios")
    r.add_argument("--out", required=True)
    r.add_argument("--seeds", help="override seeds, e.g. 0..499")
    r.add_argument("--expect-failure", action="store_true", help="succeed only if some run fails a property")
    r.add_argument("--parallel", type=int, default=1, metavar="N")
    r.add_argument("--traces", choices=("all", "failures", "none"), default="all")
    r.set_defaults(func=cmd_run)

    g = sub.add_parser("game", help="check cotolerance of the scenario's coalitions")
    g.add_argument("--scenario", required=True)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_game)

    c = sub.add_parser("complexity", help="measure message and bit counts over a parameter grid")
    c.add_argument("--scenario", required=True, help="grid file")
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_complexity)

    v = sub.add_parser("validate", help="run the conformance checks")
    v.add_argument("--out", required=True)
    v.add_argument("--full", action="store_true", help="500 seeds plus the coalition checks")
    v.add_argument("--seeds")
    v.add_argument("--mutation", help="run against a deliberately broken protocol")
    v.add_argument("--expect-failure", action="store_true")
    v.set_defaults(func=cmd_validate)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InvalidParams as e:
        print(f"invalid input: {e}", file=sys.stderr)
        return EXIT_INVALID
    except NbartError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
