"""Command-line driver: run scenarios, sweep parameters, print oracle tables.

Exit codes: 0 success, 1 scenario/usage errors, 2 internal protocol
violations (simulator bugs).
"""

from __future__ import annotations

import argparse
import copy
import json
import sys

from .errors import ProtocolViolation, ScenarioError
from .report import build_aggregate, build_report, emit_report
from .scenario import Scenario, scenario_from_dict
from .simnet import run_simulation
from .verdict import decision_table, default_quorum


def _read_scenario_doc(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file: {exc}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"syntax error: {exc}") from None
    if not isinstance(doc, dict):
        raise ScenarioError("top level: expected a JSON object")
    return doc


def _write_output(data: bytes, out: str | None) -> None:
    if out is None:
        sys.stdout.buffer.write(data)
        sys.stdout.buffer.flush()
    else:
        with open(out, "wb") as fh:
            fh.write(data)


def _run_repetitions(scenario: Scenario, base_seed: int, want_trace: bool):
    """One RunResult per repetition; repetition k runs with seed base+k."""
    results = []
    for rep in range(scenario.repetitions):
        results.append(
            run_simulation(scenario, seed=base_seed + rep, collect_trace=want_trace)
        )
    return results


def _cmd_run(args) -> int:
    scenario = scenario_from_dict(_read_scenario_doc(args.scenario))
    base_seed = scenario.seed if args.seed is None else args.seed
    results = _run_repetitions(scenario, base_seed, want_trace=args.trace is not None)
    reports = [build_report(res, scenario) for res in results]
    if args.trace is not None:
        lines: list[str] = []
        for rep, res in enumerate(results):
            if scenario.repetitions > 1:
                lines.append(f"REP {rep} seed={res.seed}")
            assert res.trace is not None
            lines.extend(res.trace)
        with open(args.trace, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
    if len(reports) == 1:
        payload = emit_report(reports[0], args.format)
    else:
        payload = emit_report(build_aggregate(reports, base_seed), args.format)
    _write_output(payload, args.out)
    return 0


def _set_path(doc: dict, dotted: str, value) -> None:
    keys = dotted.split(".")
    node = doc
    for key in keys[:-1]:
        nxt = node.setdefault(key, {})
        if not isinstance(nxt, dict):
            raise ScenarioError(f"sweep param {dotted!r}: {key} is not an object")
        node = nxt
    node[keys[-1]] = value


def _parse_sweep_value(token: str):
    try:
        return json.loads(token)
    except json.JSONDecodeError:
        raise ScenarioError(f"sweep value {token!r} is not a JSON scalar") from None


_SWEEP_COLUMNS = (
    "param",
    "value",
    "repetitions",
    "rounds_executed",
    "sent",
    "delivered",
    "dropped",
    "late",
    "trusted",
    "flagged",
    "inconclusive",
    "false_positives",
    "detected_devices",
    "total_energy",
)


def _cmd_sweep(args) -> int:
    base_doc = _read_scenario_doc(args.scenario)
    values = [_parse_sweep_value(tok) for tok in args.values.split(",")]
    rows = []
    for value in values:
        doc = copy.deepcopy(base_doc)
        _set_path(doc, args.param, value)
        scenario = scenario_from_dict(doc)
        seed = scenario.seed if args.seed is None else args.seed
        results = _run_repetitions(scenario, seed, want_trace=False)
        reports = [build_report(res, scenario) for res in results]
        agg = build_aggregate(reports, seed)
        rows.append(
            {
                "param": args.param,
                "value": value,
                "repetitions": agg.repetitions,
                "rounds_executed": agg.rounds_executed,
                "sent": agg.messages["sent"],
                "delivered": agg.messages["delivered"],
                "dropped": agg.messages["dropped"],
                "late": agg.messages["late"],
                "trusted": agg.verdicts["TRUSTED"],
                "flagged": agg.verdicts["FLAGGED"],
                "inconclusive": agg.verdicts["INCONCLUSIVE"],
                "false_positives": agg.false_positives,
                "detected_devices": len(agg.detections),
                "total_energy": agg.total_energy,
            }
        )
    if args.format == "json":
        payload = (json.dumps(rows, indent=2) + "\n").encode("utf-8")
    else:
        lines = [",".join(_SWEEP_COLUMNS)]
        for row in rows:
            lines.append(",".join(str(row[col]) for col in _SWEEP_COLUMNS))
        payload = ("\n".join(lines) + "\n").encode("utf-8")
    _write_output(payload, args.out)
    return 0


def _cmd_oracle_verdict_table(args) -> int:
    if args.n < 3:
        raise ScenarioError(f"--n: group size must be at least 3, got {args.n}")
    n_checkers = args.n - 1
    quorum = default_quorum(n_checkers) if args.quorum is None else args.quorum
    if not 1 <= quorum <= n_checkers:
        raise ScenarioError(f"--quorum: must be in [1, {n_checkers}], got {quorum}")
    lines = ["agree,disagree,missing,outcome"]
    for agree, disagree, missing, outcome in decision_table(n_checkers, quorum):
        lines.append(f"{agree},{disagree},{missing},{outcome.value}")
    _write_output(("\n".join(lines) + "\n").encode("utf-8"), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="collabtrust",
        description="Deterministic simulator for collaborative majority-vote device checking.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute one scenario and emit its report")
    run_p.add_argument("--scenario", required=True, help="path to a scenario JSON file")
    run_p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    run_p.add_argument("--out", default=None, help="report file (default: stdout)")
    run_p.add_argument("--format", choices=("json", "csv"), default="json")
    run_p.add_argument("--trace", default=None, help="write the event trace to this file")

    sweep_p = sub.add_parser("sweep", help="re-run a scenario across parameter values")
    sweep_p.add_argument("--scenario", required=True)
    sweep_p.add_argument("--param", required=True, help="dotted key, e.g. network.drop_prob")
    sweep_p.add_argument("--values", required=True, help="comma-separated JSON scalars")
    sweep_p.add_argument("--seed", type=int, default=None)
    sweep_p.add_argument("--out", default=None)
    sweep_p.add_argument("--format", choices=("json", "csv"), default="csv")

    oracle_p = sub.add_parser("oracle", help="print audit tables used as test oracles")
    oracle_sub = oracle_p.add_subparsers(dest="oracle_command", required=True)
    vt = oracle_sub.add_parser(
        "verdict-table", help="exhaustive verdict outcomes for a group size"
    )
    vt.add_argument("--n", type=int, required=True, help="group size")
    vt.add_argument("--quorum", type=int, default=None)
    vt.add_argument("--out", default=None)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "sweep":
            return _cmd_sweep(args)
        return _cmd_oracle_verdict_table(args)
    except ScenarioError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return 1
    except ProtocolViolation as exc:
        print(f"protocol violation: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
