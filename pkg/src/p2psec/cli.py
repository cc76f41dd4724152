"""Command line front end.

Exit codes: 0 on success, 1 for domain failures (invalid input, policy
conflicts, a failed challenge), 2 for usage errors.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from typing import Optional, Sequence

from .bench import DEFAULT_COUNTS, render_benchmark, run_benchmark
from .errors import P2PSecError
from .mac import (
    compile_policy,
    emit_rules,
    parse_avc,
    parse_challenge,
    render_contexts,
    verify_challenge,
)
from .policy_xml import parse_policy, to_peer_policy
from .simnet import parse_scenario, render_report, run_scenario


def _load_policy(path: str):
    with open(path, "rb") as handle:
        data = handle.read()
    return to_peer_policy(parse_policy(data))


def _cmd_compile(args: argparse.Namespace) -> int:
    compiled = compile_policy(_load_policy(args.policy))
    out = emit_rules(compiled)
    contexts = render_contexts(compiled)
    if contexts:
        out += "\n# contexts\n" + contexts
    sys.stdout.write(out)
    return 0


def _cmd_check(args: argparse.Namespace) -> int:
    policy = _load_policy(args.policy)
    findings = policy.conflict_report()
    if not findings:
        print(f"ok: {len(policy.domains)} domain(s), "
              f"{len(policy.resources)} file(s), no conflicts")
        return 0
    for scope_kind, scope_name, first, second in findings:
        print(f"conflict in {scope_kind} {scope_name}: {first.render()} "
              f"vs {second.render()}")
    return 1


def _cmd_simulate(args: argparse.Namespace) -> int:
    with open(args.scenario, "r", encoding="utf-8") as handle:
        scenario = parse_scenario(handle.read())
    if args.seed is not None:
        scenario = replace(scenario, seed=args.seed)
    config = scenario.config
    if args.refuse_threshold is not None:
        config = replace(config, refuse_threshold=args.refuse_threshold)
    if args.full_threshold is not None:
        config = replace(config, full_trust_threshold=args.full_threshold)
    if args.strict_conflicts:
        config = replace(config, strict_conflicts=True)
    scenario = replace(scenario, config=config)
    report = render_report(run_scenario(scenario))
    if args.out:
        with open(args.out, "w", encoding="utf-8") as handle:
            handle.write(report)
    else:
        sys.stdout.write(report)
    return 0


def _cmd_verify_challenge(args: argparse.Namespace) -> int:
    with open(args.challenge, "r", encoding="utf-8") as handle:
        challenge = parse_challenge(handle.read())
    with open(args.trace, "r", encoding="utf-8") as handle:
        records = [parse_avc(line) for line in handle
                   if line.strip()]
    result = verify_challenge(challenge, records)
    print(f"{'pass' if result.passed else 'fail'}: {result.reason}")
    return 0 if result.passed else 1


def _cmd_bench(args: argparse.Namespace) -> int:
    report = run_benchmark(counts=args.counts, repeats=args.repeats)
    sys.stdout.write(render_benchmark(report))
    return 0


def _parse_counts(text: str) -> tuple[int, ...]:
    try:
        counts = tuple(int(part) for part in text.split(",") if part)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad counts {text!r}") from None
    if not counts or any(c < 1 for c in counts):
        raise argparse.ArgumentTypeError(f"bad counts {text!r}")
    return counts


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="p2psec",
        description="Policy compilation, checking, negotiation simulation, "
                    "and challenge verification.")
    sub = parser.add_subparsers(dest="command", required=True)

    compile_p = sub.add_parser(
        "compile", help="project an XML policy onto MAC rules and labels")
    compile_p.add_argument("policy", help="policy XML file")
    compile_p.set_defaults(func=_cmd_compile)

    check_p = sub.add_parser(
        "check", help="validate an XML policy and report conflicts")
    check_p.add_argument("policy", help="policy XML file")
    check_p.set_defaults(func=_cmd_check)

    sim_p = sub.add_parser("simulate", help="run a scenario file")
    sim_p.add_argument("scenario", help="scenario file")
    sim_p.add_argument("--seed", type=int, default=None,
                       help="override the scenario seed")
    sim_p.add_argument("--refuse-threshold", type=float, default=None,
                       help="trust below this refuses the request")
    sim_p.add_argument("--full-threshold", type=float, default=None,
                       help="trust at or above this is full trust")
    sim_p.add_argument("--strict-conflicts", action="store_true",
                       help="refuse on any property conflict outright")
    sim_p.add_argument("--out", default=None,
                       help="write the report to this file")
    sim_p.set_defaults(func=_cmd_simulate)

    verify_p = sub.add_parser(
        "verify-challenge",
        help="check an audit trace against an issued challenge")
    verify_p.add_argument("challenge", help="challenge file")
    verify_p.add_argument("trace", help="audit records, one per line")
    verify_p.set_defaults(func=_cmd_verify_challenge)

    bench_p = sub.add_parser(
        "bench", help="measure compile scaling across policy sizes")
    bench_p.add_argument("--counts", type=_parse_counts,
                         default=DEFAULT_COUNTS,
                         help="comma-separated domain counts")
    bench_p.add_argument("--repeats", type=int, default=3,
                         help="timed repeats per size")
    bench_p.set_defaults(func=_cmd_bench)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except P2PSecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
