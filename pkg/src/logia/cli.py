"""Command line entry points: serve, assessor check, simharness run."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .assessor import CorpusError, GuidelineCorpus, assess
from .client import Client
from .domains import load_registry, registry_from_dict
from .fixtures import fixture_path, load_json
from .grammar import canonicalize_action
from .journal import JournalCorruptError
from .service import load_config, serve
from .simharness import (
    ClientSink,
    EngineSink,
    PopulationSpec,
    default_spec,
    run_simulation,
    write_report,
)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="logia",
        description="Surveillance engine for AI-expert interactions",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    serve_p = sub.add_parser("serve", help="run the HTTP service")
    serve_p.add_argument("--config", help="JSON config file")
    serve_p.add_argument("--listen", help="host:port (overrides config)")
    serve_p.add_argument("--data-dir", dest="data_dir",
                         help="journal directory (overrides config)")
    serve_p.add_argument("--replay", help="NDJSON file of interaction events to import")
    serve_p.add_argument("--outcomes", help="NDJSON file of outcome events to import")

    assessor_p = sub.add_parser("assessor", help="rule engine utilities")
    assessor_sub = assessor_p.add_subparsers(dest="assessor_command", required=True)
    check_p = assessor_sub.add_parser("check", help="assess one record file")
    check_p.add_argument("record", help="JSON file with mission, conclusion, "
                                        "justification and domain")
    check_p.add_argument("--corpus", help="guideline corpus directory "
                                          "(default: packaged fixtures)")
    check_p.add_argument("--taxonomy", help="domain taxonomy JSON "
                                            "(default: packaged fixtures)")

    sim_p = sub.add_parser("simharness", help="seeded population simulation")
    sim_sub = sim_p.add_subparsers(dest="sim_command", required=True)
    run_p = sim_sub.add_parser("run", help="generate, feed and evaluate a population")
    run_p.add_argument("--spec", default="default",
                       help="population spec JSON, or 'default'")
    run_p.add_argument("--seed", type=int, required=True)
    target = run_p.add_mutually_exclusive_group()
    target.add_argument("--target", help="base URL of a running service")
    target.add_argument("--in-process", action="store_true",
                        help="run against an in-memory engine (default)")
    run_p.add_argument("--report", required=True, help="report output path")
    run_p.add_argument("--cohort-size", type=int, default=1000,
                       help="records per cohort for the default spec")
    return parser


def _cmd_serve(args: argparse.Namespace) -> int:
    overrides = {"listen": args.listen, "data_dir": args.data_dir}
    try:
        config = load_config(args.config, overrides=overrides)
    except (OSError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        server = serve(config, replay_path=args.replay, outcomes_path=args.outcomes)
    except JournalCorruptError as exc:
        print(f"refusing to start: {exc}", file=sys.stderr)
        return 2
    host, port = server.server_address[:2]
    print(f"listening on {host}:{port}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.engine.close()
        server.server_close()
    return 0


def _cmd_assessor_check(args: argparse.Namespace) -> int:
    try:
        record = json.loads(Path(args.record).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        print(f"cannot read record: {exc}", file=sys.stderr)
        return 2
    try:
        corpus = GuidelineCorpus.load_dir(args.corpus or fixture_path("corpus"))
        if args.taxonomy:
            registry = load_registry(args.taxonomy, args.taxonomy)
        else:
            registry = registry_from_dict(load_json("taxonomy.json"))
        domain = record.get("domain", "")
        config = registry.get(domain)
        conclusion = canonicalize_action(record.get("conclusion", ""), config.vocabulary)
        assessment = assess(
            record.get("mission", ""),
            conclusion,
            record.get("justification", ""),
            domain,
            corpus,
        )
    except (CorpusError, ValueError) as exc:
        print(f"assessment failed: {exc}", file=sys.stderr)
        return 2
    output = assessment.to_wire()
    output["conclusion"] = conclusion.to_wire()
    print(json.dumps(output, indent=2, sort_keys=True))
    return 0


def _cmd_simharness_run(args: argparse.Namespace) -> int:
    if args.spec == "default":
        spec = default_spec(cohort_size=args.cohort_size)
    else:
        try:
            spec = PopulationSpec.load(args.spec)
        except (OSError, json.JSONDecodeError, KeyError) as exc:
            print(f"cannot load spec: {exc}", file=sys.stderr)
            return 2
    if args.target:
        sink = ClientSink(Client(args.target))
    else:
        from .service import in_memory_engine

        sink = EngineSink(in_memory_engine())
    report = run_simulation(spec, args.seed, sink)
    write_report(report, args.report)
    verdict = "pass" if report["pass"] else "FAIL"
    print(f"{verdict}: monotonic={report['monotonic_by_grade']} "
          f"cohorts={len(report['cohorts'])} report={args.report}")
    return 0 if report["pass"] else 1


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "serve":
        return _cmd_serve(args)
    if args.command == "assessor":
        return _cmd_assessor_check(args)
    if args.command == "simharness":
        return _cmd_simharness_run(args)
    return 2


if __name__ == "__main__":
    sys.exit(main())
