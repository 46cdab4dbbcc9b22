"""Command-line front end.

Verbs: run a scenario, fuzz seeded variants of a template, check a trace
against the property suites, decompose a trace's delivery order into
total-order channels, and replay the checked-in golden examples.

Exit statuses: 0 success (pass / quiescent), 1 property failure or golden
mismatch, 2 usage or input error, 3 budget-exhausted run.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .checker import (
    ALL_SUITES,
    CheckerError,
    any_failure,
    build_order,
    check_all,
    serialize_verdicts,
    width_and_antichain,
)
from .poset import BoundViolation
from .rng import derive
from .scenario import ConfigError, ScenarioConfig, load_scenario
from .sim import SimulationError, run_scenario
from .trace import TraceFormatError, read_trace, serialize_trace, write_trace

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_BUDGET = 3


def _fail_usage(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return EXIT_USAGE


def cmd_run(args) -> int:
    try:
        config = load_scenario(args.scenario)
        if args.seed is not None:
            obj = config.to_json_dict()
            obj["seed"] = args.seed
            config = ScenarioConfig.from_json_dict(obj)
    except (ConfigError, OSError) as exc:
        return _fail_usage(str(exc))
    try:
        trace = run_scenario(config)
    except SimulationError as exc:
        return _fail_usage(f"simulation error: {exc}")
    if args.out:
        write_trace(trace, args.out)
    else:
        sys.stdout.write(serialize_trace(trace))
    print(f"run: {trace.outcome} after {trace.turns} turns, {len(trace.events)} events", file=sys.stderr)
    return EXIT_OK if trace.quiescent else EXIT_BUDGET


def cmd_check(args) -> int:
    try:
        trace = read_trace(args.trace)
    except (TraceFormatError, ConfigError, OSError) as exc:
        return _fail_usage(str(exc))
    suites = tuple(args.suites.split(",")) if args.suites else ALL_SUITES
    try:
        verdicts = check_all(trace, suites)
    except CheckerError as exc:
        return _fail_usage(str(exc))
    report = serialize_verdicts(verdicts)
    if args.report:
        Path(args.report).write_text(report, encoding="utf-8")
    sys.stdout.write(report)
    return EXIT_FAIL if any_failure(verdicts) else EXIT_OK


def cmd_decompose(args) -> int:
    try:
        trace = read_trace(args.trace)
    except (TraceFormatError, ConfigError, OSError) as exc:
        return _fail_usage(str(exc))
    result = build_order(trace, scope=args.scope)
    if result.poset is None:
        width, antichain = width_and_antichain(result)
        print(f"delivery order is not a partial order; width {width}, antichain {antichain}")
        return EXIT_FAIL
    k = args.k if args.k is not None else trace.config.k
    try:
        _assignment, chains = result.poset.decompose_channels(k)
    except BoundViolation as exc:
        print(f"width {len(exc.antichain)} exceeds k={k}")
        print(f"antichain witness: {' '.join(exc.antichain)}")
        return EXIT_FAIL
    print(f"width {result.poset.width()} within k={k}; {len(chains)} channels")
    for ch_no, chain in enumerate(chains, start=1):
        print(f"channel[{ch_no}] = {' '.join(chain)}")
    if result.excluded:
        print(f"excluded (delivered by no scoped process): {' '.join(result.excluded)}")
    return EXIT_OK


def cmd_fuzz(args) -> int:
    try:
        template = json.loads(Path(args.template).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        return _fail_usage(f"template: {exc}")
    out_dir = Path(args.out) if args.out else None
    if out_dir:
        out_dir.mkdir(parents=True, exist_ok=True)

    suites = tuple(args.suites.split(",")) if args.suites else ALL_SUITES
    counts: dict[str, dict[str, int]] = {}
    outcomes = {"quiescent": 0, "budget-exhausted": 0}
    crash_counts: dict[int, int] = {}
    failing_seeds = []
    errors = []

    for i in range(args.seeds):
        try:
            config = instantiate_template(template, i)
            trace = run_scenario(config)
        except (ConfigError, SimulationError) as exc:
            errors.append({"seed_index": i, "error": str(exc)})
            continue
        outcomes[trace.outcome] += 1
        ncrash = len(trace.config.crash_plan)
        crash_counts[ncrash] = crash_counts.get(ncrash, 0) + 1
        verdicts = check_all(trace, suites)
        for v in verdicts:
            slot = counts.setdefault(v.property, {"pass": 0, "fail": 0, "not-evaluated": 0})
            slot[v.status] += 1
        if any_failure(verdicts):
            failing_seeds.append(i)
            if out_dir:
                try:
                    write_trace(trace, out_dir / f"fail-{i:05d}.trace")
                except OSError as exc:
                    errors.append({"seed_index": i, "error": f"trace write failed: {exc}"})

    summary = {
        "runs": args.seeds,
        "outcomes": outcomes,
        "crash_plan_sizes": {str(n): c for n, c in sorted(crash_counts.items())},
        "properties": {name: counts[name] for name in sorted(counts)},
        "failing_seed_indices": failing_seeds,
        "errors": errors,
    }
    text = json.dumps(summary, indent=2, ensure_ascii=False) + "\n"
    if out_dir:
        (out_dir / "summary.json").write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return EXIT_FAIL if failing_seeds or errors else EXIT_OK


def instantiate_template(template: dict, index: int) -> ScenarioConfig:
    """Expand one seeded scenario from a fuzz template.

    The template is a scenario object where ``seed`` is a base value and
    ``crash_plan`` may be {"sample": {"max_processes": M, "turn_range": [a, b]}}
    to draw a per-seed crash plan of 0..M processes.
    """
    from .rng import SplitMix64

    obj = dict(template)
    base_seed = int(obj.get("seed", 0))
    seed = derive(base_seed, "fuzz", index)
    obj["seed"] = seed
    plan = obj.get("crash_plan", [])
    if isinstance(plan, dict):
        sample = plan.get("sample", {})
        n = int(obj["n"])
        max_procs = int(sample.get("max_processes", n - 1))
        lo, hi = sample.get("turn_range", [0, 200])
        rng = SplitMix64(derive(seed, "crash-plan"))
        count = rng.randrange(max_procs + 1)
        victims = rng.sample(range(1, n + 1), count)
        obj["crash_plan"] = sorted((pid, lo + rng.randrange(max(1, hi - lo))) for pid in victims)
    return ScenarioConfig.from_json_dict(obj)


def cmd_golden(args) -> int:
    gold_dir = Path(args.dir)
    metas = sorted(gold_dir.glob("*.golden.json"))
    if not metas:
        return _fail_usage(f"no *.golden.json entries under {gold_dir}")
    failures = 0
    for meta_path in metas:
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
        name = meta_path.stem.replace(".golden", "")
        scenario_path = gold_dir / meta["scenario"]
        trace_path = gold_dir / meta["trace"]
        verdicts_path = gold_dir / meta["verdicts"] if meta.get("verdicts") else None
        suites = tuple(meta.get("suites", ALL_SUITES))
        try:
            config = load_scenario(scenario_path)
            trace = run_scenario(config)
        except (ConfigError, SimulationError) as exc:
            print(f"{name}: ERROR {exc}")
            failures += 1
            continue
        got = serialize_trace(trace)
        want = trace_path.read_text(encoding="utf-8")
        if got != want:
            print(f"{name}: TRACE MISMATCH")
            failures += 1
            continue
        if verdicts_path is not None:
            got_v = serialize_verdicts(check_all(trace, suites))
            want_v = verdicts_path.read_text(encoding="utf-8")
            if got_v != want_v:
                print(f"{name}: VERDICT MISMATCH")
                failures += 1
                continue
        print(f"{name}: ok")
    return EXIT_FAIL if failures else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bocast",
        description="deterministic broadcast-stack simulator and trace checker",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("run", help="run one scenario and write its trace")
    p.add_argument("--scenario", required=True)
    p.add_argument("--seed", type=int, help="override the scenario's seed")
    p.add_argument("--out", help="trace output path (default stdout)")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("check", help="evaluate property suites over a trace")
    p.add_argument("--trace", required=True)
    p.add_argument("--suites", help=f"comma list from {','.join(ALL_SUITES)} (default all)")
    p.add_argument("--report", help="also write the verdict records to this path")
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser("decompose", help="decompose a trace's delivery order into channels")
    p.add_argument("--trace", required=True)
    p.add_argument("--k", type=int, help="channel bound (default: the trace's k)")
    p.add_argument(
        "--scope",
        default="non-faulty-only",
        choices=("non-faulty-only", "all-pairs-delivered-by-both"),
    )
    p.set_defaults(fn=cmd_decompose)

    p = sub.add_parser("fuzz", help="run seeded variants of a template scenario")
    p.add_argument("--template", required=True)
    p.add_argument("--seeds", type=int, required=True)
    p.add_argument("--out", help="directory for summary and failing traces")
    p.add_argument("--suites")
    p.set_defaults(fn=cmd_fuzz)

    p = sub.add_parser("golden", help="re-run golden scenarios and compare byte-for-byte")
    p.add_argument("--dir", default="scenarios/golden")
    p.set_defaults(fn=cmd_golden)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    return args.fn(args)


if __name__ == "__main__":
    raise SystemExit(main())
