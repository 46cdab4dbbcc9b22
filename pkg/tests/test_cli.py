import json
import shutil
from pathlib import Path

from bocast.cli import main
from bocast.scenario import load_scenario
from bocast.sim import run_scenario
from bocast.trace import serialize_trace

GOLDEN_DIR = Path("scenarios/golden")
GOLDEN_SCENARIO = GOLDEN_DIR / "width2_profile.scenario.json"
GOLDEN_TRACE = GOLDEN_DIR / "width2_profile.trace"
NEG_WIDTH3 = Path("scenarios/negative/width3_antichain.scenario.json")
TEMPLATE = Path("scenarios/templates/n5_k2_propose.template.json")


def test_run_reproduces_the_checked_in_golden_trace(tmp_path, capsys):
    out = tmp_path / "t.trace"
    code = main(["run", "--scenario", str(GOLDEN_SCENARIO), "--out", str(out)])
    assert code == 0
    assert out.read_bytes() == GOLDEN_TRACE.read_bytes()


def test_run_seed_override_changes_the_schedule(tmp_path):
    scen = Path("scenarios/templates/n5_k2_propose.template.json")
    obj = json.loads(scen.read_text())
    obj["crash_plan"] = []
    fixed = tmp_path / "s.json"
    fixed.write_text(json.dumps(obj))
    a, b, b2 = (tmp_path / name for name in ("a.trace", "b.trace", "b2.trace"))
    assert main(["run", "--scenario", str(fixed), "--out", str(a)]) == 0
    assert main(["run", "--scenario", str(fixed), "--seed", "7", "--out", str(b)]) == 0
    assert main(["run", "--scenario", str(fixed), "--seed", "7", "--out", str(b2)]) == 0
    assert a.read_bytes() != b.read_bytes()
    assert b.read_bytes() == b2.read_bytes()


def test_run_rejects_invalid_scenario(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    obj = json.loads(GOLDEN_SCENARIO.read_text())
    obj["k"] = 0
    bad.write_text(json.dumps(obj))
    code = main(["run", "--scenario", str(bad)])
    assert code == 2
    assert "1 <= k <= n" in capsys.readouterr().err


def test_run_budget_exhaustion_gets_distinct_status(tmp_path):
    obj = json.loads(GOLDEN_SCENARIO.read_text())
    obj["step_budget"] = 3
    scen = tmp_path / "s.json"
    scen.write_text(json.dumps(obj))
    out = tmp_path / "t.trace"
    assert main(["run", "--scenario", str(scen), "--out", str(out)]) == 3
    assert "budget-exhausted" in out.read_text()


def test_check_passes_on_golden_trace(tmp_path, capsys):
    report = tmp_path / "report.jsonl"
    code = main([
        "check", "--trace", str(GOLDEN_TRACE),
        "--suites", "kbo,kscd,k2s,snapshot,ksa",
        "--report", str(report),
    ])
    assert code == 0
    lines = [json.loads(l) for l in report.read_text().splitlines()]
    assert all(rec["pass"] for rec in lines)


def test_check_fails_on_forged_trace(tmp_path, capsys):
    trace_path = tmp_path / "w3.trace"
    assert main(["run", "--scenario", str(NEG_WIDTH3), "--out", str(trace_path)]) == 0
    code = main(["check", "--trace", str(trace_path)])
    assert code == 1
    out = capsys.readouterr().out
    rec = next(
        json.loads(l) for l in out.splitlines() if json.loads(l)["property"] == "kbo.bounded"
    )
    assert rec["pass"] is False
    assert rec["witness"]["antichain"] == ["1:0", "2:0", "3:0"]


def test_check_rejects_corrupted_trace(tmp_path, capsys):
    bad = tmp_path / "bad.trace"
    lines = GOLDEN_TRACE.read_text().splitlines()
    lines[5] = "{nope"
    bad.write_text("\n".join(lines))
    assert main(["check", "--trace", str(bad)]) == 2
    assert "line 6" in capsys.readouterr().err


def test_decompose_prints_channels(capsys):
    code = main(["decompose", "--trace", str(GOLDEN_TRACE), "--k", "2"])
    assert code == 0
    out = capsys.readouterr().out
    assert "width 2 within k=2" in out
    assert "channel[1]" in out and "channel[2]" in out


def test_decompose_reports_bound_violation(capsys):
    code = main(["decompose", "--trace", str(GOLDEN_TRACE), "--k", "1"])
    assert code == 1
    out = capsys.readouterr().out
    assert "width 2 exceeds k=1" in out
    assert "antichain witness:" in out


def test_fuzz_200_seeds_all_pass(tmp_path, capsys):
    out_dir = tmp_path / "fuzz"
    code = main([
        "fuzz", "--template", str(TEMPLATE), "--seeds", "200", "--out", str(out_dir),
    ])
    assert code == 0
    summary = json.loads((out_dir / "summary.json").read_text())
    assert summary["runs"] == 200
    assert summary["outcomes"]["quiescent"] == 200
    assert summary["failing_seed_indices"] == []
    assert summary["errors"] == []
    assert summary["properties"]["kbo.bounded"]["pass"] == 200
    # sampled crash plans: sizes recorded for every run
    assert sum(int(c) for c in summary["crash_plan_sizes"].values()) == 200
    assert not list(out_dir.glob("fail-*.trace"))


def test_fuzz_zero_seeds_is_an_empty_success(tmp_path):
    assert main(["fuzz", "--template", str(TEMPLATE), "--seeds", "0"]) == 0


def test_golden_verb_detects_tampering(tmp_path, capsys):
    assert main(["golden", "--dir", str(GOLDEN_DIR)]) == 0
    clone = tmp_path / "golden"
    shutil.copytree(GOLDEN_DIR, clone)
    trace = clone / "width2_profile.trace"
    trace.write_text(trace.read_text().replace('"m4"', '"mX"'))
    assert main(["golden", "--dir", str(clone)]) == 1


def test_unknown_suite_is_a_usage_error(capsys):
    assert main(["check", "--trace", str(GOLDEN_TRACE), "--suites", "kbo,bogus"]) == 2
    assert "unknown suite" in capsys.readouterr().err


def test_usage_error_exit_code():
    assert main(["frobnicate"]) == 2


def test_golden_trace_file_is_current():
    # guards against editing the scenario without regenerating artifacts
    trace = run_scenario(load_scenario(GOLDEN_SCENARIO))
    assert serialize_trace(trace) == GOLDEN_TRACE.read_text()
