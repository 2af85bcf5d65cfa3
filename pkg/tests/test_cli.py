from __future__ import annotations

import hashlib
import json
import subprocess
import sys
from pathlib import Path

import jsonschema
import pytest

import iosa
from iosa.cli import EXIT_ERROR, EXIT_NEGATIVE, EXIT_OK, EXIT_PARSE, build_parser, main
from iosa.sim.estimate import default_jobs

MODELS = Path(iosa.__file__).parent / "models"
SCHEMA = json.loads((Path(__file__).parents[1] / "docs" / "report-schema.json").read_text())


def model(name: str) -> str:
    return str(MODELS / name)


def run(capsys, *argv: str) -> tuple[int, dict | str]:
    code = main(list(argv))
    out = capsys.readouterr().out
    if "--format" in argv or (argv[0] == "compose" and "--out" not in argv):
        return code, out
    report = json.loads(out)
    jsonschema.validate(report, SCHEMA)
    return code, report


def test_check_fig2(capsys):
    code, report = run(capsys, "check", model("fig2.iosa"))
    assert code == EXIT_OK and report["status"] == "ok"
    assert [a["verdict"] for a in report["result"]["automata"]] == ["pass"] * 3
    assert report["result"]["automata"][0]["active"] == {"s0": ["x"], "s1": [], "s2": []}


def test_check_failure_tags_condition(capsys, tmp_path):
    path = tmp_path / "bad.iosa"
    path.write_text(
        "clock x ~ exponential(1.0);\n"
        "automaton A { init s clocks {x}; s --{x}, a!, {}--> t; s --{x}, b!, {}--> u; }\n"
    )
    code, report = run(capsys, "check", str(path))
    assert code == EXIT_ERROR and report["status"] == "error"
    conditions = {v["condition"] for v in report["result"]["automata"][0]["violations"]}
    assert "c" in conditions


def test_parse_error_exit_and_position(capsys, tmp_path):
    path = tmp_path / "broken.iosa"
    path.write_text("automaton A {\n  init s0\n}\n")
    code, report = run(capsys, "check", str(path))
    assert code == EXIT_PARSE
    assert report["result"]["line"] == 3 and report["result"]["column"] >= 1


def test_report_carries_input_hash(capsys):
    path = model("fig2.iosa")
    _, report = run(capsys, "check", path)
    (entry,) = report["inputs"]
    assert entry["sha256"] == hashlib.sha256(Path(path).read_bytes()).hexdigest()
    assert report["tool"] == "iosa" and report["version"] == iosa.__version__
    assert report["duration_s"] >= 0


def test_compose_matches_golden_bytes(capsys, tmp_path):
    out = tmp_path / "fig3.iosa"
    code, report = run(capsys, "compose", model("fig2.iosa"), "--out", str(out))
    assert code == EXIT_OK
    assert report["result"]["states"] == 10 and report["result"]["transitions"] == 13
    assert out.read_bytes() == (MODELS / "fig3.golden.iosa").read_bytes()


def test_compose_to_stdout_is_the_serialization(capsys):
    code, text = run(capsys, "compose", model("fig2.iosa"))
    assert code == EXIT_OK
    assert text == (MODELS / "fig3.golden.iosa").read_text()


def test_compose_full_product(capsys, tmp_path):
    out = tmp_path / "full.iosa"
    code, report = run(capsys, "compose", model("fig2.iosa"), "--full-product", "--out", str(out))
    assert code == EXIT_OK and report["result"]["states"] == 36


def test_compose_incompatible(capsys, tmp_path):
    path = tmp_path / "clash.iosa"
    path.write_text(
        "clock x ~ exponential(1.0); clock y ~ exponential(1.0);\n"
        "automaton A { init s clocks {x}; s --{x}, a!, {x}--> s; }\n"
        "automaton B { init s clocks {y}; s --{y}, a!, {y}--> s; }\n"
    )
    code, report = run(capsys, "compose", str(path), "--out", str(tmp_path / "o.iosa"))
    assert code == EXIT_ERROR
    assert report["result"]["pair"] == [1, 2]
    assert {"kind": "shared-output", "name": "a"} in report["result"]["conflicts"]


@pytest.mark.parametrize(
    "name, flag, code, status",
    [
        ("fig2.iosa", "--compositional", EXIT_OK, "confluent"),
        ("fig6.iosa", "--compositional", EXIT_NEGATIVE, "inconclusive"),
        ("fig6.iosa", "--direct", EXIT_OK, "confluent"),
        ("fig2.iosa", "--direct", EXIT_NEGATIVE, "not-confluent"),
        ("nonconfluent.iosa", "--direct", EXIT_NEGATIVE, "not-confluent"),
    ],
)
def test_confluence(capsys, name, flag, code, status):
    got, report = run(capsys, "confluence", model(name), flag)
    assert got == code and report["result"]["status"] == status


def test_confluence_fig6_witness(capsys):
    _, report = run(capsys, "confluence", model("fig6.iosa"))
    (w,) = report["result"]["witnesses"]
    assert w["pair"] == ["b", "c"] and w["cause"]["action"] == "a"


def test_confluence_direct_potentially_reachable(capsys):
    code, _ = run(capsys, "confluence", model("fig2.iosa"), "--direct", "--potentially-reachable-only")
    assert code == EXIT_OK


def test_confluence_open_system(capsys, tmp_path):
    path = tmp_path / "open.iosa"
    path.write_text("automaton A { #complete-inputs init s; s --{}, go?, {}--> t; }\n")
    code, report = run(capsys, "confluence", str(path))
    assert code == EXIT_ERROR and report["result"]["unmatched_inputs"] == ["go"]
    code, _ = run(capsys, "confluence", str(path), "--direct")
    assert code == EXIT_ERROR


def test_nf(capsys):
    code, report = run(capsys, "nf", model("fig4.iosa"), "s0", "--exhaustive")
    assert code == EXIT_OK and report["result"] == {"state": "s3", "resets": ["x", "y"], "length": 2}
    code, report = run(capsys, "nf", model("fig2.iosa"), "s1|s4|s6", "--exhaustive")
    assert code == EXIT_NEGATIVE and len(report["result"]["normal_forms"]) == 2
    code, _ = run(capsys, "nf", model("fig2.iosa"), "nowhere")
    assert code == EXIT_ERROR


def test_simulate_expo(capsys):
    code, report = run(capsys, "simulate", model("expo.iosa"), "sojourn", "--reps", "2000", "--seed", "3")
    assert code == EXIT_OK
    est = report["result"]["estimate"]
    lo, hi = est["interval"]
    assert lo <= 0.5 <= hi and est["replications"] == 2000


def test_simulate_fig2_is_reproducible(capsys):
    args = ("simulate", model("fig2.iosa"), "absorb", "--reps", "300", "--seed", "5")
    _, first = run(capsys, *args)
    _, second = run(capsys, *args)
    assert first["result"] == second["result"]


def test_simulate_refuses_inconclusive_model(capsys):
    code, report = run(capsys, "simulate", model("nonconfluent.iosa"), "via_a", "--reps", "10")
    assert code == EXIT_ERROR and "confluent" in report["result"]["error"]
    code, report = run(
        capsys, "simulate", model("nonconfluent.iosa"), "via_a", "--reps", "10", "--allow-nondeterminism"
    )
    assert code == EXIT_OK and "warning" in report["result"]["estimate"]


def test_simulate_fig6_licensed_by_direct_check(capsys, tmp_path):
    path = tmp_path / "fig6q.iosa"
    path.write_text((MODELS / "fig6.iosa").read_text() + "\nquery stay = transient_reach(I3.t0, 1);\n")
    code, report = run(capsys, "simulate", str(path), "stay", "--reps", "10")
    assert code == EXIT_OK and report["result"]["estimate"]["point"] == 1.0


def test_simulate_unknown_query(capsys):
    code, report = run(capsys, "simulate", model("expo.iosa"), "nothing")
    assert code == EXIT_ERROR and "sojourn" in report["result"]["error"]


def test_simulate_compare_policies(capsys):
    code, report = run(
        capsys,
        "simulate",
        model("nonconfluent.iosa"),
        "via_a",
        "--reps",
        "200",
        "--compare-policies",
        "--allow-nondeterminism",
    )
    assert code == EXIT_OK and report["result"]["consistent"] is False


def test_simulate_trace(capsys, tmp_path):
    trace = tmp_path / "trace.jsonl"
    code, _ = run(capsys, "simulate", model("fig4.iosa"), "a_first", "--reps", "5", "--trace", str(trace))
    assert code == EXIT_OK
    events = [json.loads(line) for line in trace.read_text().splitlines()]
    assert events[0]["kind"] == "init"
    assert all("valuation" in e for e in events[:-1])


def test_jobs_environment_default(monkeypatch):
    monkeypatch.setenv("IOSA_JOBS", "3")
    assert default_jobs() == 3
    args = build_parser().parse_args(["simulate", "m.iosa", "q", "--jobs", "2"])
    assert args.jobs == 2


def test_text_format(capsys):
    code, text = run(capsys, "confluence", model("fig6.iosa"), "--format", "text")
    assert code == EXIT_NEGATIVE
    assert text.startswith("compositional: inconclusive")
    assert "pair (b, c) in I3 at t0" in text and "spontaneously enabled by a" in text
    code, text = run(capsys, "nf", model("fig4.iosa"), "s0", "--format", "text")
    assert text.strip() == "(s3, {x, y}, 2)"


def test_missing_file(capsys):
    code, report = run(capsys, "check", "/nonexistent/model.iosa")
    assert code == EXIT_ERROR and "cannot read" in report["result"]["error"]


def test_usage_error_exits_one():
    proc = subprocess.run(
        [sys.executable, "-m", "iosa", "confluence"], capture_output=True, text=True, check=False
    )
    assert proc.returncode == EXIT_ERROR and "usage" in proc.stderr


def test_module_entry_point_exit_code():
    proc = subprocess.run(
        [sys.executable, "-m", "iosa", "confluence", model("fig6.iosa")],
        capture_output=True,
        text=True,
        check=False,
    )
    assert proc.returncode == EXIT_NEGATIVE
    jsonschema.validate(json.loads(proc.stdout), SCHEMA)
