import csv
import io
import json
import os
import subprocess
import sys

import pytest

from tickmc.cli import main
from tickmc.composer import dump_json
from tickmc.dsl import parse_config

from helpers import uvc_chain, uvc_files


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def sweep_rows(text):
    block = text.split("\n\n")[0]
    return list(csv.DictReader(io.StringIO(block)))


def test_check_bundled(capsys):
    f = uvc_files()
    code, out, err = run(capsys, "check", f["psm"], "--props", f["pprop"], "--config", "C1",
                         "--t", 3)
    assert code == 0
    results = {r["property"]: r for r in json.loads(out)["results"]}
    assert results["P1"]["points"][0]["t"] == 3
    assert 0 < results["P1"]["points"][0]["p"] < 1
    assert results["P2"]["deadlockFree"] is True
    manifest = json.loads(err.split("manifest: ", 1)[1])
    assert manifest["command"] == "check" and len(manifest["inputs"]) == 3


def test_check_parametric_defaults_to_full_range(capsys):
    f = uvc_files()
    code, out, _ = run(capsys, "check", f["psm"], "--props", f["pprop"], "--property", "P1")
    assert code == 0
    pts = json.loads(out)["results"][0]["points"]
    assert [p["t"] for p in pts] == list(range(31))


def test_missing_config(capsys):
    f = uvc_files()
    code, _, err = run(capsys, "check", f["psm"], "--props", f["pprop"], "--config", "C9")
    assert code == 2
    assert "C9" in err


def test_parse_error_exit(capsys, tmp_path):
    bad = tmp_path / "bad.psm"
    bad.write_text("machine M { state }")
    code, _, err = run(capsys, "check", bad, "--props", uvc_files()["pprop"])
    assert code == 2 and "bad.psm:1" in err


def test_broken_chain_deadlock(capsys, tmp_path):
    doc = json.loads(dump_json(uvc_chain("aware_normal", 4)))
    doc["edges"] = [e for e in doc["edges"] if e["from"] != 5]
    model = tmp_path / "broken.json"
    model.write_text(json.dumps(doc))
    props = tmp_path / "p.pprop"
    props.write_text("prob property P2: not Exists [Finally deadlock]\n")
    code, out, _ = run(capsys, "check", model, "--props", props)
    assert code == 1
    (res,) = json.loads(out)["results"]
    assert res["deadlockFree"] is False and res["deadlocks"] == [5]


def test_sweep_all_scenarios(capsys):
    f = uvc_files()
    code, out, _ = run(capsys, "sweep", f["psm"], "--props", f["pprop"],
                       "--configs", "*_*", "--t-range", "1..30", "--mode", "cumulative")
    assert code == 0
    rows = sweep_rows(out)
    assert len(rows) == 270
    assert list(rows[0]) == ["scenario", "awareness", "ods", "t", "probability", "mode"]
    p = {(r["awareness"], r["ods"], int(r["t"])): float(r["probability"]) for r in rows}
    for (level, ods, t), value in p.items():
        if ods == "highPerformance":
            assert value <= p[(level, "failure", t)]


def test_sweep_rrf_summary(capsys):
    f = uvc_files()
    code, out, _ = run(capsys, "sweep", f["psm"], "--props", f["pprop"],
                       "--configs", "deliberate_*", "--t", 30, "--mode", "cumulative",
                       "--rrf-baseline", "failure")
    assert code == 0
    summary = list(csv.DictReader(io.StringIO(out.split("\n\n")[1])))
    by_target = {r["mitigated"]: r for r in summary}
    normal = by_target["deliberate_normal"]
    high = by_target["deliberate_highPerformance"]
    assert 3 <= float(normal["rrf"]) <= 300
    assert float(high["rrf"]) >= 100 and high["sil"] in ("SIL2", "SIL3")


def test_sweep_t_out_of_range(capsys):
    f = uvc_files()
    code, _, err = run(capsys, "sweep", f["psm"], "--props", f["pprop"], "--t-range", "1..31")
    assert code == 2 and "horizon" in err


def test_sweep_unknown_baseline(capsys):
    f = uvc_files()
    code, _, _ = run(capsys, "sweep", f["psm"], "--props", f["pprop"], "--configs", "aware_*",
                     "--t", 5, "--rrf-baseline", "nonsense")
    assert code == 2


def test_simulate_repeatable(capsys):
    f = uvc_files()
    args = ("simulate", f["psm"], "--props", f["pprop"], "--config", "deliberate_failure",
            "--t", 3, "--samples", 100_000, "--seed", 42)
    code1, out1, _ = run(capsys, *args)
    code2, out2, _ = run(capsys, *args)
    assert code1 == code2 == 0 and out1 == out2
    est = json.loads(out1)
    assert abs(est["pHat"] - 0.091) <= 4 * est["stdErr"]


def test_simulate_bad_inputs(capsys):
    f = uvc_files()
    base = ("simulate", f["psm"], "--props", f["pprop"], "--config", "C1")
    assert run(capsys, *base, "--samples", 0)[0] == 2
    assert run(capsys, *base, "--property", "P2")[0] == 2
    assert run(capsys, *base, "--t", 99, "--samples", 10)[0] == 2


def test_export_formats(capsys, tmp_path):
    f = uvc_files()
    for fmt, marker in (("dot", "digraph"), ("json", '"edges"'), ("prism", "dtmc")):
        out = tmp_path / f"chain.{fmt}"
        code, _, _ = run(capsys, "export", f["psm"], "--config", "C1", "--format", fmt,
                         "--out", out)
        assert code == 0
        assert marker in out.read_text()
        manifest = json.loads((tmp_path / f"chain.{fmt}.manifest.json").read_text())
        assert manifest["config"] == "C1" and manifest["toolVersion"]


def test_export_cap(capsys):
    f = uvc_files()
    code, _, err = run(capsys, "export", f["psm"], "--config", "C1", "--state-cap", 10)
    assert code == 3 and "cap" in err


def test_scenarios_command(capsys):
    code, out, _ = run(capsys, "scenarios")
    assert code == 0
    assert len(parse_config(out)) == 9


def _cli(env_threads, *argv):
    env = dict(os.environ, TICKMC_THREADS=str(env_threads))
    return subprocess.run([sys.executable, "-m", "tickmc.cli", *map(str, argv)],
                          capture_output=True, text=True, env=env, check=True).stdout


@pytest.mark.slow
def test_payload_identical_across_threads():
    f = uvc_files()
    sweep = ("sweep", f["psm"], "--props", f["pprop"], "--mode", "cumulative")
    assert _cli(1, *sweep) == _cli(4, *sweep)
    sim = ("simulate", f["psm"], "--props", f["pprop"], "--config", "aware_normal",
           "--t-range", "1..10", "--samples", 200_000, "--seed", 42)
    assert _cli(1, *sim) == _cli(3, *sim)
