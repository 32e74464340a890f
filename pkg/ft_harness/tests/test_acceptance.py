"""Acceptance: the directional gap on the key-determined fixture, and a
metrics JSON that merges into an auditing report through the CLI alone."""

from __future__ import annotations

import json
import subprocess
import time
from pathlib import Path

import pytest


def run_cli(*argv: str) -> subprocess.CompletedProcess:
    return subprocess.run([str(a) for a in argv], check=True,
                          capture_output=True, text=True)


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    from fixtures import build_export, write_key_determined_jsonl
    tmp = tmp_path_factory.mktemp("accept")
    data = tmp / "fixture.jsonl"
    write_key_determined_jsonl(data, n_keys=50, per_key=40, vocab_size=200, seed=7)
    plan = tmp / "plan.json"
    run_cli("figbias", "split", "--scheme", "random", "--k", "1", "--seed", "7",
            "--in", data, "--out", plan)
    export = tmp / "export"
    run_cli("figbias", "export", "--in", data, "--plan", plan,
            "--modes", "default,masked", "--out", export)
    return {"dir": tmp, "data": data, "plan": plan, "export": export}


def test_secondary_acceptance(workspace):
    tmp: Path = workspace["dir"]
    start = time.perf_counter()

    reports = {}
    for mode in ("default", "masked"):
        out = tmp / f"ft.{mode}.json"
        run_cli("finetune", "--export-dir", workspace["export"], "--mode", mode,
                "--trials", "0", "--seed", "1", "--batch-size", "16",
                "--lr", "1e-3", "--epochs", "8", "--out", out)
        reports[mode] = json.loads(out.read_text())

    def macro(report: dict) -> float:
        return report["averages"][0]["metrics"]["macro_f1"]

    default_macro = macro(reports["default"])
    masked_macro = macro(reports["masked"])
    relative_drop = 100.0 * (default_macro - masked_macro) / default_macro
    assert relative_drop >= 20.0, \
        f"default {default_macro:.2f} vs masked {masked_macro:.2f} " \
        f"({relative_drop:.1f}% relative)"

    # Classical-baseline report over the same plan, then a three-way merge
    # through the auditor's report subcommand (its schema is the contract).
    primary_report = tmp / "primary.json"
    run_cli("figbias", "audit", "--in", workspace["data"], "--plan", workspace["plan"],
            "--modes", "default,masked", "--classifiers", "majority,nb",
            "--out", primary_report)
    merged_md = tmp / "merged.md"
    run_cli("figbias", "report", "--in", primary_report,
            "--in", tmp / "ft.default.json", "--in", tmp / "ft.masked.json",
            "--format", "markdown", "--out", merged_md)
    merged_json = tmp / "merged.json"
    run_cli("figbias", "report", "--in", primary_report,
            "--in", tmp / "ft.default.json", "--in", tmp / "ft.masked.json",
            "--format", "json", "--out", merged_json)

    merged = json.loads(merged_json.read_text())
    assert merged["schema_version"] == 1
    classifiers = {cell["classifier"] for cell in merged["cells"]}
    assert {"encoder", "majority", "nb"} <= classifiers
    encoder_rows = [a for a in merged["averages"] if a["classifier"] == "encoder"]
    by_mode = {a["mode"]: a for a in encoder_rows}
    assert by_mode["masked"]["gap_macro_f1"] is not None  # rebuilt on merge
    assert "encoder" in merged_md.read_text()

    elapsed = time.perf_counter() - start
    assert elapsed < 600.0, f"{elapsed:.0f}s exceeded the 10-minute budget"
    print(f"ACCEPTANCE secondary (default {default_macro:.2f} vs masked "
          f"{masked_macro:.2f}, {relative_drop:.1f}% relative drop): "
          f"PASS ({elapsed:.0f}s)")
