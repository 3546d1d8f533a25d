#!/usr/bin/env python3
"""Runs the CLI on golden invocations and validates JSON output against docs/schema."""
import json
import subprocess
import sys
from pathlib import Path

from jsonschema import Draft202012Validator
from referencing import Registry, Resource


def main(cli, schema_dir, data_dir):
    schema_dir, data_dir = Path(schema_dir), Path(data_dir)
    resources = []
    for f in schema_dir.glob("*.schema.json"):
        doc = json.loads(f.read_text())
        resources.append((doc["$id"], Resource.from_contents(doc)))
    registry = Registry().with_resources(resources)

    cases = [
        ("solve", ["solve", "--arm", "poor", "--institution", "si", "--contract", "common"]),
        ("solve", ["solve", "--arm", "rich", "--institution", "ti", "--contract", "preferred"]),
        ("solve", ["solve", "--arm", "poor", "--institution", "til"]),
        ("solve", ["solve", "--arm", "poor", "--institution", "ti", "--belief", "joint"]),
        ("solve", ["solve", "--arm", "poor", "--institution", "ti", "--risk", "0.25,0.25"]),
        ("sweep", ["sweep", "--out", "json", "--arm", "poor", "--grid", "de=0,160",
                   "--institutions", "si,ti", "--contracts", "common,preferred"]),
        ("estimate", ["estimate", "--data", str(data_dir / "estimation_synthetic.csv")]),
        ("estimate", ["estimate", "--data", str(data_dir / "estimation_synthetic.csv"), "--model", "revisedI"]),
        ("simulate", ["simulate", "--out", "json", "--arm", "poor", "--institution", "ti",
                      "--rounds", "200", "--seed", "7"]),
        ("analyze", ["analyze", "--out", "json", "--data", str(data_dir / "funding_toy.csv")]),
    ]
    failures = 0
    for kind, args in cases:
        proc = subprocess.run([cli, *args], capture_output=True, text=True)
        label = " ".join(args)
        if proc.returncode != 0:
            print(f"FAIL {label}: exit {proc.returncode}: {proc.stderr.strip()}")
            failures += 1
            continue
        schema = json.loads((schema_dir / f"{kind}.schema.json").read_text())
        validator = Draft202012Validator(schema, registry=registry)
        errors = list(validator.iter_errors(json.loads(proc.stdout)))
        if errors:
            failures += 1
            print(f"FAIL {label}: {errors[0].message}")
        else:
            print(f"ok   {label}")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main(*sys.argv[1:4]))
