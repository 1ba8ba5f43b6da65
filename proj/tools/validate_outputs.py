#!/usr/bin/env python3
"""Check lotcyto run directories and tables against the schemas in schemas/.

usage: validate_outputs.py SCHEMA_DIR PATH [PATH ...]

A PATH that is a directory is treated as a `lotcyto run` output directory.
A file whose name contains "sweep" or "compare" is checked as that table.
"""

import csv
import json
import math
import re
import sys
from pathlib import Path

import jsonschema

EXPECTED_STAGES = {
    "lot": ["quantize", "reference", "embed", "pca", "silhouette"],
    "comp": ["quantize", "embed", "pca", "silhouette"],
    "kme": ["embed", "pca", "silhouette"],
}


class Failure(Exception):
    pass


def load_schema(schema_dir, name):
    return json.loads((schema_dir / name).read_text())


def read_rows(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise Failure(f"{path}: empty file")
    return rows[0], rows[1:]


def check_numeric(path, header, body, allow_empty=False):
    for n, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise Failure(f"{path}:{n}: {len(row)} fields, header has {len(header)}")
        for cell in row[1:]:
            if cell == "" and allow_empty:
                continue
            try:
                value = float(cell)
            except ValueError:
                raise Failure(f"{path}:{n}: non-numeric cell {cell!r}") from None
            if not math.isfinite(value):
                raise Failure(f"{path}:{n}: non-finite cell {cell!r}")


def check_csv(path, layout, markers):
    header, body = read_rows(path)
    if "header" in layout:
        if header != layout["header"]:
            raise Failure(f"{path}: header {header} != {layout['header']}")
        check_numeric(path, header, body, layout.get("allow_empty", False))
        return
    if header[0] != layout["first_column"]:
        raise Failure(f"{path}: first column {header[0]!r}, expected {layout['first_column']!r}")
    rest = header[1:]
    if layout.get("columns") == "markers" and rest != markers:
        raise Failure(f"{path}: columns {rest} != markers {markers}")
    if layout.get("columns") == "markers+weight" and rest != markers + ["weight"]:
        raise Failure(f"{path}: columns {rest} != markers + weight")
    if "columns_pattern" in layout:
        pattern = re.compile(layout["columns_pattern"])
        bad = [c for c in rest if not pattern.match(c)]
        if bad:
            raise Failure(f"{path}: unexpected columns {bad[:5]}")
    check_numeric(path, header, body)
    if "row_sum" in layout:
        for n, row in enumerate(body, start=2):
            total = sum(float(c) for c in row[1:])
            if abs(total - layout["row_sum"]) > 1e-9:
                raise Failure(f"{path}:{n}: row sums to {total}")


def check_run_dir(schema_dir, layouts, run_dir):
    meta = json.loads((run_dir / "run.json").read_text())
    jsonschema.validate(meta, load_schema(schema_dir, "run.schema.json"))
    for name in meta["outputs"]:
        if not (run_dir / name).is_file():
            raise Failure(f"{run_dir}: listed output {name} is missing")
    method = meta["config"]["embedding_method"]
    stages = [t["stage"] for t in meta["timings"]]
    for stage in EXPECTED_STAGES[method] + ["write"]:
        if stage not in stages:
            raise Failure(f"{run_dir}: no timing for stage {stage}")
    if meta["config"]["classify"] == "true" and "classify" not in stages:
        raise Failure(f"{run_dir}: classification enabled but not timed")

    jsonschema.validate(json.loads((run_dir / "silhouette.json").read_text()),
                        load_schema(schema_dir, "silhouette.schema.json"))
    if (run_dir / "classification.json").exists():
        report = json.loads((run_dir / "classification.json").read_text())
        jsonschema.validate(report, load_schema(schema_dir, "classification.schema.json"))
        c = report["confusion"]
        if c["tp"] + c["fn"] + c["fp"] + c["tn"] != len(report["samples"]):
            raise Failure(f"{run_dir}: confusion counts do not cover the samples")

    markers = meta["markers"]
    for name, layout in layouts.items():
        if (run_dir / name).exists():
            check_csv(run_dir / name, layout, markers)
    if method != "kme":
        for name in ("centers.csv", "weights.csv"):
            if not (run_dir / name).exists():
                raise Failure(f"{run_dir}: {name} missing")
    svg = (run_dir / "scatter.svg").read_text()
    if not svg.startswith("<svg") or "</svg>" not in svg:
        raise Failure(f"{run_dir}: scatter.svg is not an SVG document")
    for dot in run_dir.glob("mst_*.dot"):
        text = dot.read_text()
        if not text.startswith("graph ") or not text.rstrip().endswith("}"):
            raise Failure(f"{dot}: not a DOT graph")


def main(argv):
    if len(argv) < 3:
        print(__doc__, file=sys.stderr)
        return 2
    schema_dir = Path(argv[1])
    layouts = json.loads((schema_dir / "csv_layouts.json").read_text())
    run_layouts = {k: v for k, v in layouts.items() if k not in ("sweep.csv", "compare.csv")}
    try:
        for arg in argv[2:]:
            path = Path(arg)
            if path.is_dir():
                check_run_dir(schema_dir, run_layouts, path)
            elif "sweep" in path.name:
                check_csv(path, layouts["sweep.csv"], [])
            elif "compare" in path.name:
                check_csv(path, layouts["compare.csv"], [])
            else:
                raise Failure(f"{path}: don't know how to check this file")
            print(f"ok {path}")
    except (Failure, jsonschema.ValidationError, OSError, json.JSONDecodeError) as err:
        print(f"FAIL: {err}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
