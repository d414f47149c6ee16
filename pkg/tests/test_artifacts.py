"""Artifact serialization: canonical JSON, CSV formatting, schema conformance."""

import json
import math
from dataclasses import dataclass
from pathlib import Path

import jsonschema
import numpy as np
import pytest
from referencing import Registry, Resource

from torsio.artifacts import (
    dump_csv,
    dump_json,
    profile_rows,
    read_json,
    strip_out_option,
    to_jsonable,
    write_json,
)
from torsio.gallery import PRESETS
from torsio.geometry import Ball, Box
from torsio.measure import DirichletRestriction, InfinityOutside, Potential, Sum, Zero
from torsio.spectral import Profile

SCHEMA_DIR = Path(__file__).resolve().parent.parent / "schema"


def _schema(name):
    return json.loads((SCHEMA_DIR / name).read_text())


def _validator(name):
    schemas = [_schema(n) for n in ("artifact.schema.json", "measure.schema.json", "region.schema.json")]
    resources = []
    for s in schemas:
        res = Resource.from_contents(s)
        resources.append((s["$id"], res))
        # the cross-file refs are relative, so register the bare name too
        resources.append((s["$id"].split("/")[-1], res))
    registry = Registry().with_resources(resources)
    return jsonschema.Draft7Validator(_schema(name), registry=registry)


def test_to_jsonable_scalars():
    assert to_jsonable(3) == 3
    assert to_jsonable(True) is True
    assert to_jsonable(None) is None
    assert to_jsonable("s") == "s"
    assert to_jsonable(0.25) == 0.25
    assert to_jsonable(float("inf")) == "inf"
    assert to_jsonable(float("-inf")) == "-inf"
    assert to_jsonable(np.int64(7)) == 7
    assert to_jsonable(np.float64(math.inf)) == "inf"
    with pytest.raises(ValueError):
        to_jsonable(float("nan"))


def test_to_jsonable_containers():
    out = to_jsonable({"a": (1, 2.5), 3: np.array([1.0, math.inf])})
    assert out == {"a": [1, 2.5], "3": [1.0, "inf"]}

    @dataclass
    class Pair:
        x: float
        y: float

    assert to_jsonable(Pair(1.0, math.inf)) == {"x": 1.0, "y": "inf"}
    assert to_jsonable(Zero()) == {"type": "zero"}
    with pytest.raises(TypeError):
        to_jsonable(object())


def test_strip_out_option():
    argv = ["diagnose", "--out", "a.json", "--tol", "1e-8", "--out=b.json", "-q", "l2"]
    assert strip_out_option(argv) == ["diagnose", "--tol", "1e-8", "-q", "l2"]
    assert strip_out_option(["run", "--out"]) == ["run"]
    assert strip_out_option([]) == []


def test_dump_json_is_canonical():
    payload = {"b": 2, "a": {"z": 1.0, "k": [3, 2]}}
    text = dump_json(payload, argv=["torsion", "--out", "x.json", "--h", "0.5"])
    assert text == dump_json(payload, argv=["torsion", "--out", "x.json", "--h", "0.5"])
    assert text.endswith("\n")
    doc = json.loads(text)
    assert doc["tool"] == "torsio"
    assert doc["argv"] == ["torsion", "--h", "0.5"]
    assert doc["result"] == {"b": 2, "a": {"z": 1.0, "k": [3, 2]}}
    # keys come out sorted so diffs are byte-stable
    assert text.index('"argv"') < text.index('"result"') < text.index('"tool"')


def test_json_file_roundtrip(tmp_path):
    path = tmp_path / "r.json"
    write_json(path, {"kind": "probe", "value": math.inf}, argv=["probe"])
    doc = read_json(path)
    assert doc["result"] == {"kind": "probe", "value": "inf"}


def test_csv_cells_roundtrip_exactly():
    rows = [(1.0 / 3.0, 1, "lab"), (0.1, 2, "x"), (np.float64(2.5e-17), 3, "y")]
    text = dump_csv(("v", "n", "label"), rows)
    lines = text.splitlines()
    assert lines[0] == "v,n,label"
    assert text.endswith("\n")
    for line, row in zip(lines[1:], rows):
        v, n, label = line.split(",")
        # 17 significant digits: parsing the cell recovers the exact double
        assert float(v) == float(row[0])
        assert n == str(row[1])
        assert label == row[2]


def test_profile_rows_flatten():
    p1 = Profile([1.0, 2.0], [0.5, 0.25], "tail")
    p2 = Profile([1.0], [3.0], "mass")
    header, rows = profile_rows([p1, p2])
    assert header == ("label", "radius", "value")
    assert rows == [("tail", 1.0, 0.5), ("tail", 2.0, 0.25), ("mass", 1.0, 3.0)]


def test_schema_files_are_valid_draft7():
    for name in ("artifact.schema.json", "measure.schema.json", "region.schema.json"):
        jsonschema.Draft7Validator.check_schema(_schema(name))


def test_artifact_schema_accepts_envelope():
    v = _validator("artifact.schema.json")
    doc = json.loads(dump_json({"kind": "torsion", "max": 0.62}, argv=["torsion"]))
    v.validate(doc)
    bad = json.loads(dump_json({"max": 0.62}))
    with pytest.raises(jsonschema.ValidationError):
        v.validate(bad)  # no result.kind
    with pytest.raises(jsonschema.ValidationError):
        v.validate({"tool": "torsio", "result": {"kind": "torsion"}})  # no version


def test_measure_schema_accepts_all_presets():
    v = _validator("measure.schema.json")
    for p in PRESETS.values():
        v.validate(to_jsonable(p.measure()))


def test_measure_schema_accepts_composites():
    v = _validator("measure.schema.json")
    m = Sum(
        (
            Potential("x1^2"),
            DirichletRestriction(Zero(), Box((-math.inf, 0.0), (math.inf, 1.0))),
            InfinityOutside(Ball((0.0, 0.0), 2.0)),
        )
    )
    v.validate(to_jsonable(m))


def test_measure_schema_rejects_malformed():
    v = _validator("measure.schema.json")
    with pytest.raises(jsonschema.ValidationError):
        v.validate({"type": "potential"})  # expr missing
    with pytest.raises(jsonschema.ValidationError):
        v.validate(
            {"type": "infinity_outside", "region": {"type": "ball", "center": [0.0, 0.0], "radius": -1.0}}
        )
