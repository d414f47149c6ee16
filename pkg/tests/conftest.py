import json
from pathlib import Path

import numpy as np
import pytest

from torsio.geometry import Box, build_grid

SCHEMA_DIR = Path(__file__).resolve().parent.parent / "schema"


@pytest.fixture(scope="session")
def artifact_validator():
    import jsonschema
    from referencing import Registry, Resource

    schemas = [
        json.loads((SCHEMA_DIR / n).read_text())
        for n in ("artifact.schema.json", "measure.schema.json", "region.schema.json")
    ]
    resources = []
    for s in schemas:
        res = Resource.from_contents(s)
        resources.append((s["$id"], res))
        resources.append((s["$id"].split("/")[-1], res))
    registry = Registry().with_resources(resources)
    return jsonschema.Draft7Validator(schemas[0], registry=registry)


@pytest.fixture
def interval_grid():
    # unit interval centered at the origin, generous exhaustion slack
    return build_grid(Box((-2.0,), (2.0,)), 1 / 64)


@pytest.fixture
def small_2d_grid():
    return build_grid(Box((-2.0, -2.0), (2.0, 2.0)), 1 / 8)


def closed_form_interval_w(x: np.ndarray) -> np.ndarray:
    """Solution of -w'' + w = 1 on (-1/2, 1/2), w = 0 at the ends."""
    return 1.0 - np.cosh(x) / np.cosh(0.5)
