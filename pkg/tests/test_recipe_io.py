import dataclasses
import json
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phavforge.camera import sample_camera_params
from phavforge.recipe_io import (
    RECIPE_VERSION,
    RecipeFormatError,
    deserialize_bundle,
    deserialize_recipe,
    read_recipe,
    recipe_files,
    serialize_bundle,
    serialize_recipe,
    write_recipe,
)
from phavforge.scenario import sample_recipe
from phavforge.stochastic import SeedPath


@given(st.integers(0, 2**63), st.integers(0, 10**6))
@settings(max_examples=150, deadline=None)
def test_round_trip_is_exact(ctx, seed, index):
    r = sample_recipe(seed, index, ctx)
    data = serialize_recipe(r)
    back = deserialize_recipe(data)
    assert back == r
    assert serialize_recipe(back) == data


def test_static_camera_infinite_drag_survives(ctx):
    rig = sample_camera_params(SeedPath(8, (("rig", 0),)).stream(), "static")
    r = dataclasses.replace(sample_recipe(8, 0, ctx), C="static", camera_params=rig)
    assert math.isinf(r.camera_params.camera_drag)
    assert deserialize_recipe(serialize_recipe(r)) == r


def test_header_and_canonical_json(ctx):
    text = serialize_recipe(sample_recipe(1, 2, ctx)).decode()
    header, body = text.split("\n", 1)
    assert header == RECIPE_VERSION
    payload = json.loads(body)
    assert json.dumps(payload, sort_keys=True, separators=(",", ":"), ensure_ascii=False) + "\n" == body


@pytest.mark.parametrize("mutate", [
    lambda b: b[: len(b) // 2],
    lambda b: b.replace(RECIPE_VERSION.encode(), b"phav-recipe/9", 1),
    lambda b: b.split(b"\n", 1)[0],
    lambda b: b"\xff\xfe" + b,
    lambda b: b.replace(b'"L_s":', b'"L_s":"x",  "junk":', 1),
    lambda b: b.replace(b'"A":', b'"Q":', 1),
])
def test_corrupt_payloads_rejected(ctx, mutate):
    data = serialize_recipe(sample_recipe(1, 0, ctx))
    with pytest.raises(RecipeFormatError):
        deserialize_recipe(mutate(data))


def test_unknown_version_message(ctx):
    data = serialize_recipe(sample_recipe(1, 0, ctx)).replace(b"phav-recipe/1", b"phav-recipe/2")
    with pytest.raises(RecipeFormatError, match="unknown recipe version"):
        deserialize_recipe(data)


def test_directory_files(tmp_path, ctx):
    recipes = [sample_recipe(3, i, ctx) for i in (10, 2, 1)]
    for r in recipes:
        write_recipe(r, tmp_path)
    (tmp_path / "notes.txt").write_text("ignored")
    files = recipe_files(tmp_path)
    assert [p.name for p in files] == ["recipe_1.recipe", "recipe_2.recipe", "recipe_10.recipe"]
    assert read_recipe(files[2]) == recipes[0]


def test_bundle(ctx):
    recipes = [sample_recipe(4, i, ctx) for i in range(25)]
    data = serialize_bundle(recipes)
    assert deserialize_bundle(data) == recipes
    assert deserialize_bundle(serialize_bundle([])) == []
    with pytest.raises(RecipeFormatError):
        deserialize_bundle(data[:-10])
    with pytest.raises(RecipeFormatError):
        deserialize_bundle(data[:10])
    with pytest.raises(RecipeFormatError):
        deserialize_bundle(b"NOTABUND" + data[8:])
