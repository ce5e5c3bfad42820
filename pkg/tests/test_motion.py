import re

import numpy as np
import pytest
import yaml

from phavforge.motion import (
    MUSCLES,
    ActionCategory,
    EmptySupportError,
    ManifestError,
    MotionClip,
    MotionManifest,
    TaxonomyError,
    base_motion_distribution,
    build_theta_ab,
    dump_manifest,
    expand_muscles,
    load_manifest,
    load_taxonomy,
)


def action(name, *regexes, critical=("arms",)):
    return ActionCategory(name, "sub-hmdb", regexes, expand_muscles(critical))


def clip(cid, desc, dur=3.0, windows=()):
    return MotionClip(cid, "mocap", desc, dur, object_windows=windows)


@pytest.fixture
def small():
    manifest = MotionManifest((
        clip("m1", "man walking slowly"),
        clip("m2", "woman runs and jumps", dur=0.5),
        clip("m3", "person walks to chair and sits", windows=((0.5, 2.0, "chair"),)),
        clip("m4", "kick ball hard"),
    ))
    taxonomy = [
        action("walk", r"\bwalk"),
        action("jump", r"jump"),
        action("kick ball", r"kick\s+ball", r"soccer"),
    ]
    return manifest, taxonomy


def test_theta_ab_matches_regex_oracle(small):
    manifest, taxonomy = small
    theta = build_theta_ab(manifest, taxonomy)
    expected = np.array([
        [1, 0, 1, 0],
        [0, 1, 0, 0],
        [0, 0, 0, 1],
    ])
    assert np.array_equal(theta.matrix, expected)
    assert theta["walk", "m3"] == 1 and theta["jump", "m1"] == 0


def test_theta_ab_bundled_against_brute_force():
    manifest, taxonomy = load_manifest(), load_taxonomy()
    theta = build_theta_ab(manifest, taxonomy)
    assert theta.matrix.shape == (35, len(manifest))
    for i, a in enumerate(taxonomy):
        for j, c in enumerate(manifest.clips):
            hit = any(re.search(p, c.description, re.IGNORECASE) for p in a.regexes)
            assert theta.matrix[i, j] == int(hit)


def test_base_distribution_filters_short_clips(small):
    manifest, taxonomy = small
    theta = build_theta_ab(manifest, taxonomy)
    walk = base_motion_distribution(taxonomy[0], theta, manifest, 1.0)
    assert walk.support() == ("m1", "m3")
    assert walk.probability("m1") == pytest.approx(0.5)
    with pytest.raises(EmptySupportError, match="'jump'"):
        base_motion_distribution(taxonomy[1], theta, manifest, 1.0)


def test_base_distribution_object_restriction(small):
    manifest, taxonomy = small
    theta = build_theta_ab(manifest, taxonomy)
    d = base_motion_distribution(taxonomy[0], theta, manifest, 1.0, require_objects=True)
    assert d.support() == ("m3",)
    with pytest.raises(EmptySupportError, match="kick ball"):
        base_motion_distribution(taxonomy[2], theta, manifest, 1.0, require_objects=True)


def test_every_bundled_action_has_support():
    manifest, taxonomy = load_manifest(), load_taxonomy()
    theta = build_theta_ab(manifest, taxonomy)
    for a in taxonomy:
        assert base_motion_distribution(a, theta, manifest, 1.0).support()
        assert base_motion_distribution(a, theta, manifest, 1.0, require_objects=True).support()


def test_taxonomy_shape():
    taxonomy = load_taxonomy()
    assert len(taxonomy) == 35
    names = {a.name for a in taxonomy}
    assert {"brush hair", "walk"} <= names
    for a in taxonomy:
        assert a.critical_muscles and set(a.critical_muscles) <= set(MUSCLES)
        assert set(a.complementary_muscles).isdisjoint(a.critical_muscles)


def test_bad_regex_names_action(tmp_path):
    doc = {"version": "phav-taxonomy/1", "actions": [
        {"name": "wave", "kind": "sub-hmdb", "regexes": ["wav(e"], "critical_muscles": ["arms"]},
    ]}
    path = tmp_path / "tax.yaml"
    path.write_text(yaml.safe_dump(doc))
    with pytest.raises(TaxonomyError, match="'wave'"):
        load_taxonomy(path)


def test_unknown_muscle_rejected():
    with pytest.raises(TaxonomyError):
        expand_muscles(["tail"])


def test_clip_invariants():
    with pytest.raises(ManifestError):
        clip("x", "bad", dur=0.0)
    with pytest.raises(ManifestError):
        clip("x", "bad", dur=1.0, windows=((0.5, 2.0, "cup"),))
    with pytest.raises(ManifestError):
        MotionManifest((clip("a", "a"), clip("a", "b")))


def test_manifest_round_trip(tmp_path):
    manifest = load_manifest()
    dump_manifest(manifest, tmp_path / "m.yaml")
    assert load_manifest(tmp_path / "m.yaml") == manifest
