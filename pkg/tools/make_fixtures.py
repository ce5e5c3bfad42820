"""Regenerate the committed motion manifest and waypoint-graph fixtures.

Run once from the repo root; the outputs under src/phavforge/data are committed
and the library never calls this script.

    python3 tools/make_fixtures.py
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np
import yaml

from phavforge.motion import (
    MotionClip,
    MotionManifest,
    base_motion_distribution,
    build_theta_ab,
    dump_manifest,
    load_taxonomy,
)

DATA = Path(__file__).resolve().parents[1] / "src" / "phavforge" / "data"
SEED = 20170000
N_MOCAP = 859

# (description, natural object or None)
TEMPLATES = [
    ("walk forward", None),
    ("walk with arm swing", None),
    ("walk slowly and turn around", None),
    ("walk backwards", None),
    ("walk in a circle", None),
    ("walk up to a wall and stop", None),
    ("run forward", None),
    ("jog in place", None),
    ("run and turn left", None),
    ("running in a circle", None),
    ("run away from an attacker", None),
    ("sprint across the field", None),
    ("escape from a threat", None),
    ("jump up and down", None),
    ("jump forward over an obstacle", None),
    ("jump in place", None),
    ("hop on one foot", None),
    ("hop forward", None),
    ("one-leg jump", None),
    ("climb up the stairs", None),
    ("climb down the stairs", None),
    ("stair climbing", None),
    ("sit down on a chair", "Chair"),
    ("sitting and talking", None),
    ("stand up from a chair", "Chair"),
    ("get up from the floor", None),
    ("brush her hair", "Hair Brush"),
    ("comb hair in front of a mirror", "Hair Brush"),
    ("catch a ball", "Ball"),
    ("catching a thrown object", None),
    ("throw a ball", "Ball"),
    ("throwing a frisbee", None),
    ("clap hands", None),
    ("clapping while standing", None),
    ("golf swing", "Golf Club"),
    ("swing a club on the green", "Golf Club"),
    ("kick a soccer ball", "Ball"),
    ("kicking the ball forward", "Ball"),
    ("push a heavy box", None),
    ("pushing a door open", None),
    ("pick up a box from the floor", None),
    ("picking up an object", None),
    ("pour water into a glass", None),
    ("pouring tea", None),
    ("pull-ups on a bar", None),
    ("chin-ups", None),
    ("shoot a basket", "Ball"),
    ("basketball shot", "Ball"),
    ("shoot with bow and arrow", "Bow"),
    ("archery practice", "Bow"),
    ("aim and fire a pistol", "Gun"),
    ("hold a rifle and shoot", "Gun"),
    ("baseball swing", "Baseball Bat"),
    ("swing a bat", "Baseball Bat"),
    ("wave hello", None),
    ("waving goodbye", None),
    ("crawl on the floor", None),
    ("crawling forward", None),
    ("dive forward onto the floor", None),
    ("fall down", None),
    ("falling forward", None),
    ("stretch legs into a split", None),
    ("stretching exercise", None),
    ("limp with an injured leg", None),
    ("walk with a limp", None),
    ("moonwalk", None),
    ("slide backwards", None),
    ("stagger as if drunk", None),
    ("stumble and recover", None),
    ("raise hands up in surrender", None),
    ("raising both arms", None),
    ("hug a friend", None),
    ("walk up and embrace", None),
    ("walk along a straight line heel to toe", None),
    ("walk on a balance beam", None),
    ("bump into someone", None),
    ("collide with a pole", None),
    ("cross the street", None),
    ("dance salsa", None),
    ("box with a punching bag", None),
    ("idle standing pose", None),
    ("bend over and touch toes", None),
]

CARRY = [(" while carrying a ball", "Ball"), (" while carrying a chair", "Chair"), (" while carrying a bag", "Misc")]

ARTIST = [
    ("artist_001", "artist: stagger as if drunk, looped", None),
    ("artist_002", "artist: moonwalk dance move", None),
    ("artist_003", "artist: raise hands up in surrender", None),
]


def _duration(rng) -> float:
    if rng.random() < 0.03:
        d = rng.uniform(0.4, 0.95)
    else:
        d = min(60.0, max(1.2, math.exp(rng.normal(math.log(12.0), 0.6))))
    return round(d, 3)


def _windows(rng, duration, label):
    start = round(rng.uniform(0.0, 0.5 * duration), 3)
    end = min(duration, round(rng.uniform(start, duration), 3))
    return ((start, end, label),)


def make_manifest(rng) -> MotionManifest:
    clips = []
    for i in range(N_MOCAP):
        n = len(TEMPLATES)
        # two full passes over the templates; the second pass always carries an object
        text, obj = TEMPLATES[i % n] if i < 2 * n else TEMPLATES[rng.integers(n)]
        forced = n <= i < 2 * n
        duration = _duration(rng)
        if forced:
            duration = max(duration, 2.0)
        windows = ()
        if obj is not None and (forced or rng.random() < 0.7):
            windows = _windows(rng, duration, obj)
        elif obj is None and (forced or rng.random() < 0.2):
            suffix, label = CARRY[rng.integers(len(CARRY))]
            text = text + suffix
            windows = _windows(rng, duration, label)
        clips.append(MotionClip(f"mocap_{i + 1:04d}", "mocap", text, duration, object_windows=windows))
    for cid, text, obj in ARTIST:
        clips.append(MotionClip(cid, "artist", text, _duration(rng)))
    return MotionManifest(tuple(clips))


def _check(manifest, taxonomy):
    theta = build_theta_ab(manifest, taxonomy)
    for action in taxonomy:
        plain = base_motion_distribution(action, theta, manifest, 1.0)
        objects = base_motion_distribution(action, theta, manifest, 1.0, require_objects=True)
        assert len(plain.support()) >= 3, action.name
        assert len(objects.support()) >= 1, action.name


def _graph(rng, prefix, nx, ny, spacing, origin, z=0.0):
    nodes, ids = [], {}
    for ix in range(nx):
        for iy in range(ny):
            nid = f"{prefix}{len(nodes)}"
            ids[ix, iy] = nid
            jitter = rng.uniform(-0.3, 0.3, size=2).tolist()
            nodes.append({
                "id": nid,
                "xyz": [round(origin[0] + ix * spacing + jitter[0], 3),
                        round(origin[1] + iy * spacing + jitter[1], 3), z],
            })
    edges = []
    for ix in range(nx):
        for iy in range(ny):
            if ix + 1 < nx:
                edges.append([ids[ix, iy], ids[ix + 1, iy]])
            if iy + 1 < ny:
                edges.append([ids[ix, iy], ids[ix, iy + 1]])
    return {"nodes": nodes, "edges": edges}


ENVIRONMENTS = {
    # name: (indoor, protagonist grid, background grid, spacing, origin)
    "simple": (False, (3, 3), (4, 4), 6.0, (0.0, 0.0)),
    "urban": (False, (5, 4), (6, 6), 8.0, (120.0, -40.0)),
    "green": (False, (4, 4), (5, 5), 7.0, (-200.0, 60.0)),
    "middle": (False, (4, 3), (5, 4), 9.0, (300.0, 150.0)),
    "lake": (False, (5, 3), (5, 5), 6.5, (-80.0, -260.0)),
    "stadium": (False, (4, 4), (6, 4), 10.0, (500.0, -300.0)),
    "house": (True, (3, 4), None, 2.5, (40.0, 400.0)),
}


def make_environments(rng):
    out = {}
    for name, (indoor, pgrid, bgrid, spacing, origin) in ENVIRONMENTS.items():
        doc = {
            "version": "phav-environment/1",
            "name": name,
            "indoor": indoor,
            "protagonist_graph": _graph(rng, "p", *pgrid, spacing, origin),
        }
        if bgrid is not None:
            shifted = (origin[0] - spacing, origin[1] - spacing)
            doc["background_graph"] = _graph(rng, "b", *bgrid, spacing, shifted)
        out[name] = doc
    return out


def main():
    rng = np.random.default_rng(SEED)
    taxonomy = load_taxonomy(DATA / "taxonomy.yaml")
    manifest = make_manifest(rng)
    _check(manifest, taxonomy)
    dump_manifest(manifest, DATA / "manifest.yaml")
    for name, doc in make_environments(rng).items():
        with open(DATA / "environments" / f"{name}.yaml", "w", encoding="utf-8") as fh:
            yaml.safe_dump(doc, fh, sort_keys=False, default_flow_style=None, width=100)
    print(f"wrote {len(manifest)} clips and {len(ENVIRONMENTS)} environments to {DATA}")


if __name__ == "__main__":
    main()
