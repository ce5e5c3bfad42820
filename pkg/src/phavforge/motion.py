"""Base-motion catalog, action taxonomy and the action/motion compatibility matrix."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from phavforge.stochastic import CategoricalParams

MUSCLES = (
    "head",
    "chest",
    "hips",
    "left_upper_arm",
    "left_lower_arm",
    "left_hand",
    "right_upper_arm",
    "right_lower_arm",
    "right_hand",
    "left_upper_leg",
    "left_lower_leg",
    "left_foot",
    "right_upper_leg",
    "right_lower_leg",
    "right_foot",
)

SOURCES = ("mocap", "artist", "programmed")
ACTION_KINDS = ("sub-hmdb", "one-person-synthetic", "two-people-synthetic")

# group names usable in taxonomy files in place of individual muscles
MUSCLE_GROUPS = {
    "arms": ("left_upper_arm", "left_lower_arm", "right_upper_arm", "right_lower_arm"),
    "hands": ("left_hand", "right_hand"),
    "legs": ("left_upper_leg", "left_lower_leg", "right_upper_leg", "right_lower_leg"),
    "feet": ("left_foot", "right_foot"),
    "head": ("head",),
    "chest": ("chest",),
    "hips": ("hips",),
}

MANIFEST_VERSION = "phav-manifest/1"
TAXONOMY_VERSION = "phav-taxonomy/1"


class TaxonomyError(ValueError):
    """The action taxonomy file is inconsistent or has a bad regex."""


class ManifestError(ValueError):
    """The motion manifest violates a clip invariant."""


class EmptySupportError(ValueError):
    """No candidate is left after applying the sampling constraints."""


@dataclass(frozen=True)
class MotionClip:
    id: str
    source: str
    description: str
    duration_s: float
    muscle_track_ids: tuple[str, ...] = ()
    object_windows: tuple[tuple[float, float, str], ...] = ()

    def __post_init__(self):
        if not self.muscle_track_ids:
            object.__setattr__(self, "muscle_track_ids", tuple(f"{self.id}:{m}" for m in MUSCLES))
        object.__setattr__(
            self, "object_windows", tuple((float(s), float(e), str(o)) for s, e, o in self.object_windows)
        )
        problems = self.problems()
        if problems:
            raise ManifestError(f"clip {self.id!r}: " + "; ".join(problems))

    def problems(self) -> list[str]:
        out = []
        if self.source not in SOURCES:
            out.append(f"unknown source {self.source!r}")
        if not self.duration_s > 0:
            out.append(f"duration_s must be positive, got {self.duration_s}")
        if len(self.muscle_track_ids) != len(MUSCLES):
            out.append(f"expected {len(MUSCLES)} muscle tracks, got {len(self.muscle_track_ids)}")
        for start, end, label in self.object_windows:
            if not 0.0 <= start <= end <= self.duration_s:
                out.append(f"object window ({start}, {end}, {label}) outside [0, {self.duration_s}]")
        return out


@dataclass(frozen=True)
class ActionCategory:
    name: str
    kind: str
    regexes: tuple[str, ...]
    critical_muscles: frozenset[str]
    supporting_character_count: int = 0

    @property
    def complementary_muscles(self) -> tuple[str, ...]:
        return tuple(m for m in MUSCLES if m not in self.critical_muscles)


@dataclass(frozen=True)
class MotionManifest:
    clips: tuple[MotionClip, ...]
    version: str = MANIFEST_VERSION
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        index = {}
        for i, clip in enumerate(self.clips):
            if clip.id in index:
                raise ManifestError(f"duplicate clip id {clip.id!r}")
            index[clip.id] = i
        object.__setattr__(self, "_index", index)

    def __len__(self):
        return len(self.clips)

    def __contains__(self, clip_id):
        return clip_id in self._index

    def get(self, clip_id: str) -> MotionClip:
        try:
            return self.clips[self._index[clip_id]]
        except KeyError:
            raise KeyError(f"unknown motion {clip_id!r}") from None

    def ids(self) -> list[str]:
        return [c.id for c in self.clips]


@dataclass(frozen=True)
class ThetaAB:
    """Binary action x motion matrix; rows follow ``actions``, columns ``clip_ids``."""

    actions: tuple[str, ...]
    clip_ids: tuple[str, ...]
    matrix: np.ndarray

    def row(self, action: str) -> np.ndarray:
        return self.matrix[self.actions.index(action)]

    def __getitem__(self, key):
        action, clip_id = key
        return int(self.matrix[self.actions.index(action), self.clip_ids.index(clip_id)])


# -- matching ----------------------------------------------------------------


def compile_action_regexes(action: ActionCategory) -> list[re.Pattern]:
    compiled = []
    for pattern in action.regexes:
        try:
            compiled.append(re.compile(pattern, re.IGNORECASE))
        except re.error as exc:
            raise TaxonomyError(f"action {action.name!r}: invalid regex {pattern!r}: {exc}") from None
    return compiled


def build_theta_ab(manifest: MotionManifest, taxonomy: list[ActionCategory]) -> ThetaAB:
    """Entry (a, b) is 1 iff any regex of action a matches the description of clip b."""
    matrix = np.zeros((len(taxonomy), len(manifest)), dtype=np.uint8)
    for i, action in enumerate(taxonomy):
        patterns = compile_action_regexes(action)
        for j, clip in enumerate(manifest.clips):
            if any(p.search(clip.description) for p in patterns):
                matrix[i, j] = 1
    matrix.setflags(write=False)
    return ThetaAB(tuple(a.name for a in taxonomy), tuple(manifest.ids()), matrix)


def base_motion_distribution(
    action: ActionCategory,
    theta_ab: ThetaAB,
    manifest: MotionManifest,
    t_min_s: float,
    require_objects: bool = False,
) -> CategoricalParams:
    """Uniform over clips that match ``action`` and last at least ``t_min_s``.

    ``require_objects`` further restricts the support to clips carrying
    object-interaction annotations.
    """
    if not t_min_s > 0:
        raise ValueError(f"t_min_s must be positive, got {t_min_s}")
    row = theta_ab.row(action.name)
    labels, weights = [], []
    for j, clip in enumerate(manifest.clips):
        ok = row[j] and clip.duration_s >= t_min_s
        if require_objects:
            ok = ok and bool(clip.object_windows)
        labels.append(clip.id)
        weights.append(1.0 if ok else 0.0)
    if not any(weights):
        extra = " with object annotations" if require_objects else ""
        raise EmptySupportError(
            f"no base motion for action {action.name!r} lasting >= {t_min_s}s{extra}"
        )
    return CategoricalParams(tuple(labels), tuple(weights))


# -- files -------------------------------------------------------------------


def _data_path(name: str) -> Path:
    return Path(str(resources.files("phavforge") / "data" / name))


def _load_yaml(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return yaml.load(fh, Loader=getattr(yaml, "CSafeLoader", yaml.SafeLoader))


def expand_muscles(names) -> frozenset[str]:
    out = set()
    for name in names:
        if name in MUSCLE_GROUPS:
            out.update(MUSCLE_GROUPS[name])
        elif name in MUSCLES:
            out.add(name)
        else:
            raise TaxonomyError(f"unknown muscle or muscle group {name!r}")
    return frozenset(out)


def clip_from_dict(d: dict) -> MotionClip:
    return MotionClip(
        id=str(d["id"]),
        source=d["source"],
        description=d["description"],
        duration_s=float(d["duration_s"]),
        muscle_track_ids=tuple(d.get("muscle_track_ids") or ()),
        object_windows=tuple(tuple(w) for w in d.get("object_windows") or ()),
    )


def clip_to_dict(clip: MotionClip) -> dict:
    out = {
        "id": clip.id,
        "source": clip.source,
        "duration_s": clip.duration_s,
        "description": clip.description,
    }
    if clip.muscle_track_ids != tuple(f"{clip.id}:{m}" for m in MUSCLES):
        out["muscle_track_ids"] = list(clip.muscle_track_ids)
    if clip.object_windows:
        out["object_windows"] = [list(w) for w in clip.object_windows]
    return out


def load_manifest(path=None) -> MotionManifest:
    data = _load_yaml(path or _data_path("manifest.yaml"))
    version = data.get("version", MANIFEST_VERSION)
    if version != MANIFEST_VERSION:
        raise ManifestError(f"unsupported manifest version {version!r}")
    return MotionManifest(tuple(clip_from_dict(c) for c in data["clips"]), version)


def dump_manifest(manifest: MotionManifest, path) -> None:
    doc = {"version": manifest.version, "clips": [clip_to_dict(c) for c in manifest.clips]}
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(doc, fh, sort_keys=False, allow_unicode=True, width=100, default_flow_style=None)


def load_taxonomy(path=None) -> list[ActionCategory]:
    data = _load_yaml(path or _data_path("taxonomy.yaml"))
    version = data.get("version", TAXONOMY_VERSION)
    if version != TAXONOMY_VERSION:
        raise TaxonomyError(f"unsupported taxonomy version {version!r}")
    actions, seen = [], set()
    for d in data["actions"]:
        name = d["name"]
        if name in seen:
            raise TaxonomyError(f"duplicate action {name!r}")
        seen.add(name)
        if d["kind"] not in ACTION_KINDS:
            raise TaxonomyError(f"action {name!r}: unknown kind {d['kind']!r}")
        critical = expand_muscles(d["critical_muscles"])
        if not critical:
            raise TaxonomyError(f"action {name!r}: critical_muscles is empty")
        action = ActionCategory(
            name=name,
            kind=d["kind"],
            regexes=tuple(d["regexes"]),
            critical_muscles=critical,
            supporting_character_count=int(d.get("supporting_characters", 0)),
        )
        compile_action_regexes(action)
        actions.append(action)
    return actions
