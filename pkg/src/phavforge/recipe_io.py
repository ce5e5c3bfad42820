"""Recipe files: a version header line followed by canonical JSON, plus a bulk binary bundle."""

from __future__ import annotations

import json
import math
import re
import struct
from pathlib import Path

from phavforge.camera import CameraRig, Impulse, SpringParams
from phavforge.scenario import Recipe, ScenePlacement, WeatherState
from phavforge.stochastic import SeedPath
from phavforge.variation import plan_from_dict, plan_to_dict

RECIPE_VERSION = "phav-recipe/1"
BUNDLE_MAGIC = b"PHAVBIN1"
_LEN = struct.Struct("<I")
_NAME = re.compile(r"^recipe_(\d+)\.recipe$")


class RecipeFormatError(ValueError):
    """A recipe payload has an unknown version or a malformed field."""


def _num(x: float):
    # JSON has no infinity; the pinned-camera drag is the only non-finite field
    return x if math.isfinite(x) else ("inf" if x > 0 else "-inf")


def _unnum(x) -> float:
    if isinstance(x, str):
        if x in ("inf", "-inf"):
            return float(x)
        raise RecipeFormatError(f"expected a number, got {x!r}")
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise RecipeFormatError(f"expected a number, got {x!r}")
    return float(x)


def _rig_to_dict(rig: CameraRig) -> dict:
    return {
        "behavior": rig.behavior,
        "camera_mass": rig.camera_mass,
        "camera_drag": _num(rig.camera_drag),
        "target_mass": rig.target_mass,
        "target_drag": rig.target_drag,
        "spring_ct": [rig.spring_ct.stiffness, rig.spring_ct.damping, rig.spring_ct.rest_length],
        "spring_tp": [rig.spring_tp.stiffness, rig.spring_tp.damping, rig.spring_tp.rest_length],
        "min_distance_m": rig.min_distance_m,
        "impulse": {"direction": list(rig.impulse.direction), "magnitude": rig.impulse.magnitude},
        "azimuth_rad": rig.azimuth_rad,
        "elevation_rad": rig.elevation_rad,
    }


def _rig_from_dict(d: dict) -> CameraRig:
    return CameraRig(
        behavior=str(d["behavior"]),
        camera_mass=_unnum(d["camera_mass"]),
        camera_drag=_unnum(d["camera_drag"]),
        target_mass=_unnum(d["target_mass"]),
        target_drag=_unnum(d["target_drag"]),
        spring_ct=SpringParams(*map(_unnum, d["spring_ct"])),
        spring_tp=SpringParams(*map(_unnum, d["spring_tp"])),
        min_distance_m=_unnum(d["min_distance_m"]),
        impulse=Impulse(tuple(map(_unnum, d["impulse"]["direction"])), _unnum(d["impulse"]["magnitude"])),
        azimuth_rad=_unnum(d["azimuth_rad"]),
        elevation_rad=_unnum(d["elevation_rad"]),
    )


def recipe_to_dict(r: Recipe) -> dict:
    ws, pl = r.weather_state, r.placement
    return {
        "version": RECIPE_VERSION,
        "seed_path": r.seed_path.to_list(),
        "H": r.H,
        "A": r.A,
        "L_s": r.L_s,
        "B": r.B,
        "V": r.V,
        "C": r.C,
        "E": r.E,
        "D": r.D,
        "W": r.W,
        "clock_T_h": r.clock_T_h,
        "weather_state": {
            "sun_brightness": ws.sun_brightness,
            "ambient_luminosity": ws.ambient_luminosity,
            "fog_visible": ws.fog_visible,
            "clouds_visible": ws.clouds_visible,
            "rain_active": ws.rain_active,
            "toggles": dict(ws.toggles),
            "sun_elevation_deg": ws.sun_elevation_deg,
        },
        "placement": {
            "waypoint": pl.waypoint,
            "position": list(pl.position),
            "supporting_positions": [list(p) for p in pl.supporting_positions],
            "background_spawns": [list(s) for s in pl.background_spawns],
        },
        "camera": _rig_to_dict(r.camera_params),
        "variation": plan_to_dict(r.variation_plan),
    }


def _str(d, key) -> str:
    v = d[key]
    if not isinstance(v, str):
        raise RecipeFormatError(f"field {key!r} must be a string, got {v!r}")
    return v


def _bool(d, key) -> bool:
    v = d[key]
    if not isinstance(v, bool):
        raise RecipeFormatError(f"field {key!r} must be a boolean, got {v!r}")
    return v


def recipe_from_dict(d: dict) -> Recipe:
    if not isinstance(d, dict):
        raise RecipeFormatError("recipe payload must be an object")
    version = d.get("version")
    if version != RECIPE_VERSION:
        raise RecipeFormatError(f"unknown recipe version {version!r}")
    try:
        ws, pl = d["weather_state"], d["placement"]
        return Recipe(
            seed_path=SeedPath.from_list(d["seed_path"]),
            H=_str(d, "H"),
            A=_str(d, "A"),
            L_s=_unnum(d["L_s"]),
            B=_str(d, "B"),
            V=_str(d, "V"),
            C=_str(d, "C"),
            E=_str(d, "E"),
            D=_str(d, "D"),
            W=_str(d, "W"),
            clock_T_h=_unnum(d["clock_T_h"]),
            weather_state=WeatherState(
                sun_brightness=_unnum(ws["sun_brightness"]),
                ambient_luminosity=_unnum(ws["ambient_luminosity"]),
                fog_visible=_bool(ws, "fog_visible"),
                clouds_visible=_bool(ws, "clouds_visible"),
                rain_active=_bool(ws, "rain_active"),
                toggles={str(k): _bool(ws["toggles"], k) for k in ws["toggles"]},
                sun_elevation_deg=_unnum(ws["sun_elevation_deg"]),
            ),
            placement=ScenePlacement(
                waypoint=_str(pl, "waypoint"),
                position=tuple(map(_unnum, pl["position"])),
                supporting_positions=tuple(tuple(map(_unnum, p)) for p in pl["supporting_positions"]),
                background_spawns=tuple((str(a), str(b)) for a, b in pl["background_spawns"]),
            ),
            camera_params=_rig_from_dict(d["camera"]),
            variation_plan=plan_from_dict(d["variation"]),
        )
    except RecipeFormatError:
        raise
    except KeyError as exc:
        raise RecipeFormatError(f"malformed recipe: missing field {exc.args[0]!r}") from None
    except (TypeError, ValueError, AttributeError) as exc:
        raise RecipeFormatError(f"malformed recipe field: {exc}") from None


def serialize_recipe(r: Recipe) -> bytes:
    body = json.dumps(recipe_to_dict(r), sort_keys=True, separators=(",", ":"), ensure_ascii=False,
                      allow_nan=False)
    return f"{RECIPE_VERSION}\n{body}\n".encode("utf-8")


def deserialize_recipe(data: bytes) -> Recipe:
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise RecipeFormatError(f"recipe is not UTF-8: {exc}") from None
    header, sep, body = text.partition("\n")
    if not sep:
        raise RecipeFormatError("malformed recipe: missing header line")
    if header != RECIPE_VERSION:
        raise RecipeFormatError(f"unknown recipe version {header!r}")
    try:
        payload = json.loads(body)
    except json.JSONDecodeError as exc:
        raise RecipeFormatError(f"malformed recipe field: {exc}") from None
    return recipe_from_dict(payload)


# -- files and directories ---------------------------------------------------------


def recipe_filename(index: int) -> str:
    return f"recipe_{index}.recipe"


def write_recipe(r: Recipe, directory) -> Path:
    index = dict(r.seed_path.path).get("recipe", 0)
    path = Path(directory) / recipe_filename(index)
    path.write_bytes(serialize_recipe(r))
    return path


def read_recipe(path) -> Recipe:
    return deserialize_recipe(Path(path).read_bytes())


def recipe_files(directory) -> list[Path]:
    """``recipe_<n>.recipe`` files of a directory, ordered by ``n``."""
    found = []
    for p in Path(directory).iterdir():
        m = _NAME.match(p.name)
        if m:
            found.append((int(m.group(1)), p))
    return [p for _, p in sorted(found)]


# -- binary bundle -------------------------------------------------------------------


def serialize_bundle(recipes) -> bytes:
    parts = [BUNDLE_MAGIC]
    for r in recipes:
        payload = serialize_recipe(r)
        parts.append(_LEN.pack(len(payload)))
        parts.append(payload)
    return b"".join(parts)


def deserialize_bundle(data: bytes) -> list[Recipe]:
    if data[:len(BUNDLE_MAGIC)] != BUNDLE_MAGIC:
        raise RecipeFormatError("not a recipe bundle")
    out, pos = [], len(BUNDLE_MAGIC)
    while pos < len(data):
        if pos + _LEN.size > len(data):
            raise RecipeFormatError("truncated bundle length prefix")
        (n,) = _LEN.unpack_from(data, pos)
        pos += _LEN.size
        if pos + n > len(data):
            raise RecipeFormatError("truncated bundle record")
        out.append(deserialize_recipe(data[pos:pos + n]))
        pos += n
    return out
