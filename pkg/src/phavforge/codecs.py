"""Value encodings of the per-pixel ground truth: depth, optical flow and the semantic palette."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

import numpy as np

U16_MAX = 65535
DEPTH_SCALE = 100.0  # one unit per centimetre
FAR_PLANE_M = U16_MAX / DEPTH_SCALE


class UnknownColorError(KeyError):
    """A color that no palette class uses."""


class UnknownClassError(KeyError):
    """A class name missing from the palette."""


def _round_half_up(x):
    return np.floor(np.asarray(x, dtype=float) + 0.5)


def depth_encode(d_m):
    """Metres to 16-bit depth: centimetre steps, saturating at the 655.35 m far plane.

    Works on scalars and arrays; scalars come back as ``int``.
    """
    d = np.asarray(d_m, dtype=float)
    if np.any(~(d >= 0)):
        raise ValueError("depth must be non-negative and not NaN")
    q = np.minimum(_round_half_up(d * DEPTH_SCALE), U16_MAX).astype(np.uint16)
    return int(q) if q.ndim == 0 else q


def depth_decode(q):
    out = np.asarray(q, dtype=float) / DEPTH_SCALE
    return float(out) if out.ndim == 0 else out


def flow_encode(u_px, dimension_px: int):
    """Flow component in pixels to 16 bits, mapping [-dimension, +dimension] linearly onto [0, 65535]."""
    if dimension_px <= 0:
        raise ValueError(f"dimension_px must be positive, got {dimension_px}")
    u = np.asarray(u_px, dtype=float)
    if np.any(~(np.abs(u) <= dimension_px)):
        raise ValueError(f"flow magnitude exceeds the image dimension {dimension_px}")
    q = _round_half_up((u + dimension_px) * (U16_MAX / (2.0 * dimension_px))).astype(np.uint16)
    return int(q) if q.ndim == 0 else q


def flow_decode(q, dimension_px: int):
    out = np.asarray(q, dtype=float) * (2.0 * dimension_px / U16_MAX) - dimension_px
    return float(out) if out.ndim == 0 else out


# -- palette -----------------------------------------------------------------


@dataclass(frozen=True)
class SemanticPalette:
    colors: dict  # class -> (r, g, b)
    groups: dict  # class -> group

    def __post_init__(self):
        inverse = {}
        for name, rgb in self.colors.items():
            if rgb in inverse:
                raise ValueError(f"classes {inverse[rgb]!r} and {name!r} share the color {rgb}")
            inverse[rgb] = name
        object.__setattr__(self, "_inverse", inverse)

    def __len__(self):
        return len(self.colors)

    def lookup(self, name: str) -> tuple[int, int, int]:
        try:
            return self.colors[name]
        except KeyError:
            raise UnknownClassError(name) from None

    def inverse(self, rgb) -> str:
        key = tuple(int(v) for v in rgb)
        try:
            return self._inverse[key]
        except KeyError:
            raise UnknownColorError(key) from None

    def classes(self, group: str | None = None) -> list[str]:
        return [c for c in self.colors if group is None or self.groups[c] == group]

    def human_classes(self) -> list[str]:
        return [c for c, g in self.groups.items() if g in ("human_part", "human_joint")]


def load_palette(path=None) -> SemanticPalette:
    if path is None:
        path = resources.files("phavforge") / "data" / "palette.csv"
    colors, groups = {}, {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            name = row["class"]
            if name in colors:
                raise ValueError(f"duplicate palette class {name!r}")
            rgb = (int(row["r"]), int(row["g"]), int(row["b"]))
            if not all(0 <= v <= 255 for v in rgb):
                raise ValueError(f"class {name!r}: color {rgb} outside 0..255")
            colors[name] = rgb
            groups[name] = row["group"]
    return SemanticPalette(colors, groups)


@lru_cache(maxsize=1)
def default_palette() -> SemanticPalette:
    return load_palette()


def palette_lookup(name: str) -> tuple[int, int, int]:
    return default_palette().lookup(name)


def palette_inverse(rgb) -> str:
    return default_palette().inverse(rgb)
