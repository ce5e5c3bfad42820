"""Dataset-level statistics over recipes.

Durations are accumulated as exact fractions, so partial aggregates merge
associatively and commutatively: the result never depends on how recipes were
split across workers or in which order they arrived.
"""

from __future__ import annotations

import csv
import io
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction

from phavforge.timing import frame_count

VARIABLES = ("A", "W", "D", "E", "V", "C", "H")


@dataclass
class DatasetStats:
    total_clips: int = 0
    total_frames: int = 0
    duration_sum: Fraction = Fraction(0)
    duration_sq_sum: Fraction = Fraction(0)
    histograms: dict = field(default_factory=lambda: {v: Counter() for v in VARIABLES})

    @property
    def class_counts(self) -> Counter:
        return self.histograms["A"]

    def add(self, recipe) -> None:
        d = Fraction(recipe.L_s)
        self.total_clips += 1
        self.total_frames += frame_count(recipe.L_s)
        self.duration_sum += d
        self.duration_sq_sum += d * d
        for v in VARIABLES:
            self.histograms[v][getattr(recipe, v)] += 1

    def merge(self, other: DatasetStats) -> DatasetStats:
        out = DatasetStats(
            self.total_clips + other.total_clips,
            self.total_frames + other.total_frames,
            self.duration_sum + other.duration_sum,
            self.duration_sq_sum + other.duration_sq_sum,
        )
        for v in VARIABLES:
            out.histograms[v] = self.histograms[v] + other.histograms[v]
        return out

    def __eq__(self, other):
        if not isinstance(other, DatasetStats):
            return NotImplemented
        return (self.total_clips, self.total_frames, self.duration_sum, self.duration_sq_sum) == \
            (other.total_clips, other.total_frames, other.duration_sum, other.duration_sq_sum) and \
            all(dict(self.histograms[v]) == dict(other.histograms[v]) for v in VARIABLES)

    @property
    def mean_duration_s(self) -> float:
        return float(self.duration_sum / self.total_clips)

    @property
    def sd_duration_s(self) -> float:
        """Population standard deviation."""
        n = self.total_clips
        var = self.duration_sq_sum / n - (self.duration_sum / n) ** 2
        return math.sqrt(float(var))

    @property
    def mean_frames_per_clip(self) -> float:
        return self.total_frames / self.total_clips

    @property
    def mean_clips_per_class(self) -> float:
        return self.total_clips / len(self.class_counts)

    def summary(self) -> dict:
        return {
            "total_clips": self.total_clips,
            "total_frames": self.total_frames,
            "classes": len(self.class_counts),
            "mean_clips_per_class": self.mean_clips_per_class,
            "min_clips_per_class": min(self.class_counts.values()),
            "mean_duration_s": self.mean_duration_s,
            "sd_duration_s": self.sd_duration_s,
            "mean_frames_per_clip": self.mean_frames_per_clip,
        }

    def to_text(self) -> str:
        lines = [f"{k}: {_fmt(v)}" for k, v in self.summary().items()]
        for v in VARIABLES:
            lines.append(f"{v}:")
            for label, count in sorted(self.histograms[v].items()):
                lines.append(f"  {label}: {count} ({count / self.total_clips:.4f})")
        return "\n".join(lines) + "\n"

    def histogram_csv(self, variable: str | None = None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["variable", "value", "count", "fraction"])
        for v in VARIABLES if variable is None else (variable,):
            for label, count in sorted(self.histograms[v].items()):
                w.writerow([v, label, count, repr(count / self.total_clips)])
        return buf.getvalue()


def _fmt(v):
    return f"{v:.4f}" if isinstance(v, float) else str(v)


def aggregate_stats(recipes) -> DatasetStats:
    stats = DatasetStats()
    for r in recipes:
        stats.add(r)
    if stats.total_clips == 0:
        raise ValueError("cannot aggregate statistics over zero recipes")
    return stats
