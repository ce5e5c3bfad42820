"""Motion variation plans on the 15-muscle ragdoll and their per-frame realization."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from phavforge.motion import MUSCLES, ActionCategory, EmptySupportError, MotionClip, MotionManifest
from phavforge.stochastic import Stream
from phavforge.timing import FPS, frame_count

MODES = ("none", "random perturbation", "weakening", "objects", "blend")
MAX_BLEND_SOURCES = 2

DEFAULT_VARIATION = {
    "amplitude_m": [0.01, 0.10],
    "frequency_hz": [0.25, 2.0],
    "weakening_strength": [0.3, 1.0],
}


@dataclass(frozen=True)
class Perturbation:
    amplitude_m: float
    frequency_hz: float
    phase_rad: float

    def offset(self, t_s: float) -> tuple[float, float, float]:
        angle = 2.0 * math.pi * self.frequency_hz * t_s + self.phase_rad
        return (self.amplitude_m * math.cos(angle), 0.0, self.amplitude_m * math.sin(angle))


@dataclass(frozen=True)
class ObjectPlan:
    label: str
    start_s: float
    end_s: float


@dataclass(frozen=True)
class VariationPlan:
    mode: str
    affected_muscles: tuple[str, ...] = ()
    perturbation: dict = field(default_factory=dict)
    weakening: dict = field(default_factory=dict)
    blend_sources: tuple[str, ...] = ()
    blend_map: dict = field(default_factory=dict)
    object_plan: ObjectPlan | None = None

    @classmethod
    def none(cls) -> VariationPlan:
        return cls("none")


def _muscle_subset(rng: Stream, candidates) -> tuple[str, ...]:
    """Uniform non-empty subset size, then a uniform subset of that size, in canonical order."""
    candidates = list(candidates)
    k = 1 + rng.integer(len(candidates))
    chosen = set(rng.sample_without_replacement(candidates, k))
    return tuple(m for m in MUSCLES if m in chosen)


def blend_candidates(base: MotionClip, manifest: MotionManifest, t_min_s: float) -> list[str]:
    return [c.id for c in manifest.clips if c.id != base.id and c.duration_s >= t_min_s]


def sample_variation_plan(
    rng: Stream,
    action: ActionCategory,
    base: MotionClip,
    mode: str,
    manifest: MotionManifest,
    t_min_s: float = 1.0,
    ranges: dict | None = None,
    _blend_pool: list[str] | None = None,
) -> VariationPlan:
    if mode not in MODES:
        raise ValueError(f"unknown variation mode {mode!r}; expected one of {MODES}")
    r = ranges or DEFAULT_VARIATION
    if mode == "none":
        return VariationPlan.none()

    if mode == "random perturbation":
        muscles = _muscle_subset(rng, action.complementary_muscles)
        (a_lo, a_hi), (f_lo, f_hi) = r["amplitude_m"], r["frequency_hz"]
        perturbation = {
            m: Perturbation(rng.between(a_lo, a_hi), rng.between(f_lo, f_hi), rng.between(0.0, 2.0 * math.pi))
            for m in muscles
        }
        return VariationPlan(mode, muscles, perturbation=perturbation)

    if mode == "weakening":
        # weakening is independent of the action, so any muscle may be chosen
        muscles = _muscle_subset(rng, MUSCLES)
        lo, hi = r["weakening_strength"]
        # u in [0, 1) gives (lo, hi]: full strength reachable, the lower bound excluded
        weakening = {m: hi - (hi - lo) * rng.uniform() for m in muscles}
        return VariationPlan(mode, muscles, weakening=weakening)

    if mode == "blend":
        muscles = _muscle_subset(rng, action.complementary_muscles)
        pool = _blend_pool if _blend_pool is not None else blend_candidates(base, manifest, t_min_s)
        available = len(pool) - (base.id in pool)
        if available < 1:
            raise EmptySupportError(f"no motion available to blend with {base.id!r}")
        n_sources = min(1 + rng.integer(MAX_BLEND_SOURCES), len(muscles), available)
        # uniform over the pool without the base and without repeats, by rejection
        picked = []
        while len(picked) < n_sources:
            cid = pool[rng.integer(len(pool))]
            if cid != base.id and cid not in picked:
                picked.append(cid)
        sources = tuple(picked)
        # every source gets at least one muscle
        order = rng.sample_without_replacement(muscles, len(muscles))
        blend_map = {m: sources[i % n_sources] for i, m in enumerate(order)}
        blend_map = {m: blend_map[m] for m in muscles}
        return VariationPlan(mode, muscles, blend_sources=sources, blend_map=blend_map)

    # objects
    if not base.object_windows:
        raise EmptySupportError(f"motion {base.id!r} has no object annotations for the objects mode")
    start, end, label = rng.choice(base.object_windows)
    return VariationPlan(mode, object_plan=ObjectPlan(label, start, end))


def validate_plan(plan: VariationPlan, action: ActionCategory) -> list[str]:
    """Every broken plan invariant as one message; empty when the plan is sound."""
    out = []
    if plan.mode not in MODES:
        return [f"unknown variation mode {plan.mode!r}"]
    unknown = [m for m in plan.affected_muscles if m not in MUSCLES]
    out += [f"unknown muscle {m!r}" for m in unknown]
    if len(set(plan.affected_muscles)) != len(plan.affected_muscles):
        out.append("affected muscles contain duplicates")

    if plan.mode == "none":
        if plan.affected_muscles or plan.perturbation or plan.weakening or plan.blend_sources \
                or plan.blend_map or plan.object_plan is not None:
            out.append("mode 'none' must carry an empty plan")
        return out

    if plan.mode in ("random perturbation", "blend"):
        for m in plan.affected_muscles:
            if m in action.critical_muscles:
                out.append(f"{plan.mode} touches muscle {m!r}, critical for action {action.name!r}")

    if plan.mode == "random perturbation":
        if set(plan.perturbation) != set(plan.affected_muscles):
            out.append("perturbation parameters must cover exactly the affected muscles")
        for m, p in plan.perturbation.items():
            if not (p.amplitude_m >= 0 and p.frequency_hz >= 0 and math.isfinite(p.phase_rad)):
                out.append(f"muscle {m!r}: invalid perturbation {p}")
    elif plan.perturbation:
        out.append(f"mode {plan.mode!r} must not carry perturbation parameters")

    if plan.mode == "weakening":
        if set(plan.weakening) != set(plan.affected_muscles):
            out.append("weakening factors must cover exactly the affected muscles")
        for m, s in plan.weakening.items():
            if not 0.0 < s <= 1.0:
                out.append(f"muscle {m!r}: weakening factor {s} outside (0, 1]")
    elif plan.weakening:
        out.append(f"mode {plan.mode!r} must not carry weakening factors")

    if plan.mode == "blend":
        if len(plan.blend_sources) > MAX_BLEND_SOURCES:
            out.append(f"blend count > {MAX_BLEND_SOURCES}")
        if not plan.blend_sources:
            out.append("blend mode needs at least one source")
        if set(plan.blend_map) != set(plan.affected_muscles):
            out.append("blend map must cover exactly the affected muscles")
        for m, src in plan.blend_map.items():
            if src not in plan.blend_sources:
                out.append(f"muscle {m!r}: blend source {src!r} is not listed")
    elif plan.blend_sources or plan.blend_map:
        out.append(f"mode {plan.mode!r} must not carry blend sources")

    if plan.mode == "objects":
        if plan.object_plan is None:
            out.append("objects mode needs an object plan")
        elif not 0.0 <= plan.object_plan.start_s <= plan.object_plan.end_s:
            out.append("object window is not ordered")
        if plan.affected_muscles:
            out.append("objects mode does not select muscles")
    elif plan.object_plan is not None:
        out.append(f"mode {plan.mode!r} must not carry an object plan")
    return out


# -- schedules ---------------------------------------------------------------


@dataclass
class VariationSchedule:
    """Per-frame realization: ``offsets`` is (frames, 15, 3), ``strength`` is (frames, 15)."""

    t_s: np.ndarray
    offsets: np.ndarray
    strength: np.ndarray
    sources: dict
    object_active: np.ndarray

    def __len__(self):
        return len(self.t_s)


def orbit_offsets(p: Perturbation, t_s: np.ndarray) -> np.ndarray:
    angle = 2.0 * np.pi * p.frequency_hz * t_s + p.phase_rad
    return np.stack([p.amplitude_m * np.cos(angle), np.zeros_like(angle), p.amplitude_m * np.sin(angle)], axis=-1)


def render_schedule(plan: VariationPlan, duration_s: float) -> VariationSchedule:
    n = frame_count(duration_s)
    t = np.arange(n) / FPS
    offsets = np.zeros((n, len(MUSCLES), 3))
    strength = np.ones((n, len(MUSCLES)))
    for m, p in plan.perturbation.items():
        offsets[:, MUSCLES.index(m)] = orbit_offsets(p, t)
    for m, s in plan.weakening.items():
        strength[:, MUSCLES.index(m)] = s
    active = np.zeros(n, dtype=bool)
    if plan.object_plan is not None:
        active = (t >= plan.object_plan.start_s) & (t <= plan.object_plan.end_s)
    return VariationSchedule(t, offsets, strength, dict(plan.blend_map), active)


def write_schedule(schedule: VariationSchedule, path, delimiter=",") -> None:
    """One row per (frame, muscle): offsets, strength and blend source tag."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
        w.writerow(["frame", "t", "muscle", "dx", "dy", "dz", "strength", "source"])
        for i in range(len(schedule)):
            for j, m in enumerate(MUSCLES):
                dx, dy, dz = schedule.offsets[i, j]
                w.writerow([i, repr(float(schedule.t_s[i])), m, repr(float(dx)), repr(float(dy)), repr(float(dz)),
                            repr(float(schedule.strength[i, j])), schedule.sources.get(m, "")])


# -- plain-data conversion (used by recipe files) ----------------------------------


def plan_to_dict(plan: VariationPlan) -> dict:
    out = {"mode": plan.mode, "affected_muscles": list(plan.affected_muscles)}
    if plan.perturbation:
        out["perturbation"] = {
            m: [p.amplitude_m, p.frequency_hz, p.phase_rad] for m, p in plan.perturbation.items()
        }
    if plan.weakening:
        out["weakening"] = dict(plan.weakening)
    if plan.blend_sources:
        out["blend_sources"] = list(plan.blend_sources)
        out["blend_map"] = dict(plan.blend_map)
    if plan.object_plan is not None:
        op = plan.object_plan
        out["object_plan"] = [op.label, op.start_s, op.end_s]
    return out


def plan_from_dict(d: dict) -> VariationPlan:
    op = d.get("object_plan")
    return VariationPlan(
        mode=str(d["mode"]),
        affected_muscles=tuple(d.get("affected_muscles", ())),
        perturbation={m: Perturbation(float(a), float(f), float(ph)) for m, (a, f, ph) in
                      d.get("perturbation", {}).items()},
        weakening={m: float(s) for m, s in d.get("weakening", {}).items()},
        blend_sources=tuple(d.get("blend_sources", ())),
        blend_map=dict(d.get("blend_map", {})),
        object_plan=None if op is None else ObjectPlan(str(op[0]), float(op[1]), float(op[2])),
    )
