"""Ancestral sampling of complete procedural recipes.

A recipe factorises into three independent parts, each drawn from its own
substream of the recipe's seed path:

* world: day phase D, weather W, clock time and weather elements;
* actor: human model H;
* action: action A, environment E, camera behavior C, variation mode V,
  base motion B, duration L and scene placement.

Camera parameters and the variation plan come from two further substreams so
that changing one module's draw count never shifts another module's values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from pathlib import Path

from phavforge import camera as cam
from phavforge import variation as var
from phavforge.motion import (
    ActionCategory,
    EmptySupportError,
    MotionClip,
    MotionManifest,
    ThetaAB,
    _data_path,
    _load_yaml,
    base_motion_distribution,
    build_theta_ab,
    load_manifest,
    load_taxonomy,
)
from phavforge.stochastic import (
    CategoricalParams,
    ParameterDomainError,
    SeedPath,
    Stream,
    TriangularParams,
    categorical_sample,
    in_wrapped_support,
    triangular_icdf,
    triangular_sample_wrapped,
)
from phavforge.timing import frame_count

CONFIG_VERSION = "phav-config/1"
ENVIRONMENT_VERSION = "phav-environment/1"
CLOCK_MODULUS_H = 24.0

WEATHERS = ("clear", "overcast", "rain", "fog")
DAY_PHASES = ("dawn", "day", "dusk", "night")
BASE_TOGGLES = ("fog_visible", "clouds_visible", "rain_active")


class ScenarioError(ValueError):
    """A recipe could not be sampled from the given inputs."""


class ConfigError(ScenarioError):
    """The generator configuration or an environment file is invalid."""


# -- configuration -----------------------------------------------------------------


@dataclass(frozen=True)
class ConditionalTable:
    """Rows of label weights keyed by a parent value, with ``"*"`` as the fallback row."""

    rows: dict

    def row(self, key) -> dict:
        return self.rows.get(key, self.rows.get("*", {}))

    def weight(self, key, label) -> float:
        return float(self.row(key).get(label, 0.0))


@dataclass(frozen=True)
class GeneratorConfig:
    theta_A: CategoricalParams
    theta_W: CategoricalParams
    theta_D: CategoricalParams
    theta_H: CategoricalParams
    theta_V: CategoricalParams
    theta_C: CategoricalParams
    theta_AE: ConditionalTable
    theta_AC: ConditionalTable
    theta_EC: ConditionalTable
    theta_WC: ConditionalTable
    T_min_s: float = 1.0
    T_max_s: float = 10.0
    T_mod_s: float = 5.0
    clock: dict = field(default_factory=dict)
    weather: dict = field(default_factory=dict)
    weather_toggles: tuple = ()
    placement: dict = field(default_factory=lambda: {"supporting_distance_m": [0.8, 1.5],
                                                     "max_background_actors": 6})
    variation: dict = field(default_factory=lambda: dict(var.DEFAULT_VARIATION))
    camera: dict = field(default_factory=lambda: dict(cam.DEFAULT_RANGES))
    environments: tuple = ()

    def __post_init__(self):
        problems = self.problems()
        if problems:
            raise ConfigError("; ".join(problems))

    def problems(self) -> list[str]:
        out = []
        if not 0 < self.T_min_s <= self.T_mod_s <= self.T_max_s:
            out.append(f"durations need 0 < T_min <= T_mod <= T_max, got "
                       f"{self.T_min_s}, {self.T_mod_s}, {self.T_max_s}")
        for d in self.theta_D.support():
            if d not in self.clock:
                out.append(f"no clock distribution for day phase {d!r}")
        for d, p in self.clock.items():
            shifted = p if p.a <= p.b else TriangularParams(p.a, p.b + CLOCK_MODULUS_H,
                                                             p.c + CLOCK_MODULUS_H if p.c < p.a else p.c)
            if shifted.a > shifted.c or shifted.c > shifted.b:
                out.append(f"clock distribution for {d!r} has its mode outside the support")
        for w in self.theta_W.support():
            if w not in self.weather:
                out.append(f"no weather element ranges for {w!r}")
        for mode in self.theta_V.labels:
            if mode not in var.MODES:
                out.append(f"unknown variation mode {mode!r}")
        for c in self.theta_C.labels:
            if c not in cam.BEHAVIORS:
                out.append(f"unknown camera behavior {c!r}")
        for e in self.environments:
            if not isinstance(e, str):
                out.append(f"environment names must be strings, got {e!r}")
        return out

    def clock_params(self, phase: str) -> TriangularParams:
        return self.clock[phase]


def _categorical(name, mapping) -> CategoricalParams:
    if not isinstance(mapping, dict) or not mapping:
        raise ConfigError(f"{name} must be a non-empty mapping of label to weight")
    try:
        return CategoricalParams.from_mapping({str(k): float(v) for k, v in mapping.items()})
    except ParameterDomainError as exc:
        raise ConfigError(f"{name}: {exc}") from None


def _conditional(name, rows) -> ConditionalTable:
    if not isinstance(rows, dict) or not rows:
        raise ConfigError(f"{name} must map parent values to weight rows")
    out = {}
    for key, row in rows.items():
        if not isinstance(row, dict):
            raise ConfigError(f"{name}[{key!r}] must be a mapping")
        weights = {str(k): float(v) for k, v in row.items()}
        if any(not math.isfinite(w) or w < 0 for w in weights.values()):
            raise ConfigError(f"{name}[{key!r}] has a negative or non-finite weight")
        out[str(key)] = weights
    return ConditionalTable(out)


def config_from_dict(data: dict, action_names=None) -> GeneratorConfig:
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a mapping")
    version = data.get("version", CONFIG_VERSION)
    if version != CONFIG_VERSION:
        raise ConfigError(f"unsupported config version {version!r}")
    try:
        theta_a = data["theta_A"]
        if theta_a == "uniform":
            if action_names is None:
                action_names = [a.name for a in load_taxonomy()]
            theta_a = {a: 1.0 for a in action_names}
        d = data.get("durations", {})
        return GeneratorConfig(
            theta_A=_categorical("theta_A", theta_a),
            theta_W=_categorical("theta_W", data["theta_W"]),
            theta_D=_categorical("theta_D", data["theta_D"]),
            theta_H=_categorical("theta_H", data["theta_H"]),
            theta_V=_categorical("theta_V", data["theta_V"]),
            theta_C=_categorical("theta_C", data["theta_C"]),
            theta_AE=_conditional("theta_AE", data["theta_AE"]),
            theta_AC=_conditional("theta_AC", data["theta_AC"]),
            theta_EC=_conditional("theta_EC", data["theta_EC"]),
            theta_WC=_conditional("theta_WC", data.get("theta_WC", {"*": {c: 1 for c in cam.BEHAVIORS}})),
            T_min_s=float(d.get("T_min_s", 1.0)),
            T_max_s=float(d.get("T_max_s", 10.0)),
            T_mod_s=float(d.get("T_mod_s", 5.0)),
            clock={k: TriangularParams(*map(float, v)) for k, v in data["clock"].items()},
            weather={k: {n: tuple(map(float, r)) for n, r in v.items()} for k, v in data["weather"].items()},
            weather_toggles=tuple((t["name"], t["parent"], float(t["p"])) for t in data.get("weather_toggles", ())),
            placement=dict(data.get("placement", {"supporting_distance_m": [0.8, 1.5], "max_background_actors": 6})),
            variation=dict(data.get("variation", var.DEFAULT_VARIATION)),
            camera=dict(data.get("camera", cam.DEFAULT_RANGES)),
            environments=tuple(data.get("environments", ())),
        )
    except KeyError as exc:
        raise ConfigError(f"configuration is missing {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"malformed configuration: {exc}") from None


def load_config(path=None, action_names=None) -> GeneratorConfig:
    path = Path(path) if path is not None else _data_path("config.yaml")
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        data = _load_yaml(path)
    except Exception as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from None
    return config_from_dict(data, action_names)


# -- environments ------------------------------------------------------------------


@dataclass(frozen=True)
class WaypointGraph:
    node_ids: tuple[str, ...]
    positions: dict
    edges: tuple[tuple[str, str], ...] = ()

    def __len__(self):
        return len(self.node_ids)

    def __contains__(self, node_id):
        return node_id in self.positions


@dataclass(frozen=True)
class Environment:
    name: str
    indoor: bool
    protagonist_graph: WaypointGraph | None
    background_graph: WaypointGraph | None = None


def _graph(name, d) -> WaypointGraph | None:
    if d is None:
        return None
    ids, pos = [], {}
    for node in d.get("nodes", ()):
        nid = str(node["id"])
        if nid in pos:
            raise ConfigError(f"environment {name!r}: duplicate waypoint {nid!r}")
        xyz = tuple(float(v) for v in node["xyz"])
        if len(xyz) != 3:
            raise ConfigError(f"environment {name!r}: waypoint {nid!r} needs 3 coordinates")
        ids.append(nid)
        pos[nid] = xyz
    edges = tuple((str(a), str(b)) for a, b in d.get("edges", ()))
    for a, b in edges:
        if a not in pos or b not in pos:
            raise ConfigError(f"environment {name!r}: edge ({a}, {b}) references an unknown waypoint")
    return WaypointGraph(tuple(ids), pos, edges)


def load_environment(path) -> Environment:
    try:
        data = _load_yaml(path)
    except OSError as exc:
        raise ConfigError(f"cannot read environment {path}: {exc}") from None
    if data.get("version", ENVIRONMENT_VERSION) != ENVIRONMENT_VERSION:
        raise ConfigError(f"unsupported environment version in {path}")
    name = data["name"]
    env = Environment(
        name=name,
        indoor=bool(data.get("indoor", False)),
        protagonist_graph=_graph(name, data.get("protagonist_graph")),
        background_graph=_graph(name, data.get("background_graph")),
    )
    if env.indoor and env.background_graph is not None:
        raise ConfigError(f"indoor environment {name!r} must not define a background graph")
    return env


def load_environments(names, directory=None) -> dict:
    directory = Path(directory) if directory is not None else _data_path("environments")
    out = {}
    for name in names:
        path = directory / f"{name}.yaml"
        if not path.is_file():
            raise ConfigError(f"environment file not found: {path}")
        env = load_environment(path)
        if env.name != name:
            raise ConfigError(f"{path} declares environment {env.name!r}, expected {name!r}")
        out[name] = env
    return out


# -- sampling context ------------------------------------------------------------


class SamplingContext:
    """Everything a recipe draw reads: config, motion catalog, taxonomy, θ_AB and environments.

    Immutable once built; the derived-distribution caches only memoise pure functions.
    """

    def __init__(self, config: GeneratorConfig, manifest: MotionManifest, taxonomy, environments: dict):
        self.config = config
        self.manifest = manifest
        self.taxonomy = tuple(taxonomy)
        self.actions = {a.name: a for a in self.taxonomy}
        self.environments = dict(environments)
        self.theta_ab: ThetaAB = build_theta_ab(manifest, list(self.taxonomy))
        self._base_cache = {}
        self._camera_cache = {}
        self._env_cache = {}
        self._blend_pool = [c.id for c in manifest.clips if c.duration_s >= config.T_min_s]
        for a in config.theta_A.labels:
            if a not in self.actions:
                raise ConfigError(f"theta_A names action {a!r}, which the taxonomy lacks")
        for rows in (config.theta_AE.rows.values()):
            for e, w in rows.items():
                if w > 0 and e not in self.environments:
                    raise ConfigError(f"theta_AE names environment {e!r}, which is not loaded")

    @classmethod
    def load(cls, config_path=None, manifest_path=None, taxonomy_path=None, environments_dir=None):
        taxonomy = load_taxonomy(taxonomy_path)
        config = load_config(config_path, [a.name for a in taxonomy])
        manifest = load_manifest(manifest_path)
        names = config.environments or tuple(_all_environment_names(config))
        return cls(config, manifest, taxonomy, load_environments(names, environments_dir))

    def base_distribution(self, action: str, objects: bool) -> CategoricalParams:
        key = (action, objects)
        dist = self._base_cache.get(key)
        if dist is None:
            dist = base_motion_distribution(self.actions[action], self.theta_ab, self.manifest,
                                            self.config.T_min_s, require_objects=objects)
            self._base_cache[key] = dist
        return dist

    def camera_distribution(self, action: str, environment: str, weather: str) -> CategoricalParams:
        key = (action, environment, weather)
        dist = self._camera_cache.get(key)
        if dist is None:
            cfg = self.config
            weights = {
                c: w * cfg.theta_AC.weight(action, c) * cfg.theta_EC.weight(environment, c)
                * cfg.theta_WC.weight(weather, c)
                for c, w in zip(cfg.theta_C.labels, cfg.theta_C.weights)
            }
            if not any(w > 0 for w in weights.values()):
                raise EmptySupportError(
                    f"no camera behavior allowed for action {action!r} in {environment!r} under {weather!r}"
                )
            dist = CategoricalParams.from_mapping(weights)
            self._camera_cache[key] = dist
        return dist

    def environment_distribution(self, action: str) -> CategoricalParams:
        dist = self._env_cache.get(action)
        if dist is None:
            try:
                dist = CategoricalParams.from_mapping(self.config.theta_AE.row(action))
            except ParameterDomainError as exc:
                raise ConfigError(f"theta_AE row for {action!r}: {exc}") from None
            self._env_cache[action] = dist
        return dist


def _all_environment_names(config: GeneratorConfig):
    seen = []
    for row in config.theta_AE.rows.values():
        for e in row:
            if e not in seen:
                seen.append(e)
    return seen


@lru_cache(maxsize=1)
def default_context() -> SamplingContext:
    return SamplingContext.load()


# -- records -------------------------------------------------------------------


@dataclass(frozen=True)
class WeatherState:
    sun_brightness: float
    ambient_luminosity: float
    fog_visible: bool
    clouds_visible: bool
    rain_active: bool
    toggles: dict = field(default_factory=dict)
    sun_elevation_deg: float = 0.0


@dataclass(frozen=True)
class ScenePlacement:
    waypoint: str
    position: tuple[float, float, float]
    supporting_positions: tuple = ()
    background_spawns: tuple = ()


@dataclass(frozen=True)
class Recipe:
    seed_path: SeedPath
    H: str
    A: str
    L_s: float
    B: str
    V: str
    C: str
    E: str
    D: str
    W: str
    clock_T_h: float
    weather_state: WeatherState
    placement: ScenePlacement
    camera_params: cam.CameraRig
    variation_plan: var.VariationPlan

    @property
    def frames(self) -> int:
        return frame_count(self.L_s)


# -- world (P1) -------------------------------------------------------------------


def sun_elevation_deg(clock_h: float) -> float:
    """Idealised sun height: 0 at 6h and 18h, 90 degrees at noon."""
    return 90.0 * math.sin(math.pi * (clock_h - 6.0) / 12.0)


def sample_weather_state(rng: Stream, config: GeneratorConfig, weather: str, clock_h: float) -> WeatherState:
    ranges = config.weather[weather]
    lo, hi = ranges["sun_brightness"]
    sun = rng.between(lo, hi)
    lo, hi = ranges["ambient_luminosity"]
    ambient = rng.between(lo, hi)
    state = {
        "fog_visible": weather == "fog",
        "clouds_visible": weather in ("overcast", "rain"),
        "rain_active": weather == "rain",
    }
    for name, parent, p in config.weather_toggles:
        # always consume the draw so the toggle count alone fixes the stream layout
        u = rng.uniform()
        fire = bool(state.get(parent, False)) and u < p
        state[name] = state.get(name, False) or fire
    extras = {k: v for k, v in state.items() if k not in BASE_TOGGLES}
    return WeatherState(sun, ambient, state["fog_visible"], state["clouds_visible"], state["rain_active"],
                        extras, sun_elevation_deg(clock_h))


def sample_clock(rng: Stream, config: GeneratorConfig, phase: str) -> float:
    return triangular_sample_wrapped(rng, config.clock_params(phase), CLOCK_MODULUS_H)


def sample_p1(rng: Stream, config: GeneratorConfig):
    """Day phase, weather, clock time and weather elements."""
    d = categorical_sample(rng, config.theta_D)
    w = categorical_sample(rng, config.theta_W)
    t = sample_clock(rng, config, d)
    return d, w, t, sample_weather_state(rng, config, w, t)


# -- actor (P2) -------------------------------------------------------------------


def sample_p2(rng: Stream, config: GeneratorConfig) -> str:
    return categorical_sample(rng, config.theta_H)


# -- action (P3) ------------------------------------------------------------------


@dataclass(frozen=True)
class ActionDraw:
    A: str
    B: str
    L_s: float
    V: str
    C: str
    E: str
    placement: ScenePlacement


def duration_params(clip_duration_s: float, config: GeneratorConfig) -> TriangularParams:
    return TriangularParams(
        config.T_min_s,
        min(clip_duration_s, config.T_max_s),
        min(config.T_mod_s, clip_duration_s),
    )


def sample_duration(rng: Stream, clip: MotionClip, config: GeneratorConfig) -> float:
    params = duration_params(clip.duration_s, config).check()
    return triangular_icdf(rng.uniform(), params)


def sample_placement(rng: Stream, env: Environment, action: ActionCategory, config: GeneratorConfig
                     ) -> ScenePlacement:
    graph = env.protagonist_graph
    if graph is None or len(graph) == 0:
        raise ScenarioError(f"environment {env.name!r} has no protagonist waypoint graph")
    node = rng.choice(graph.node_ids)
    px, py, pz = graph.positions[node]
    lo, hi = config.placement.get("supporting_distance_m", (0.8, 1.5))
    supporting = []
    for _ in range(action.supporting_character_count):
        r = rng.between(lo, hi)
        phi = rng.between(0.0, 2.0 * math.pi)
        supporting.append((px + r * math.cos(phi), py + r * math.sin(phi), pz))
    spawns = []
    bg = env.background_graph
    if not env.indoor and bg is not None and len(bg) >= 2:
        n = rng.integer(int(config.placement.get("max_background_actors", 6)) + 1)
        for _ in range(n):
            start, dest = rng.sample_without_replacement(bg.node_ids, 2)
            spawns.append((start, dest))
    return ScenePlacement(node, (px, py, pz), tuple(supporting), tuple(spawns))


def sample_p3(rng: Stream, ctx: SamplingContext, weather: str, action: str | None = None) -> ActionDraw:
    cfg = ctx.config
    a = categorical_sample(rng, cfg.theta_A) if action is None else action
    if a not in ctx.actions:
        raise ScenarioError(f"unknown action {a!r}")
    e = categorical_sample(rng, ctx.environment_distribution(a))
    c = categorical_sample(rng, ctx.camera_distribution(a, e, weather))
    v = categorical_sample(rng, cfg.theta_V)
    b = categorical_sample(rng, ctx.base_distribution(a, v == "objects"))
    clip = ctx.manifest.get(b)
    length = sample_duration(rng, clip, cfg)
    placement = sample_placement(rng, ctx.environments[e], ctx.actions[a], cfg)
    return ActionDraw(a, b, length, v, c, e, placement)


# -- full recipe -------------------------------------------------------------------


def recipe_seed_path(master_seed: int, index: int) -> SeedPath:
    return SeedPath(master_seed, (("recipe", index),))


def sample_recipe(master_seed: int, index: int, ctx: SamplingContext | None = None,
                  action: str | None = None) -> Recipe:
    """The recipe at ``index`` of the run seeded by ``master_seed``.

    ``action`` pins A (used when a dataset plan fixes the per-class counts).
    """
    ctx = ctx or default_context()
    root = recipe_seed_path(master_seed, index)
    d, w, t, weather = sample_p1(root.child("world").stream(), ctx.config)
    h = sample_p2(root.child("actor").stream(), ctx.config)
    draw = sample_p3(root.child("action").stream(), ctx, w, action)
    rig = cam.sample_camera_params(root.child("camera").stream(), draw.C, ctx.config.camera)
    plan = var.sample_variation_plan(
        root.child("variation").stream(),
        ctx.actions[draw.A],
        ctx.manifest.get(draw.B),
        draw.V,
        ctx.manifest,
        ctx.config.T_min_s,
        ctx.config.variation,
        _blend_pool=ctx._blend_pool,
    )
    return Recipe(root, h, draw.A, draw.L_s, draw.B, draw.V, draw.C, draw.E, d, w, t, weather,
                  draw.placement, rig, plan)


# -- dataset planning -----------------------------------------------------------------


class PlanError(ConfigError):
    """The requested dataset totals cannot be met."""


def plan_dataset(config: GeneratorConfig, per_class_min: int, total: int) -> list[tuple[str, int]]:
    """Per-action clip counts summing to ``total`` with at least ``per_class_min`` each.

    Clips beyond the minimums are shared in proportion to θ_A by the largest
    remainder method; ties go to the action listed first.
    """
    labels, weights = config.theta_A.labels, config.theta_A.weights
    n = len(labels)
    if per_class_min < 0 or total < 0:
        raise PlanError("per_class_min and total must be non-negative")
    if total < n * per_class_min:
        raise PlanError(f"infeasible plan: {n} classes x {per_class_min} minimum exceeds total {total}")
    rest = total - n * per_class_min
    fw = [Fraction(w) for w in weights]
    wsum = sum(fw)
    quotas = [rest * w / wsum for w in fw]
    counts = [math.floor(q) for q in quotas]
    leftover = rest - sum(counts)
    order = sorted(range(n), key=lambda i: (-(quotas[i] - counts[i]), i))
    for i in order[:leftover]:
        counts[i] += 1
    return [(a, per_class_min + c) for a, c in zip(labels, counts)]


def expand_plan(plan) -> list[str]:
    """Action for every recipe index, in plan order."""
    return [a for a, count in plan for _ in range(count)]


# -- validation ------------------------------------------------------------------


def validate_recipe(recipe: Recipe, ctx: SamplingContext) -> list[str]:
    """Every violated recipe invariant as one message; empty when the recipe is sound."""
    cfg = ctx.config
    out = []
    action = ctx.actions.get(recipe.A)
    if action is None:
        return [f"unknown action {recipe.A!r}"]
    if recipe.E not in ctx.environments:
        out.append(f"unknown environment {recipe.E!r}")
    if recipe.H not in cfg.theta_H.labels:
        out.append(f"unknown human model {recipe.H!r}")
    if recipe.W not in WEATHERS:
        out.append(f"unknown weather {recipe.W!r}")
    if recipe.D not in DAY_PHASES:
        out.append(f"unknown day phase {recipe.D!r}")
    if recipe.V not in var.MODES:
        out.append(f"unknown variation mode {recipe.V!r}")
    if recipe.C not in cam.BEHAVIORS:
        out.append(f"unknown camera behavior {recipe.C!r}")

    # camera constraints
    if cfg.theta_C.probability(recipe.C) == 0.0 and recipe.C in cam.BEHAVIORS:
        out.append(f"camera {recipe.C!r} has zero weight in theta_C")
    if cfg.theta_EC.weight(recipe.E, recipe.C) == 0.0:
        out.append(f"camera {recipe.C!r} is not allowed in environment {recipe.E!r}")
    if cfg.theta_AC.weight(recipe.A, recipe.C) == 0.0:
        out.append(f"camera {recipe.C!r} is not allowed for action {recipe.A!r}")
    if cfg.theta_WC.weight(recipe.W, recipe.C) == 0.0:
        out.append(f"camera {recipe.C!r} is not allowed under weather {recipe.W!r}")
    if recipe.camera_params.behavior != recipe.C:
        out.append(f"camera rig behavior {recipe.camera_params.behavior!r} differs from C={recipe.C!r}")
    out += [f"camera rig: {p}" for p in recipe.camera_params.problems()]

    # world
    if cfg.theta_D.probability(recipe.D) == 0.0:
        out.append(f"day phase {recipe.D!r} has zero weight in theta_D")
    if recipe.D in cfg.clock:
        if not (0.0 <= recipe.clock_T_h < CLOCK_MODULUS_H
                and in_wrapped_support(recipe.clock_T_h, cfg.clock[recipe.D], CLOCK_MODULUS_H)):
            out.append(f"clock time {recipe.clock_T_h} h outside the support of phase {recipe.D!r}")
    ws = recipe.weather_state
    if ws.rain_active and recipe.W != "rain":
        out.append("rain is active but the weather is not rain")
    if ws.fog_visible and recipe.W != "fog":
        out.append("fog is visible but the weather is not fog")
    for name, parent, _ in cfg.weather_toggles:
        if name in ws.toggles and ws.toggles[name]:
            parent_on = getattr(ws, parent, None) if parent in BASE_TOGGLES else ws.toggles.get(parent)
            if not parent_on:
                out.append(f"weather toggle {name!r} is on while its parent {parent!r} is off")
    if not (0.0 <= ws.sun_brightness <= 1.0 and 0.0 <= ws.ambient_luminosity <= 1.0):
        out.append("sun brightness and ambient luminosity must lie in [0, 1]")

    # motion and duration
    if recipe.B not in ctx.manifest:
        out.append(f"unknown base motion {recipe.B!r}")
    else:
        clip = ctx.manifest.get(recipe.B)
        if not ctx.theta_ab[recipe.A, recipe.B]:
            out.append(f"base motion {recipe.B!r} does not match action {recipe.A!r}")
        if clip.duration_s < cfg.T_min_s:
            out.append(f"base motion {recipe.B!r} is shorter than T_min")
        if not cfg.T_min_s <= recipe.L_s <= min(clip.duration_s, cfg.T_max_s):
            out.append(f"duration L={recipe.L_s} outside [T_min, min(L_b, T_max)]")
        if recipe.V == "objects" and not clip.object_windows:
            out.append(f"objects variation on motion {recipe.B!r} without object annotations")
        op = recipe.variation_plan.object_plan
        if op is not None and (op.start_s, op.end_s, op.label) not in clip.object_windows:
            out.append("object plan does not come from the base motion's annotations")

    # variation
    if recipe.variation_plan.mode != recipe.V:
        out.append(f"variation plan mode {recipe.variation_plan.mode!r} differs from V={recipe.V!r}")
    out += var.validate_plan(recipe.variation_plan, action)
    for src in recipe.variation_plan.blend_sources:
        if src not in ctx.manifest:
            out.append(f"unknown blend source {src!r}")

    # placement
    env = ctx.environments.get(recipe.E)
    if env is not None:
        pl = recipe.placement
        graph = env.protagonist_graph
        if graph is None or pl.waypoint not in graph:
            out.append(f"waypoint {pl.waypoint!r} is not on the protagonist graph of {recipe.E!r}")
        elif tuple(graph.positions[pl.waypoint]) != tuple(pl.position):
            out.append("protagonist position differs from its waypoint")
        if env.indoor and pl.background_spawns:
            out.append(f"indoor environment {recipe.E!r} must not spawn background actors")
        if len(pl.supporting_positions) != action.supporting_character_count:
            out.append(f"action {recipe.A!r} needs {action.supporting_character_count} supporting characters")
        for start, dest in pl.background_spawns:
            if env.background_graph is None or start not in env.background_graph \
                    or dest not in env.background_graph:
                out.append(f"background spawn ({start}, {dest}) is not on the background graph")
    return out
