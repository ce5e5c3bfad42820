import copy
import dataclasses
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest

from phavforge.motion import _data_path, _load_yaml
from phavforge.scenario import (
    ConfigError,
    PlanError,
    SamplingContext,
    ScenarioError,
    config_from_dict,
    duration_params,
    expand_plan,
    load_config,
    plan_dataset,
    sample_clock,
    sample_p1,
    sample_p2,
    sample_p3,
    sample_recipe,
    sample_weather_state,
    sun_elevation_deg,
    validate_recipe,
)
from phavforge.stochastic import SeedPath, triangular_sample_many


@pytest.fixture(scope="module")
def raw_config():
    return _load_yaml(_data_path("config.yaml"))


def make_config(raw, ctx, **changes):
    data = copy.deepcopy(raw)
    data.update(changes)
    return config_from_dict(data, list(ctx.actions))


def stream(*path):
    return SeedPath(11, tuple(path)).stream()


# -- P1 / P2 ------------------------------------------------------------------------


def test_default_night_never_drawn(ctx):
    rng = stream(("p1", 0))
    phases = Counter(sample_p1(rng, ctx.config)[0] for _ in range(20000))
    assert phases["night"] == 0
    assert set(phases) == {"dawn", "day", "dusk"}


def test_day_clock_in_support(ctx):
    rng = stream(("clock", 0))
    t = [sample_clock(rng, ctx.config, "day") for _ in range(20000)]
    assert min(t) >= 10 and max(t) <= 16


def test_night_clock_wraps_midnight(ctx):
    rng = stream(("clock", 1))
    t = np.array([sample_clock(rng, ctx.config, "night") for _ in range(20000)])
    assert np.all((t >= 20) | (t <= 7))
    assert np.all((t >= 0) & (t < 24))


def test_weather_state_follows_weather(ctx):
    rng = stream(("p1", 1))
    for _ in range(3000):
        d, w, t, ws = sample_p1(rng, ctx.config)
        assert ws.rain_active == (w == "rain")
        assert ws.fog_visible == (w == "fog")
        if w == "clear":
            assert not ws.clouds_visible
            assert not any(ws.toggles.values())
        if ws.toggles.get("puddles") or ws.toggles.get("lightning"):
            assert w == "rain"
        assert ws.sun_elevation_deg == pytest.approx(sun_elevation_deg(t))


def test_fog_clouds_from_toggle(ctx):
    # clouds in fog come only from the dependent toggle with p = 0.5
    rng = stream(("fog", 0))
    seen = Counter(sample_weather_state(rng, ctx.config, "fog", 12.0).clouds_visible for _ in range(2000))
    assert 0.45 < seen[True] / 2000 < 0.55


def test_sun_elevation():
    assert sun_elevation_deg(12) == pytest.approx(90)
    assert sun_elevation_deg(6) == pytest.approx(0, abs=1e-12)
    assert sun_elevation_deg(0) == pytest.approx(-90)


def test_actor_model_uniform(ctx):
    rng = stream(("p2", 0))
    n = 40000
    counts = Counter(sample_p2(rng, ctx.config) for _ in range(n))
    assert len(counts) == 20
    for c in counts.values():
        assert c / n == pytest.approx(0.05, abs=0.006)
    assert ctx.config.theta_H.probability("model_01") == pytest.approx(0.05)


def test_one_hot_weather(raw_config, ctx):
    cfg = make_config(raw_config, ctx, theta_W={"clear": 0, "overcast": 0, "rain": 1, "fog": 0})
    rng = stream(("p1", 2))
    assert {sample_p1(rng, cfg)[1] for _ in range(500)} == {"rain"}


@pytest.mark.parametrize("key,value", [
    ("theta_W", {"clear": 0, "overcast": 0, "rain": 0, "fog": 0}),
    ("theta_W", {}),
    ("theta_D", {"dawn": -1, "day": 1}),
    ("theta_V", {"dance": 1}),
    ("durations", {"T_min_s": 5, "T_max_s": 2, "T_mod_s": 3}),
    ("clock", {"dawn": [7, 10, 12], "day": [10, 16, 13], "dusk": [17, 20, 18]}),
])
def test_bad_config_rejected(raw_config, ctx, key, value):
    with pytest.raises(ConfigError):
        make_config(raw_config, ctx, **{key: value})


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.yaml")


def test_unparseable_config(tmp_path):
    p = tmp_path / "bad.yaml"
    p.write_text("theta_W: [unclosed\n")
    with pytest.raises(ConfigError):
        load_config(p)


# -- P3 ------------------------------------------------------------------------------


def test_indoors_only_in_house(ctx):
    rng = stream(("p3", 0))
    for _ in range(3000):
        draw = sample_p3(rng, ctx, "clear")
        if draw.C == "indoors":
            assert draw.E == "house"


def test_closeup_only_for_brush_hair(ctx):
    rng = stream(("p3", 1))
    seen = Counter()
    for _ in range(3000):
        draw = sample_p3(rng, ctx, "clear")
        seen[draw.C] += 1
        if draw.C == "closeup":
            assert draw.A == "brush hair"
    brush = Counter(sample_p3(rng, ctx, "clear", action="brush hair").C for _ in range(600))
    assert brush["closeup"] > 0


def test_house_camera_distribution(ctx):
    d = ctx.camera_distribution("walk", "house", "clear")
    assert d.probability("closeup") == 0
    assert d.probability("indoors") == pytest.approx(0.5)
    d = ctx.camera_distribution("walk", "lake", "rain")
    assert d.support() == ("kite",)


def test_objects_mode_uses_annotated_clips(ctx):
    rng = stream(("p3", 2))
    for _ in range(2000):
        draw = sample_p3(rng, ctx, "fog")
        if draw.V == "objects":
            assert ctx.manifest.get(draw.B).object_windows


def test_duration_bounds(ctx):
    rng = stream(("p3", 3))
    cfg = ctx.config
    for _ in range(3000):
        draw = sample_p3(rng, ctx, "clear")
        lb = ctx.manifest.get(draw.B).duration_s
        assert cfg.T_min_s <= draw.L_s <= min(lb, cfg.T_max_s)


def test_duration_params_short_clip_mode(ctx):
    p = duration_params(3.0, ctx.config)
    assert (p.a, p.b, p.c) == (1.0, 3.0, 3.0)
    x = triangular_sample_many(stream(("dur", 0)), p, 10**5)
    counts, edges = np.histogram(x, bins=20, range=(1, 3))
    assert counts.argmax() == 19
    assert edges[counts.argmax() + 1] == 3.0


def test_duration_params_long_clip(ctx):
    p = duration_params(30.0, ctx.config)
    assert (p.a, p.b, p.c) == (1.0, 10.0, 5.0)


def test_supporting_characters_for_two_person_actions(ctx):
    pairs = [a for a in ctx.actions.values() if a.supporting_character_count]
    assert pairs
    rng = stream(("p3", 4))
    for a in pairs[:3]:
        draw = sample_p3(rng, ctx, "clear", action=a.name)
        px, py, pz = draw.placement.position
        assert len(draw.placement.supporting_positions) == a.supporting_character_count
        for sx, sy, sz in draw.placement.supporting_positions:
            assert 0.8 - 1e-12 <= np.hypot(sx - px, sy - py) <= 1.5 + 1e-12


def test_indoor_environment_has_no_background(ctx):
    rng = stream(("p3", 5))
    for _ in range(500):
        draw = sample_p3(rng, ctx, "clear")
        if ctx.environments[draw.E].indoor:
            assert draw.placement.background_spawns == ()
        else:
            assert len(draw.placement.background_spawns) <= 6


def test_unknown_action_rejected(ctx):
    with pytest.raises(ScenarioError):
        sample_p3(stream(("p3", 6)), ctx, "clear", action="juggle")


# -- full recipes ---------------------------------------------------------------------


def test_recipe_deterministic_and_order_free(ctx):
    forward = [sample_recipe(5, i, ctx) for i in range(40)]
    backward = [sample_recipe(5, i, ctx) for i in reversed(range(40))][::-1]
    assert forward == backward
    assert sample_recipe(6, 0, ctx) != forward[0]


def test_sampled_recipes_validate(ctx):
    for i in range(300):
        r = sample_recipe(3, i, ctx)
        assert validate_recipe(r, ctx) == []


def test_validate_flags_corruption(ctx):
    r = sample_recipe(3, 0, ctx)
    bad = dataclasses.replace(r, C="indoors", E="lake")
    problems = validate_recipe(bad, ctx)
    assert any("not allowed in environment 'lake'" in p for p in problems)
    bad = dataclasses.replace(r, L_s=12.0)
    assert any("duration" in p for p in validate_recipe(bad, ctx))
    bad = dataclasses.replace(r, D="night", clock_T_h=12.0)
    msgs = validate_recipe(bad, ctx)
    assert any("zero weight in theta_D" in p for p in msgs)
    assert any("outside the support" in p for p in msgs)


def test_context_loads_from_explicit_paths(ctx):
    other = SamplingContext.load(
        config_path=_data_path("config.yaml"),
        manifest_path=_data_path("manifest.yaml"),
        taxonomy_path=_data_path("taxonomy.yaml"),
        environments_dir=_data_path("environments"),
    )
    assert sample_recipe(9, 4, other) == sample_recipe(9, 4, ctx)


# -- planning -------------------------------------------------------------------------


def test_plan_default_totals(ctx):
    plan = plan_dataset(ctx.config, 1000, 39982)
    counts = [n for _, n in plan]
    assert len(counts) == 35
    assert sum(counts) == 39982
    assert min(counts) >= 1000
    assert Fraction(sum(counts), len(counts)) == Fraction(39982, 35)
    assert max(counts) - min(counts) <= 1
    # ties broken towards the first-listed actions
    assert counts == sorted(counts, reverse=True)


def test_plan_minimum_only(ctx):
    assert {n for _, n in plan_dataset(ctx.config, 1, 35)} == {1}
    with pytest.raises(PlanError):
        plan_dataset(ctx.config, 1, 34)


def test_plan_weighted_oracle(raw_config, ctx):
    names = list(ctx.actions)
    weights = {a: (3 if i == 0 else 1) for i, a in enumerate(names)}
    cfg = make_config(raw_config, ctx, theta_A=weights)
    plan = dict(plan_dataset(cfg, 10, 35 * 10 + 74))
    # 74 extra clips over total weight 37: the first action gets 3/37 of them = 6
    assert plan[names[0]] == 16
    assert sum(plan.values()) == 424


def test_expand_plan():
    assert expand_plan([("a", 2), ("b", 1)]) == ["a", "a", "b"]
