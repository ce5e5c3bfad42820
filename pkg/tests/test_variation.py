import dataclasses
import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phavforge.motion import MUSCLES, EmptySupportError, MotionClip
from phavforge.stochastic import SeedPath
from phavforge.variation import (
    MODES,
    ObjectPlan,
    Perturbation,
    VariationPlan,
    orbit_offsets,
    plan_from_dict,
    plan_to_dict,
    render_schedule,
    sample_variation_plan,
    validate_plan,
    write_schedule,
)


def rng(i, tag="var"):
    return SeedPath(21, ((tag, i),)).stream()


def draw(ctx, action, mode, i):
    a = ctx.actions[action]
    base = ctx.manifest.get(ctx.base_distribution(action, mode == "objects").support()[0])
    return sample_variation_plan(rng(i), a, base, mode, ctx.manifest, 1.0, _blend_pool=ctx._blend_pool), a


@given(st.sampled_from(MODES), st.integers(0, 10**6), st.integers(0, 34))
@settings(max_examples=300, deadline=None)
def test_sampled_plans_always_valid(ctx, mode, seed, ai):
    name = list(ctx.actions)[ai]
    plan, action = draw(ctx, name, mode, seed)
    assert plan.mode == mode
    assert validate_plan(plan, action) == []


def test_perturbation_avoids_critical_muscles(ctx):
    action = ctx.actions["brush hair"]
    seen = Counter()
    for i in range(500):
        plan, _ = draw(ctx, "brush hair", "random perturbation", i)
        assert not set(plan.affected_muscles) & action.critical_muscles
        seen.update(plan.affected_muscles)
    assert set(seen) == set(action.complementary_muscles)


def test_subset_size_uniform(ctx):
    n_comp = len(ctx.actions["walk"].complementary_muscles)
    sizes = Counter(len(draw(ctx, "walk", "random perturbation", i)[0].affected_muscles) for i in range(6000))
    assert set(sizes) == set(range(1, n_comp + 1))
    for c in sizes.values():
        assert c / 6000 == pytest.approx(1 / n_comp, abs=0.03)


def test_weakening_factor_range(ctx):
    for i in range(300):
        plan, _ = draw(ctx, "walk", "weakening", i)
        for s in plan.weakening.values():
            assert 0.3 < s <= 1.0


def test_blend_sources(ctx):
    counts = Counter()
    for i in range(400):
        plan, action = draw(ctx, "walk", "blend", i)
        base = ctx.manifest.get(ctx.base_distribution("walk", False).support()[0])
        assert 1 <= len(plan.blend_sources) <= 2
        assert base.id not in plan.blend_sources
        assert len(set(plan.blend_sources)) == len(plan.blend_sources)
        assert set(plan.blend_map.values()) == set(plan.blend_sources)
        counts[len(plan.blend_sources)] += 1
    assert counts[1] and counts[2]


def test_objects_window_from_base(ctx):
    plan, _ = draw(ctx, "walk", "objects", 0)
    base = ctx.manifest.get(ctx.base_distribution("walk", True).support()[0])
    op = plan.object_plan
    assert (op.start_s, op.end_s, op.label) in base.object_windows


def test_objects_without_windows(ctx):
    bare = MotionClip("bare", "mocap", "walk", 3.0)
    with pytest.raises(EmptySupportError):
        sample_variation_plan(rng(0), ctx.actions["walk"], bare, "objects", ctx.manifest)


def test_unknown_mode(ctx):
    bare = MotionClip("bare", "mocap", "walk", 3.0)
    with pytest.raises(ValueError):
        sample_variation_plan(rng(0), ctx.actions["walk"], bare, "melt", ctx.manifest)


def test_validate_catches_violations(ctx):
    action = ctx.actions["brush hair"]
    critical = sorted(action.critical_muscles)[0]
    bad = VariationPlan("random perturbation", (critical,), perturbation={critical: Perturbation(0.05, 1.0, 0.0)})
    assert any("critical" in p for p in validate_plan(bad, action))
    comp = action.complementary_muscles[:3]
    bad = VariationPlan("blend", comp, blend_sources=("a", "b", "c"),
                        blend_map={comp[0]: "a", comp[1]: "b", comp[2]: "c"})
    assert "blend count > 2" in validate_plan(bad, action)
    bad = VariationPlan("weakening", ("head",), weakening={"head": 1.5})
    assert validate_plan(bad, action)
    bad = dataclasses.replace(VariationPlan.none(), affected_muscles=("head",))
    assert validate_plan(bad, action)


def test_orbit_offsets_analytic():
    p = Perturbation(0.05, 0.5, 0.3)
    t = np.linspace(0, 4, 121)
    off = orbit_offsets(p, t)
    assert np.allclose(np.linalg.norm(off, axis=1), 0.05, atol=1e-15)
    assert np.all(off[:, 1] == 0)
    # one full period later the offset repeats
    assert np.allclose(orbit_offsets(p, t + 2.0), off, atol=1e-14)
    assert off[0] == pytest.approx([0.05 * math.cos(0.3), 0, 0.05 * math.sin(0.3)])
    assert p.offset(1.0) == pytest.approx(tuple(orbit_offsets(p, np.array([1.0]))[0]))


def test_render_schedule(tmp_path):
    plan = VariationPlan("random perturbation", ("head",), perturbation={"head": Perturbation(0.1, 1.0, 0.0)})
    sched = render_schedule(plan, 2.0)
    assert len(sched) == 60
    h = MUSCLES.index("head")
    assert np.all(sched.offsets[:, np.arange(15) != h] == 0)
    assert np.all(sched.strength == 1)
    weak = render_schedule(VariationPlan("weakening", ("chest",), weakening={"chest": 0.4}), 1.0)
    assert np.all(weak.strength[:, MUSCLES.index("chest")] == 0.4)
    obj = render_schedule(VariationPlan("objects", object_plan=ObjectPlan("cup", 0.5, 1.0)), 2.0)
    assert obj.object_active.sum() == 16  # frames at 15/30 .. 30/30 s
    path = tmp_path / "sched.csv"
    write_schedule(sched, path)
    assert len(path.read_text().splitlines()) == 1 + 60 * 15


@given(st.sampled_from(MODES), st.integers(0, 10**6))
@settings(max_examples=100, deadline=None)
def test_plan_dict_round_trip(ctx, mode, seed):
    plan, _ = draw(ctx, "kick ball" if "kick ball" in ctx.actions else "walk", mode, seed)
    assert plan_from_dict(plan_to_dict(plan)) == plan
