"""End-to-end acceptance checks; the terminal summary prints one PASS/FAIL line per criterion."""

import math
import time
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest

from phavforge.camera import (
    ANCHOR_HEIGHT_M,
    CameraRig,
    Impulse,
    KiteState,
    SpringParams,
    initial_state,
    integrate,
    sample_camera_params,
    spring_force,
)
from phavforge.cli import main
from phavforge.codecs import (
    default_palette,
    depth_decode,
    depth_encode,
    flow_decode,
    flow_encode,
    palette_inverse,
    palette_lookup,
)
from phavforge.cooltsn import (
    HeadLayout,
    LossInput,
    build_minibatch_plan,
    multitask_loss,
    multitask_loss_gradient,
)
from phavforge.recipe_io import read_recipe, recipe_files
from phavforge.scenario import expand_plan, plan_dataset, sample_clock, sample_recipe, validate_recipe
from phavforge.stats import aggregate_stats
from phavforge.stochastic import SeedPath, in_wrapped_support
from phavforge.timing import SUBSTEP_S

pytestmark = pytest.mark.acceptance

N = 100_000


@pytest.fixture(scope="module")
def many(ctx):
    t0 = time.perf_counter()
    recipes = [sample_recipe(2024, i, ctx) for i in range(N)]
    return recipes, time.perf_counter() - t0


@pytest.mark.criterion(1, "marginal frequencies of W, D, V over 1e5 recipes; under 30 s")
def test_marginals(many):
    recipes, elapsed = many
    print(f"sampled {N} recipes in {elapsed:.1f} s")
    assert elapsed < 30
    w = Counter(r.W for r in recipes)
    d = Counter(r.D for r in recipes)
    v = Counter(r.V for r in recipes)
    for label in ("clear", "overcast", "rain", "fog"):
        assert abs(w[label] / N - 0.25) <= 0.01, label
    for label in ("dawn", "day", "dusk"):
        assert abs(d[label] / N - 1 / 3) <= 0.01, label
    assert d["night"] == 0
    for label in ("none", "random perturbation", "weakening", "objects", "blend"):
        assert abs(v[label] / N - 0.2) <= 0.01, label


@pytest.mark.criterion(2, "clock times inside their phase support; day mode at 13 h")
def test_clock(many, ctx):
    recipes, _ = many
    for r in recipes:
        assert in_wrapped_support(r.clock_T_h, ctx.config.clock[r.D], 24.0)
    rng = SeedPath(2025, (("clock", 0),)).stream()
    t = np.array([sample_clock(rng, ctx.config, "day") for _ in range(N)])
    assert t.min() >= 10 and t.max() <= 16
    counts, edges = np.histogram(t, bins=24, range=(10, 16))
    k = int(np.argmax(counts))
    mode = 0.5 * (edges[k] + edges[k + 1])
    print(f"day clock histogram mode {mode:.3f} h")
    assert abs(mode - 13.0) <= 0.5


@pytest.mark.criterion(3, "dataset plan of 39982 clips over 35 classes; frame totals")
def test_dataset_plan(ctx, tmp_path):
    plan = plan_dataset(ctx.config, 1000, 39982)
    counts = [n for _, n in plan]
    assert len(plan) == 35 and min(counts) >= 1000 and sum(counts) == 39982
    assert abs(float(Fraction(sum(counts), 35)) - 1142.3) <= 0.1

    t0 = time.perf_counter()
    assert main(["sample", "--seed", "3", "--count", "39982", "--per-class-min", "1000",
                 "--out", str(tmp_path), "--jobs", "4"]) == 0
    files = recipe_files(tmp_path)
    recipes = [read_recipe(p) for p in files]
    elapsed = time.perf_counter() - t0
    print(f"generated and re-read 39982 recipes in {elapsed:.1f} s")
    assert elapsed < 300
    assert [r.A for r in recipes] == expand_plan(plan)

    stats = aggregate_stats(recipes)
    assert dict(stats.class_counts) == dict(plan)
    assert stats.total_frames == sum(round(30 * r.L_s) for r in recipes)
    cfg = ctx.config
    mean = stats.mean_duration_s
    print(f"mean duration {mean:.3f} s, total frames {stats.total_frames}")
    assert cfg.T_min_s <= mean <= cfg.T_max_s
    assert abs(mean - cfg.T_mod_s) <= 0.2 * cfg.T_mod_s


@pytest.mark.criterion(4, "no constraint violations over 1e4 recipes")
def test_constraints(many, ctx):
    recipes, _ = many
    cfg = ctx.config
    for r in recipes[:10_000]:
        if r.C == "indoors":
            assert r.E == "house"
        if r.C == "closeup":
            assert r.A == "brush hair"
        assert r.D != "night"
        clip = ctx.manifest.get(r.B)
        assert cfg.T_min_s <= r.L_s <= min(cfg.T_max_s, clip.duration_s)
        plan = r.variation_plan
        assert len(plan.blend_sources) <= 2
        critical = ctx.actions[r.A].critical_muscles
        if plan.mode in ("random perturbation", "blend"):
            assert not set(plan.affected_muscles) & critical
        assert validate_recipe(r, ctx) == []


@pytest.mark.criterion(5, "camera model: critical damping, dissipation, dead zone")
def test_camera_model():
    off = SpringParams(0.0, 0.0, 0.0)
    rig = CameraRig("kite", 1.0, math.inf, 1.0, 0.0, off, SpringParams(1.0, 2.0, 0.0), 0.0,
                    Impulse((1.0, 0.0, 0.0), 0.0))
    s0 = KiteState(np.zeros(3), np.zeros(3), np.array([1.0, 0.0, 0.0]), np.zeros(3))
    states, _ = integrate(rig, s0, np.zeros((1501, 3)))
    t = np.arange(1501) * SUBSTEP_S
    err = np.max(np.abs(states[:, 6] - (1 + t) * np.exp(-t)))
    print(f"critical damping max error {err:.2e} m")
    assert err < 1e-3

    anchor = np.array([0.0, 0.0, ANCHOR_HEIGHT_M])
    worst = -math.inf
    for b, behavior in enumerate(("kite", "closeup", "indoors", "static")):
        for i in range(25):
            r = sample_camera_params(SeedPath(5, (("behavior", b), ("rig", i))).stream(), behavior)
            _, energy = integrate(r, initial_state(r, (0, 0, 0)), np.tile(anchor, (5 * 300 + 1, 1)))
            worst = max(worst, float(np.max(np.diff(energy))))
    print(f"largest per-step energy change {worst:.2e} J")
    assert worst <= 1e-9

    rng = np.random.default_rng(5)
    for _ in range(1000):
        d = rng.normal(size=3)
        d *= rng.uniform(0, 0.999) * 1.5 / np.linalg.norm(d)
        f = spring_force(d, rng.normal(size=3), SpringParams(50.0, 5.0, 0.3), 1.5)
        assert np.array_equal(f, np.zeros(3))


@pytest.mark.criterion(6, "two-head loss gradient, uniform-logit loss, batch composition")
def test_cooltsn():
    layout = HeadLayout(101, 35)
    worst = 0.0
    rng = np.random.default_rng(6)
    for i in range(100):
        source = ("real", "virtual")[i % 2]
        head = layout.head(source)
        inp = LossInput(rng.normal(0, 2, layout.size), int(rng.integers(head.start, head.stop)), source, layout)
        grad = multitask_loss_gradient(inp)
        fd = np.empty_like(grad)
        for j in range(layout.size):
            h = 1e-5
            up, dn = inp.G.copy(), inp.G.copy()
            up[j] += h
            dn[j] -= h
            fd[j] = (multitask_loss(LossInput(up, inp.label, source, layout))
                     - multitask_loss(LossInput(dn, inp.label, source, layout))) / (2 * h)
        worst = max(worst, float(np.max(np.abs(fd - grad)) / np.max(np.abs(grad))))
    print(f"max relative gradient error {worst:.2e}")
    assert worst < 1e-4

    uniform = LossInput(np.full(layout.size, 0.7), 5, "real", layout, {"real": 1.0, "virtual": 0.0})
    assert abs(multitask_loss(uniform) - math.log(101)) < 1e-9

    real, synth = [f"r{i}" for i in range(500)], [f"s{i}" for i in range(200)]
    for i in range(200):
        plan = build_minibatch_plan(SeedPath(6, (("batch", i),)).stream(), real, synth)
        assert plan.composition() == [(22, 10)] * 8


@pytest.mark.criterion(7, "depth, flow and palette codecs")
def test_codecs():
    assert depth_encode(0.01) == 1 and depth_encode(655.35) == 65535
    d = np.linspace(0.0, 655.35, 2_000_001)
    err = np.max(np.abs(depth_decode(depth_encode(d)) - d))
    print(f"depth round-trip max error {err:.6f} m")
    assert err <= 0.005 + 1e-9
    for dim in (1, 227, 340, 640, 1920):
        u = np.linspace(-dim, dim, 200_001)
        assert np.max(np.abs(flow_decode(flow_encode(u, dim), dim) - u)) <= dim / 65535 + 1e-12
    p = default_palette()
    assert len(p) == 63
    assert len({p.lookup(c) for c in p.classes()}) == 63
    assert all(palette_inverse(palette_lookup(c)) == c for c in p.classes())
    assert palette_lookup("Road") == (100, 60, 100)
    assert palette_lookup("Head") == (220, 20, 60)


@pytest.mark.criterion(8, "recipe directories byte-identical for any --jobs")
def test_jobs_determinism(tmp_path):
    trees = []
    for jobs in ("1", "2", "5"):
        out = tmp_path / jobs
        assert main(["sample", "--seed", "8", "--count", "3000", "--out", str(out), "--jobs", jobs]) == 0
        trees.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
    assert len(trees[0]) == 3001
    assert trees[0] == trees[1] == trees[2]
