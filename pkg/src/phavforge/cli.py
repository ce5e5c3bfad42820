"""Command-line entry point: ``phavforge {sample,stats,simulate-camera,validate}``.

Exit codes: 0 ok, 2 configuration error, 3 input error, 4 simulation error,
5 validation failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from phavforge import __version__
from phavforge.camera import SimulationDiverged, simulate, straight_line, write_trajectory
from phavforge.motion import ManifestError, TaxonomyError
from phavforge.recipe_io import RecipeFormatError, read_recipe, recipe_files, write_recipe
from phavforge.scenario import (
    ConfigError,
    SamplingContext,
    ScenarioError,
    expand_plan,
    plan_dataset,
    sample_recipe,
    validate_recipe,
)
from phavforge.stats import VARIABLES, DatasetStats

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INPUT = 3
EXIT_SIMULATION = 4
EXIT_VALIDATION = 5

RUN_MANIFEST = "run.json"


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _jobs(value) -> int:
    if value is None:
        value = os.environ.get("PHAVFORGE_JOBS", "1")
    try:
        jobs = int(value)
    except ValueError:
        raise CliError(f"--jobs must be an integer, got {value!r}", EXIT_CONFIG) from None
    if jobs < 1:
        raise CliError(f"--jobs must be at least 1, got {jobs}", EXIT_CONFIG)
    return jobs


def _input_paths(args) -> dict:
    paths = {
        "config_path": args.config,
        "manifest_path": args.manifest,
        "taxonomy_path": args.taxonomy,
        "environments_dir": args.environments,
    }
    for key, p in paths.items():
        if p is None:
            continue
        exists = Path(p).is_dir() if key == "environments_dir" else Path(p).is_file()
        if not exists:
            raise CliError(f"{key.split('_')[0]} not found: {p}", EXIT_CONFIG)
    return paths


def _load_context(paths: dict) -> SamplingContext:
    try:
        return SamplingContext.load(**paths)
    except (ConfigError, TaxonomyError, ManifestError) as exc:
        raise CliError(str(exc), EXIT_CONFIG) from None
    except (OSError, KeyError, TypeError) as exc:
        raise CliError(f"cannot load generator inputs: {exc}", EXIT_CONFIG) from None


# -- sample ------------------------------------------------------------------------

_worker_ctx = None


def _init_worker(paths):
    global _worker_ctx
    _worker_ctx = SamplingContext.load(**paths)


def _sample_chunk(job):
    seed, items, out = job
    for index, action in items:
        write_recipe(sample_recipe(seed, index, _worker_ctx, action), out)
    return len(items)


def cmd_sample(args) -> int:
    paths = _input_paths(args)
    ctx = _load_context(paths)
    jobs = _jobs(args.jobs)
    if args.count < 0:
        raise CliError("--count must be non-negative", EXIT_CONFIG)
    if args.per_class_min is not None:
        try:
            plan = plan_dataset(ctx.config, args.per_class_min, args.count)
        except ConfigError as exc:
            raise CliError(str(exc), EXIT_CONFIG) from None
        actions = expand_plan(plan)
    else:
        plan = None
        actions = [None] * args.count
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    items = list(enumerate(actions))

    try:
        if jobs == 1:
            global _worker_ctx
            _worker_ctx = ctx
            _sample_chunk((args.seed, items, out))
        else:
            chunk = max(1, -(-len(items) // (jobs * 8)))
            work = [(args.seed, items[i:i + chunk], out) for i in range(0, len(items), chunk)]
            with ProcessPoolExecutor(max_workers=jobs, initializer=_init_worker, initargs=(paths,)) as pool:
                list(pool.map(_sample_chunk, work))
    except ScenarioError as exc:
        raise CliError(str(exc), EXIT_CONFIG) from None

    run = {
        "seed": args.seed,
        "count": args.count,
        "per_class_min": args.per_class_min,
        "config": args.config,
        "manifest": args.manifest,
        "taxonomy": args.taxonomy,
        "environments": args.environments,
        "plan": None if plan is None else [[a, n] for a, n in plan],
    }
    (out / RUN_MANIFEST).write_text(json.dumps(run, sort_keys=True, indent=1) + "\n", encoding="utf-8")
    print(f"wrote {args.count} recipes to {out}")
    return EXIT_OK


# -- stats --------------------------------------------------------------------------


def _stats_chunk(files) -> DatasetStats:
    stats = DatasetStats()
    for f in files:
        stats.add(read_recipe(f))
    return stats


def _recipe_dir(path) -> list[Path]:
    d = Path(path)
    if not d.is_dir():
        raise CliError(f"recipe directory not found: {d}", EXIT_INPUT)
    files = recipe_files(d)
    if not files:
        raise CliError(f"no recipe files in {d}", EXIT_INPUT)
    return files


def cmd_stats(args) -> int:
    files = _recipe_dir(args.recipes)
    jobs = _jobs(args.jobs)
    try:
        if jobs == 1:
            stats = _stats_chunk(files)
        else:
            chunk = max(1, -(-len(files) // jobs))
            parts = [files[i:i + chunk] for i in range(0, len(files), chunk)]
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                stats = DatasetStats()
                for part in pool.map(_stats_chunk, parts):
                    stats = stats.merge(part)
    except (RecipeFormatError, OSError) as exc:
        raise CliError(f"cannot read recipes: {exc}", EXIT_INPUT) from None

    text = stats.histogram_csv() if args.format == "csv" else stats.to_text()
    sys.stdout.write(text)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "stats.txt").write_text(stats.to_text(), encoding="utf-8")
        for v in VARIABLES:
            (out / f"hist_{v}.csv").write_text(stats.histogram_csv(v), encoding="utf-8")
    return EXIT_OK


# -- simulate-camera ------------------------------------------------------------------


def cmd_simulate_camera(args) -> int:
    try:
        recipe = read_recipe(args.recipe)
    except (RecipeFormatError, OSError) as exc:
        raise CliError(f"cannot read recipe {args.recipe}: {exc}", EXIT_INPUT) from None
    duration = recipe.L_s if args.duration is None else args.duration
    heading = np.deg2rad(args.heading)
    velocity = args.speed * np.array([np.cos(heading), np.sin(heading), 0.0])
    path = straight_line(recipe.placement.position, velocity)
    try:
        traj = simulate(recipe.camera_params, path, duration)
    except SimulationDiverged:
        raise CliError("simulation-diverged", EXIT_SIMULATION) from None
    except ValueError as exc:
        raise CliError(str(exc), EXIT_INPUT) from None
    if args.out:
        write_trajectory(traj, args.out)
    else:
        write_trajectory(traj, sys.stdout)
    return EXIT_OK


# -- validate ------------------------------------------------------------------------


def cmd_validate(args) -> int:
    d = Path(args.recipes)
    if not d.is_dir():
        raise CliError(f"recipe directory not found: {d}", EXIT_INPUT)
    ctx = _load_context(_input_paths(args))
    files = sorted(p for p in d.iterdir() if p.suffix == ".recipe")
    if not files:
        raise CliError(f"no recipe files in {d}", EXIT_INPUT)
    failed = 0
    for f in files:
        try:
            problems = validate_recipe(read_recipe(f), ctx)
        except OSError as exc:
            problems = [f"unreadable: {exc.strerror or exc}"]
        except RecipeFormatError as exc:
            problems = [f"unreadable: {exc}"]
        if problems:
            failed += 1
            for p in problems:
                print(f"FAIL {f.name}: {p}")
    print(f"{len(files) - failed}/{len(files)} recipes pass")
    return EXIT_VALIDATION if failed else EXIT_OK


# -- parser -------------------------------------------------------------------------


def _add_inputs(p):
    p.add_argument("--config", help="generator config file (default: bundled)")
    p.add_argument("--manifest", help="motion manifest file (default: bundled)")
    p.add_argument("--taxonomy", help="action taxonomy file (default: bundled)")
    p.add_argument("--environments", help="directory of environment files (default: bundled)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="phavforge", description="Procedural action-video recipe generator.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="sample recipe files")
    _add_inputs(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--per-class-min", type=int, help="plan per-action counts with this minimum")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--jobs", help="worker processes (default: $PHAVFORGE_JOBS or 1)")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("stats", help="dataset statistics of a recipe directory")
    p.add_argument("recipes", help="recipe directory")
    p.add_argument("--format", choices=("text", "csv"), default="text")
    p.add_argument("--out", help="also write stats.txt and per-variable CSV histograms here")
    p.add_argument("--jobs")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("simulate-camera", help="30 Hz camera trajectory for a recipe")
    p.add_argument("recipe", help="recipe file")
    p.add_argument("--out", help="trajectory file (default: stdout)")
    p.add_argument("--speed", type=float, default=1.5, help="protagonist speed in m/s (0 = stationary)")
    p.add_argument("--heading", type=float, default=0.0, help="protagonist heading in degrees")
    p.add_argument("--duration", type=float, help="override the recipe duration in seconds")
    p.set_defaults(func=cmd_simulate_camera)

    p = sub.add_parser("validate", help="check every recipe invariant")
    p.add_argument("recipes", help="recipe directory")
    _add_inputs(p)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"phavforge {args.command}: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
