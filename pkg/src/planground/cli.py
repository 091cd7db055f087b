"""Command line entry points; every command is a thin wrapper over the library."""

from __future__ import annotations

import functools
import json
import math
import sys
from pathlib import Path

import click

from .dataset import expand_scenes, split_scenes
from .errors import PlangroundError
from .evaluation import (
    VoteStore,
    load_items_jsonl,
    render_success_table,
    SuccessTable,
)
from .experiment import (
    BackendSettings,
    ExperimentConfig,
    load_config,
    run_experiment,
)
from .exploration import CollectionStrategy, plan_poses
from .planning import parse_plan_text, request_plan, builtin_template, Plan
from .scene import (
    ROOM_TYPES,
    ObjectList,
    RoomType,
    SceneGenSpec,
    generate_synthetic_scene,
    ground_truth_object_list,
    load_catalog,
    load_scene,
    save_scene,
)
from .seeding import derive_seed
from .validation import RuleSet, SynonymTable, parse_rules_mode, validate


def friendly_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except PlangroundError as exc:
            raise click.ClickException(str(exc)) from exc

    return wrapper


@click.group()
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="Experiment config file (YAML or JSON).")
@click.option("--seed", type=int, default=0, show_default=True,
              help="Seed for commands that sample.")
@click.option("--out", "out_path", type=click.Path(), default=None,
              help="Output file or directory.")
@click.pass_context
def main(ctx, config_path, seed, out_path):
    """Scene exploration, simulated detection, plan validation, evaluation."""
    ctx.ensure_object(dict)
    ctx.obj["config"] = config_path
    ctx.obj["seed"] = seed
    ctx.obj["out"] = out_path


def _strategy_options(fn):
    fn = click.option("--elbow-threshold", type=float, default=0.15, show_default=True)(fn)
    fn = click.option("--max-clusters", type=int, default=8, show_default=True)(fn)
    fn = click.option("--ratio", type=float, default=1.0, show_default=True)(fn)
    fn = click.option("--unit-angle-deg", type=float, default=120.0, show_default=True)(fn)
    fn = click.option("--grid", type=float, default=0.75, show_default=True)(fn)
    fn = click.option(
        "--criterion",
        type=click.Choice(["traversal", "random", "center", "blockwise"]),
        default="blockwise", show_default=True,
    )(fn)
    return fn


def _make_strategy(criterion, grid, unit_angle_deg, ratio, max_clusters, elbow_threshold):
    strategy = CollectionStrategy(
        criterion=criterion,
        grid_side=grid,
        unit_angle=math.radians(unit_angle_deg),
        ratio=ratio,
        max_clusters=max_clusters,
        elbow_threshold=elbow_threshold,
    )
    strategy.validate()
    return strategy


def _object_list_from(scene_path, objects_csv) -> ObjectList:
    if objects_csv:
        return ObjectList.from_names(n for n in objects_csv.split(",") if n.strip())
    if scene_path:
        return ground_truth_object_list(load_scene(scene_path))
    raise click.UsageError("provide --scene or --objects")


@main.command("gen-scenes")
@click.option("--count", type=int, default=4, show_default=True)
@click.option("--room", "room_name", type=click.Choice([r.value for r in ROOM_TYPES]),
              default=None, help="Fix the room type instead of cycling all four.")
@click.option("--catalog", "catalog_path", type=click.Path(exists=True), default=None)
@click.pass_context
@friendly_errors
def gen_scenes(ctx, count, room_name, catalog_path):
    """Generate synthetic scene files."""
    out_dir = Path(ctx.obj["out"] or "scenes")
    out_dir.mkdir(parents=True, exist_ok=True)
    catalog = load_catalog(catalog_path)
    seed = ctx.obj["seed"]
    written = []
    for i in range(count):
        room = RoomType.parse(room_name) if room_name else ROOM_TYPES[i % len(ROOM_TYPES)]
        spec = SceneGenSpec(room_type=room, catalog=catalog)
        scene = generate_synthetic_scene(spec, derive_seed(seed, "scene", i))
        path = out_dir / f"{scene.id}.json"
        save_scene(scene, path)
        written.append(str(path))
    click.echo(json.dumps({"written": written}, indent=2))


@main.command()
@click.option("--scene", "scene_path", type=click.Path(exists=True), required=True)
@_strategy_options
@click.pass_context
@friendly_errors
def explore(ctx, scene_path, criterion, grid, unit_angle_deg, ratio, max_clusters, elbow_threshold):
    """Plan observation poses for a scene."""
    strategy = _make_strategy(criterion, grid, unit_angle_deg, ratio, max_clusters, elbow_threshold)
    scene = load_scene(scene_path)
    poses = plan_poses(scene, strategy, ctx.obj["seed"])
    payload = {
        "scene_id": scene.id,
        "strategy": strategy.to_dict(),
        "image_count": len(poses),
        "poses": [p.to_dict() for p in poses],
    }
    _emit(ctx, payload)


def _emit(ctx, payload) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True)
    if ctx.obj["out"]:
        Path(ctx.obj["out"]).write_text(text + "\n")
        click.echo(ctx.obj["out"])
    else:
        click.echo(text)


@main.command()
@click.option("--scene", "scene_path", type=click.Path(exists=True), default=None)
@click.option("--objects", "objects_csv", default=None, help="Comma-separated object list.")
@click.option("--instruction", required=True)
@click.option("--mode", type=click.Choice(["stub", "http", "replay", "record"]),
              default="stub", show_default=True)
@click.option("--url", default="stub://local", show_default=True)
@click.option("--model", default="stub", show_default=True)
@click.option("--max-tokens", type=int, default=512, show_default=True)
@click.option("--cassette", type=click.Path(), default=None)
@click.pass_context
@friendly_errors
def plan(ctx, scene_path, objects_csv, instruction, mode, url, model, max_tokens, cassette):
    """Request an action plan for an instruction against an object list."""
    objects = _object_list_from(scene_path, objects_csv)
    settings = BackendSettings(mode=mode, url=url, model=model,
                               max_tokens=max_tokens, cassette=cassette)
    result = request_plan(
        settings.to_backend_config(),
        builtin_template("inference"),
        objects,
        instruction,
        max_tokens=max_tokens,
        send=settings.make_send(),
    )
    _emit(ctx, result.to_record())


@main.command("validate")
@click.option("--scene", "scene_path", type=click.Path(exists=True), default=None)
@click.option("--objects", "objects_csv", default=None)
@click.option("--plan-file", "plan_file", type=click.Path(exists=True, allow_dash=True),
              required=True, help="Text file of Step N. lines ('-' for stdin).")
@click.option("--mode", default="Lenient", show_default=True)
@click.option("--synonyms", "synonyms_path", type=click.Path(exists=True), default=None)
@click.pass_context
@friendly_errors
def validate_cmd(ctx, scene_path, objects_csv, plan_file, mode, synonyms_path):
    """Audit a plan text against an object list."""
    objects = _object_list_from(scene_path, objects_csv)
    text = sys.stdin.read() if plan_file == "-" else Path(plan_file).read_text()
    steps = parse_plan_text(text)
    try:
        rules = RuleSet(mode=parse_rules_mode(mode))
    except ValueError as exc:
        raise click.UsageError(str(exc))
    report = validate(
        Plan(instruction="", steps=tuple(steps), raw_text=text),
        objects,
        SynonymTable.load(synonyms_path),
        rules,
    )
    _emit(ctx, report.to_record())


@main.command()
@click.option("--scenes", "scenes_dir", type=click.Path(exists=True), required=True)
@click.option("--factor", type=int, default=2, show_default=True)
@click.option("--prob", type=float, default=0.5, show_default=True,
              help="Per-object substitution probability.")
@click.pass_context
@friendly_errors
def augment(ctx, scenes_dir, factor, prob):
    """Expand a scene corpus by class-substitution augmentation."""
    scenes = [load_scene(p) for p in sorted(Path(scenes_dir).glob("*.json"))]
    if not scenes:
        raise click.UsageError(f"no .json scenes under {scenes_dir}")
    expanded = expand_scenes(scenes, factor, prob, ctx.obj["seed"])
    out_dir = Path(ctx.obj["out"] or "scenes-augmented")
    out_dir.mkdir(parents=True, exist_ok=True)
    for scene in expanded:
        save_scene(scene, out_dir / f"{scene.id}.json")
    click.echo(json.dumps({"input": len(scenes), "output": len(expanded),
                           "dir": str(out_dir)}, indent=2))


@main.command()
@click.option("--scenes", "scenes_dir", type=click.Path(exists=True), required=True)
@click.option("--train-fraction", type=float, default=0.8, show_default=True)
@click.pass_context
@friendly_errors
def split(ctx, scenes_dir, train_fraction):
    """Split scenes into train/eval, stratified by room type."""
    scenes = [load_scene(p) for p in sorted(Path(scenes_dir).glob("*.json"))]
    train, evaluation = split_scenes(scenes, train_fraction, ctx.obj["seed"])
    payload = {
        "train": [s.id for s in train],
        "eval": [s.id for s in evaluation],
        "train_count": len(train),
        "eval_count": len(evaluation),
    }
    _emit(ctx, payload)


@main.command()
@click.pass_context
@friendly_errors
def run(ctx):
    """Run the full pipeline described by --config."""
    if not ctx.obj["config"]:
        raise click.UsageError("run requires --config")
    config = load_config(ctx.obj["config"])
    report = run_experiment(config)
    table = report.data.get("success_table")
    click.echo(json.dumps({
        "out_dir": str(report.out_dir),
        "items": report.data["item_count"],
        "errors": len(report.data["errors"]),
        "macro_average": table["macro_average"] if table else None,
    }, indent=2))


@main.command()
@click.option("--items", "items_path", type=click.Path(exists=True), required=True)
@click.option("--votes", "votes_path", type=click.Path(exists=True), required=True)
@click.pass_context
@friendly_errors
def evaluate(ctx, items_path, votes_path):
    """Compute the voted success table from run artifacts."""
    store = VoteStore(load_items_jsonl(items_path), votes_path)
    table, complete = store.success_table()
    payload = {
        "complete": complete,
        "decided_items": len(store.decided_verdicts()),
        "total_items": len(store.items),
        "table": table.to_record() if table else None,
        "failure_breakdown": store.breakdown(),
    }
    _emit(ctx, payload)


@main.command()
@click.option("--run", "run_dir", type=click.Path(exists=True), required=True)
@click.option("--label", default="run", show_default=True)
@friendly_errors
def report(run_dir, label):
    """Render a run's success table as text."""
    data = json.loads((Path(run_dir) / "report.json").read_text())
    table_record = data.get("success_table")
    if not table_record:
        click.echo("no success table in this run (no decided items)")
        return
    table = SuccessTable(
        rows=tuple(
            (r["room_type"], r["successes"], r["total"], r["rate"])
            for r in table_record["rows"]
        ),
        macro_average=table_record["macro_average"],
        missing_room_types=tuple(table_record.get("missing_room_types", [])),
    )
    click.echo(render_success_table({label: table}))
    shares = data.get("failure_breakdown")
    if shares:
        click.echo("")
        for kind, share in shares.items():
            click.echo(f"{kind}: {share:.2f}%")


@main.command()
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.pass_context
@friendly_errors
def serve(ctx, port, host):
    """Serve the HTTP API (runs the configured experiment first)."""
    from .service import serve as serve_service

    if not ctx.obj["config"]:
        raise click.UsageError("serve requires --config")
    config = load_config(ctx.obj["config"])
    serve_service(config, port=port, host=host)


if __name__ == "__main__":
    main()
