"""HTTP service over the pipeline: scenes, exploration, planning, validation,
and the annotation workflow (queue, votes, live report tables).

Vote appends are fsynced before they are acknowledged, so there is nothing
left to flush at shutdown; a corrupt vote log makes startup fail instead of
serving bad tallies.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from fastapi import FastAPI, HTTPException, Query
from pydantic import BaseModel, Field

from .errors import (
    BackendError,
    DuplicateVoteError,
    InvalidVoteError,
    PlanParseError,
    PlangroundError,
    StrategyError,
    UnknownItemError,
)
from .evaluation import (
    VERDICT_SUCCESS,
    EvalItem,
    VoteRecord,
    VoteStore,
    aggregate_success,
    failure_breakdown,
)
from .exploration import CollectionStrategy, plan_poses
from .planning import (
    DEFAULT_MAX_TOKENS,
    BackendConfig,
    Plan,
    PromptTemplate,
    builtin_template,
    load_template,
    parse_plan_text,
    request_plan,
)
from .scene import (
    ObjectList,
    Scene,
    ground_truth_object_list,
    load_scene,
    scene_to_dict,
)
from .validation import RuleSet, SynonymTable, parse_rules_mode, validate


@dataclass
class ServiceState:
    scenes: dict[str, Scene]
    store: VoteStore
    synonyms: SynonymTable
    backend_config: BackendConfig
    backend_send: object
    template: PromptTemplate
    rules_mode: str = "Lenient"
    evaluation_mode: str = "HumanVotes"
    max_tokens: int = DEFAULT_MAX_TOKENS
    explore_seed: int = 0


class StrategyBody(BaseModel):
    criterion: str = "blockwise"
    grid: float = 0.75
    unit_angle_deg: float = 120.0
    ratio: float = 1.0
    max_clusters: int = 8
    elbow_threshold: float = 0.15


class ExploreBody(BaseModel):
    scene_id: str
    strategy: StrategyBody = Field(default_factory=StrategyBody)
    seed: int | None = None


class PlanBody(BaseModel):
    instruction: str
    scene_id: str | None = None
    object_list: list[str] | None = None
    max_tokens: int | None = None


class ValidateBody(BaseModel):
    plan_text: str
    scene_id: str | None = None
    object_list: list[str] | None = None
    mode: str | None = None


class VoteBody(BaseModel):
    item_id: str
    annotator_id: str
    verdict: str
    failure_type: str | None = None


def _fail(status: int, code: str, message: str):
    raise HTTPException(status_code=status, detail={"code": code, "message": message})


def _queue_view(item: EvalItem) -> dict:
    return {
        "item_id": item.item_id,
        "room_type": item.room_type.value,
        "instruction": item.instruction,
        "steps": [f"Step {s.index}. {s.raw}" for s in item.plan.steps],
        "object_list": list(item.object_list.names),
        "auto_hint": item.auto_report.verdict if item.auto_report else None,
    }


def create_app(state: ServiceState) -> FastAPI:
    app = FastAPI(title="planground", version="0.1.0")

    def _scene_or_404(scene_id: str) -> Scene:
        scene = state.scenes.get(scene_id)
        if scene is None:
            _fail(404, "unknown_scene", f"no scene with id {scene_id}")
        return scene

    def _object_list(scene_id: str | None, names: list[str] | None) -> ObjectList:
        if names is not None:
            return ObjectList.from_names(names)
        if scene_id is not None:
            return ground_truth_object_list(_scene_or_404(scene_id))
        _fail(400, "bad_request", "provide scene_id or object_list")

    @app.get("/api/scenes")
    def list_scenes():
        return [
            {
                "id": scene.id,
                "room_type": scene.room_type.value,
                "object_count": len(scene.objects),
                "obstacle_count": len(scene.obstacles),
            }
            for scene in sorted(state.scenes.values(), key=lambda s: s.id)
        ]

    @app.get("/api/scenes/{scene_id}")
    def get_scene(scene_id: str):
        return scene_to_dict(_scene_or_404(scene_id))

    @app.post("/api/explore")
    def explore(body: ExploreBody):
        scene = _scene_or_404(body.scene_id)
        try:
            strategy = CollectionStrategy.from_dict(body.strategy.model_dump())
            seed = state.explore_seed if body.seed is None else body.seed
            poses = plan_poses(scene, strategy, seed)
        except StrategyError as exc:
            _fail(400, "bad_strategy", str(exc))
        return {
            "scene_id": scene.id,
            "image_count": len(poses),
            "poses": [p.to_dict() for p in poses],
        }

    @app.post("/api/plans")
    def make_plan(body: PlanBody):
        objects = _object_list(body.scene_id, body.object_list)
        try:
            plan = request_plan(
                state.backend_config,
                state.template,
                objects,
                body.instruction,
                max_tokens=body.max_tokens or state.max_tokens,
                send=state.backend_send,
            )
        except PlanParseError as exc:
            _fail(502, "plan_parse_error", f"{exc} (raw text preserved)")
        except BackendError as exc:
            _fail(502, "backend_error", str(exc))
        return plan.to_record()

    @app.post("/api/validate")
    def validate_plan(body: ValidateBody):
        objects = _object_list(body.scene_id, body.object_list)
        try:
            steps = parse_plan_text(body.plan_text)
            rules = RuleSet(mode=parse_rules_mode(body.mode or state.rules_mode))
            report = validate(
                Plan(instruction="", steps=tuple(steps), raw_text=body.plan_text),
                objects,
                state.synonyms,
                rules,
            )
        except PlanParseError as exc:
            _fail(400, "plan_parse_error", str(exc))
        except ValueError as exc:
            _fail(400, "bad_request", str(exc))
        return report.to_record()

    @app.get("/api/annotations/queue")
    def annotation_queue(annotator: str = Query(..., min_length=1)):
        pending = state.store.queue_for(annotator)
        return {
            "annotator": annotator,
            "pending": len(pending),
            "items": [_queue_view(item) for item in pending],
        }

    @app.post("/api/annotations", status_code=201)
    def submit_vote(body: VoteBody):
        try:
            vote = VoteRecord(
                item_id=body.item_id,
                annotator_id=body.annotator_id,
                verdict=body.verdict,
                failure_type=body.failure_type,
            )
            state.store.record_vote(vote)
        except InvalidVoteError as exc:
            _fail(422, "invalid_vote", str(exc))
        except UnknownItemError as exc:
            _fail(404, "unknown_item", str(exc))
        except DuplicateVoteError as exc:
            _fail(409, "duplicate_vote", str(exc))
        except PlangroundError as exc:
            _fail(409, "vote_rejected", str(exc))
        votes = len(state.store.votes_for(body.item_id))
        return {"status": "recorded", "item_id": body.item_id, "votes": votes}

    @app.get("/api/reports/success")
    def success_report():
        if state.evaluation_mode == "AutoOnly":
            items = [i for i in state.store.items if i.auto_report is not None]
            table = (
                aggregate_success(
                    (i.room_type, i.auto_report.verdict == VERDICT_SUCCESS)
                    for i in items
                )
                if items
                else None
            )
            return {
                "source": "auto",
                "incomplete": not items,
                "decided_items": len(items),
                "total_items": len(state.store.items),
                "table": table.to_record() if table else None,
            }
        table, complete = state.store.success_table()
        decided = len(state.store.decided_verdicts())
        return {
            "source": "votes",
            "incomplete": not complete,
            "decided_items": decided,
            "total_items": len(state.store.items),
            "table": table.to_record() if table else None,
        }

    @app.get("/api/reports/failures")
    def failures_report():
        if state.evaluation_mode == "AutoOnly":
            verdicts = [
                i.auto_report.verdict for i in state.store.items if i.auto_report
            ]
            shares = failure_breakdown(verdicts) if verdicts else None
        else:
            shares = state.store.breakdown()
        return {"shares": shares, "decided": shares is not None}

    return app


def build_service_state(config) -> ServiceState:
    """Run (or re-run) the experiment for `config` and wrap its artifacts.

    Reruns are deterministic for stub/replay backends, so restarting the
    service reproduces the same items; existing votes are replayed from the
    run directory's vote log.
    """
    from .experiment import run_experiment

    report = run_experiment(config)
    votes_path = Path(config.out_dir) / "votes.jsonl"
    if not votes_path.exists():
        votes_path.write_text("")
    store = VoteStore(report.items, votes_path)
    template = (
        load_template(config.backend.template, "inference")
        if config.backend.template
        else builtin_template("inference")
    )
    scenes = {}
    scene_dir = Path(config.scene_dir) if config.scene_dir else Path(config.out_dir) / "scenes"
    if scene_dir.exists():
        for path in sorted(scene_dir.glob("*.json")):
            scene = load_scene(path)
            scenes[scene.id] = scene
    return ServiceState(
        scenes=scenes,
        store=store,
        synonyms=SynonymTable.load(config.synonyms_path),
        backend_config=config.backend.to_backend_config(),
        backend_send=config.backend.make_send(),
        template=template,
        rules_mode=config.rules_mode,
        evaluation_mode=config.evaluation_mode,
        max_tokens=config.backend.max_tokens,
        explore_seed=config.master_seed,
    )


def serve(config, port: int = 8000, host: str = "127.0.0.1") -> None:
    import uvicorn

    state = build_service_state(config)
    uvicorn.run(create_app(state), host=host, port=port)
