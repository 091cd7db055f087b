"""End-to-end runs: explore, detect, aggregate, plan, validate, evaluate.

A run is fully determined by its config plus, when the backend mode needs
one, a cassette of recorded completions; reports carry no wall-clock data so
reruns are byte-identical. Per-item failures are recorded and skipped rather
than aborting the run.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import random
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import yaml

from .errors import BackendError, ConfigError, PlangroundError
from .evaluation import (
    VERDICT_SUCCESS,
    EvalItem,
    SuccessTable,
    VoteStore,
    aggregate_success,
    failure_breakdown,
)
from .exploration import CollectionStrategy, plan_poses
from .perception import (
    CameraConfig,
    DetectorConfig,
    aggregate_object_list,
    detect_views,
)
from .planning import (
    DEFAULT_MAX_TOKENS,
    BackendConfig,
    PromptTemplate,
    builtin_template,
    http_send,
    load_template,
    request_plan,
    stub_send,
)
from .scene import (
    ROOM_TYPES,
    RoomType,
    Scene,
    SceneGenSpec,
    generate_synthetic_scene,
    ground_truth_object_list,
    load_catalog,
    load_scene,
    save_scene,
)
from .seeding import derive_seed
from .validation import RuleSet, SynonymTable, validate

BACKEND_MODES = ("stub", "http", "replay", "record")


def canonical_request_key(request: dict) -> str:
    payload = json.dumps(request, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode()).hexdigest()


class Cassette:
    """Recorded request/response pairs keyed by request hash."""

    def __init__(self, path, entries: dict | None = None):
        self.path = Path(path)
        self.entries: dict[str, dict] = dict(entries or {})

    @classmethod
    def load(cls, path) -> "Cassette":
        path = Path(path)
        try:
            data = json.loads(path.read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read cassette {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"cassette {path} is not valid JSON: {exc}") from exc
        return cls(path, data)

    def save(self) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.path.write_text(json.dumps(self.entries, indent=2, sort_keys=True) + "\n")

    def lookup(self, request: dict) -> str | None:
        entry = self.entries.get(canonical_request_key(request))
        return entry["text"] if entry else None

    def store(self, request: dict, text: str) -> None:
        self.entries[canonical_request_key(request)] = {"request": request, "text": text}

    def replay_send(self):
        def send(request: dict) -> str:
            text = self.lookup(request)
            if text is None:
                raise BackendError(
                    f"cassette {self.path} has no entry for request "
                    f"{canonical_request_key(request)[:12]}"
                )
            return text

        return send

    def recording_send(self, inner):
        def send(request: dict) -> str:
            text = self.lookup(request)
            if text is None:
                text = inner(request)
                self.store(request, text)
                self.save()
            return text

        return send


@dataclass(frozen=True)
class BackendSettings:
    mode: str = "stub"
    url: str = "stub://local"
    model: str = "stub"
    max_tokens: int = DEFAULT_MAX_TOKENS
    cassette: str | None = None
    template: str | None = None
    timeout: float = 30.0

    def validate(self) -> None:
        if self.mode not in BACKEND_MODES:
            raise ConfigError(f"backend mode must be one of {BACKEND_MODES}")
        if self.mode in ("replay", "record") and not self.cassette:
            raise ConfigError(f"backend mode {self.mode!r} requires a cassette path")

    def make_send(self):
        """The send callable for this mode (None never returned)."""
        self.validate()
        if self.mode == "stub":
            return stub_send
        backend = self.to_backend_config()
        if self.mode == "http":
            return http_send(backend)
        if self.mode == "replay":
            return Cassette.load(self.cassette).replay_send()
        cassette = (
            Cassette.load(self.cassette)
            if Path(self.cassette).exists()
            else Cassette(self.cassette)
        )
        return cassette.recording_send(http_send(backend))

    def to_backend_config(self) -> BackendConfig:
        url = self.url
        if self.mode == "http" and os.environ.get("PLAN_BACKEND_URL"):
            url = os.environ["PLAN_BACKEND_URL"]
        return BackendConfig(
            url=url,
            model=self.model,
            api_key=os.environ.get("PLAN_BACKEND_KEY"),
            timeout=self.timeout,
        )

    def identifier(self) -> str:
        return f"{self.mode}:{self.model}@{self.url}"


@dataclass(frozen=True)
class ExperimentConfig:
    master_seed: int
    out_dir: str
    scene_dir: str | None = None
    generate_count: int = 4
    strategy: CollectionStrategy = field(default_factory=CollectionStrategy)
    camera: CameraConfig = field(default_factory=CameraConfig)
    detector: DetectorConfig = field(default_factory=DetectorConfig)
    backend: BackendSettings = field(default_factory=BackendSettings)
    rules_mode: str = "Lenient"
    evaluation_mode: str = "AutoOnly"
    items_per_scene: int = 1
    instructions_path: str | None = None
    catalog_path: str | None = None
    synonyms_path: str | None = None

    def validate(self) -> None:
        if self.master_seed is None:
            raise ConfigError("master_seed is required")
        if self.rules_mode not in ("Strict", "Lenient"):
            raise ConfigError("rules mode must be Strict or Lenient")
        if self.evaluation_mode not in ("AutoOnly", "HumanVotes"):
            raise ConfigError("evaluation mode must be AutoOnly or HumanVotes")
        if self.scene_dir is None and self.generate_count < 1:
            raise ConfigError("need a scene_dir or a positive generate_count")
        if self.items_per_scene < 1:
            raise ConfigError("items_per_scene must be >= 1")
        self.strategy.validate()
        self.backend.validate()
        for label, path in (
            ("scene_dir", self.scene_dir),
            ("instructions", self.instructions_path),
            ("catalog", self.catalog_path),
            ("synonyms", self.synonyms_path),
            ("template", self.backend.template),
        ):
            if path is not None and not Path(path).exists():
                raise ConfigError(f"{label} path does not exist: {path}")
        if self.backend.mode == "replay" and not Path(self.backend.cassette).exists():
            raise ConfigError(f"cassette path does not exist: {self.backend.cassette}")

    def resolved_dict(self) -> dict:
        return {
            "master_seed": self.master_seed,
            "scene_source": self.scene_dir or f"generate:{self.generate_count}",
            "strategy": self.strategy.to_dict(),
            "camera": {
                "range": self.camera.range,
                "fov": self.camera.fov,
                "occlusion_enabled": self.camera.occlusion_enabled,
            },
            "detector": {
                "true_positive_rate": self.detector.true_positive_rate,
                "false_positive_rate": self.detector.false_positive_rate,
                "distractor_vocabulary": list(self.detector.distractor_vocabulary),
            },
            "backend": {
                "mode": self.backend.mode,
                "url": self.backend.url,
                "model": self.backend.model,
                "max_tokens": self.backend.max_tokens,
            },
            "rules_mode": self.rules_mode,
            "evaluation_mode": self.evaluation_mode,
            "items_per_scene": self.items_per_scene,
        }

    def config_hash(self) -> str:
        return canonical_request_key(self.resolved_dict())


def _resolve(base: Path, value):
    if value is None:
        return None
    path = Path(value)
    return str(path if path.is_absolute() else base / path)


def load_config(path) -> ExperimentConfig:
    """Parse a YAML/JSON experiment config; relative paths follow the file."""
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path} is not valid YAML: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config document must be a mapping")
    if "master_seed" not in raw:
        raise ConfigError("master_seed is required")
    base = path.parent

    scenes = raw.get("scenes", {}) or {}
    strategy = CollectionStrategy.from_dict(raw.get("strategy", {}) or {})

    cam = raw.get("camera", {}) or {}
    camera = CameraConfig(
        range=float(cam.get("range", 2.0)),
        fov=float(cam["fov"]) if "fov" in cam else math.radians(float(cam.get("fov_deg", 90.0))),
        occlusion_enabled=bool(cam.get("occlusion", True)),
    )

    det = raw.get("detector", {}) or {}
    distractors = det.get("distractors", []) or []
    if "distractors_file" in det and det["distractors_file"]:
        dpath = Path(_resolve(base, det["distractors_file"]))
        if not dpath.exists():
            raise ConfigError(f"distractors_file does not exist: {dpath}")
        distractors = [
            line.strip() for line in dpath.read_text().splitlines() if line.strip()
        ]
    detector = DetectorConfig(
        true_positive_rate=float(det.get("true_positive_rate", 0.95)),
        false_positive_rate=float(det.get("false_positive_rate", 0.0)),
        distractor_vocabulary=tuple(distractors),
    )

    back = raw.get("backend", {}) or {}
    backend = BackendSettings(
        mode=str(back.get("mode", "stub")),
        url=str(back.get("url", "stub://local")),
        model=str(back.get("model", "stub")),
        max_tokens=int(back.get("max_tokens", DEFAULT_MAX_TOKENS)),
        cassette=_resolve(base, back.get("cassette")),
        template=_resolve(base, back.get("template")),
        timeout=float(back.get("timeout", 30.0)),
    )

    config = ExperimentConfig(
        master_seed=int(raw["master_seed"]),
        out_dir=_resolve(base, raw.get("out_dir", "run-output")),
        scene_dir=_resolve(base, scenes.get("dir")),
        generate_count=int(scenes.get("generate", 4)),
        strategy=strategy,
        camera=camera,
        detector=detector,
        backend=backend,
        rules_mode=str(raw.get("rules", "Lenient")),
        evaluation_mode=str(raw.get("evaluation", "AutoOnly")),
        items_per_scene=int(raw.get("items_per_scene", 1)),
        instructions_path=_resolve(base, raw.get("instructions")),
        catalog_path=_resolve(base, raw.get("catalog")),
        synonyms_path=_resolve(base, raw.get("synonyms")),
    )
    config.validate()
    return config


def load_instructions(path=None) -> dict[RoomType, list[str]]:
    if path is None:
        text = resources.files("planground.data").joinpath("instructions.json").read_text()
    else:
        text = Path(path).read_text()
    raw = json.loads(text)
    table = {}
    for key, value in raw.items():
        room = RoomType.parse(key)
        items = [str(v) for v in value if str(v).strip()]
        if not items:
            raise ConfigError(f"no instructions for {key}")
        table[room] = items
    return table


def _load_scene_dir(scene_dir: Path) -> list[Scene]:
    files = sorted(scene_dir.glob("*.json"))
    if not files:
        raise ConfigError(f"scene_dir {scene_dir} holds no .json scene files")
    return [load_scene(f) for f in files]


def gather_scenes(config: ExperimentConfig, out_dir: Path) -> list[Scene]:
    if config.scene_dir is not None:
        return _load_scene_dir(Path(config.scene_dir))
    catalog = load_catalog(config.catalog_path)
    scenes = []
    scene_out = out_dir / "scenes"
    scene_out.mkdir(parents=True, exist_ok=True)
    for i in range(config.generate_count):
        room = ROOM_TYPES[i % len(ROOM_TYPES)]
        spec = SceneGenSpec(room_type=room, catalog=catalog)
        scene = generate_synthetic_scene(spec, derive_seed(config.master_seed, "scene", i))
        scenes.append(scene)
        save_scene(scene, scene_out / f"{scene.id}.json")
    return scenes


@dataclass
class ExperimentReport:
    data: dict
    items: list[EvalItem]
    out_dir: Path

    def save(self) -> Path:
        path = self.out_dir / "report.json"
        path.write_text(json.dumps(self.data, indent=2, sort_keys=True) + "\n")
        return path


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    """Execute the full pipeline for every scene and write all artifacts."""
    config.validate()
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    scenes = gather_scenes(config, out_dir)
    instructions = load_instructions(config.instructions_path)
    synonyms = SynonymTable.load(config.synonyms_path)
    rules = RuleSet(mode=config.rules_mode)
    send = config.backend.make_send()
    backend_config = config.backend.to_backend_config()
    template = (
        load_template(config.backend.template, "inference")
        if config.backend.template
        else builtin_template("inference")
    )

    items: list[EvalItem] = []
    scene_records: list[dict] = []
    errors: list[dict] = []
    detection_lines: list[str] = []

    for scene in scenes:
        record: dict = {"scene_id": scene.id, "room_type": scene.room_type.value}
        truth = ground_truth_object_list(scene)
        try:
            poses = plan_poses(scene, config.strategy, derive_seed(config.master_seed, "explore", scene.id))
            views = detect_views(
                scene, poses, config.camera, config.detector,
                derive_seed(config.master_seed, "detect", scene.id),
            )
            predicted = aggregate_object_list(views)
        except PlangroundError as exc:
            record["error"] = str(exc)
            errors.append({"scene_id": scene.id, "error": str(exc)})
            scene_records.append(record)
            continue
        for view in views:
            detection_lines.append(
                json.dumps(
                    {"scene_id": scene.id, **view.to_record()}, sort_keys=True
                )
            )
        record["image_count"] = len(poses)
        record["predicted_object_count"] = len(predicted)
        record["predicted_objects"] = list(predicted.names)
        record["ground_truth_count"] = len(truth)
        record["items"] = []

        room_instructions = instructions.get(scene.room_type)
        if not room_instructions:
            record["error"] = f"no instructions for {scene.room_type.value}"
            errors.append({"scene_id": scene.id, "error": record["error"]})
            scene_records.append(record)
            continue

        for j in range(config.items_per_scene):
            item_id = f"{scene.id}/{j:03d}"
            rng = random.Random(derive_seed(config.master_seed, "instruction", scene.id, j))
            instruction = rng.choice(room_instructions)
            item_record: dict = {"item_id": item_id, "instruction": instruction}
            try:
                plan = request_plan(
                    backend_config,
                    template,
                    predicted,
                    instruction,
                    max_tokens=config.backend.max_tokens,
                    send=send,
                )
                report = validate(plan, truth, synonyms, rules)
            except PlangroundError as exc:
                item_record["error"] = str(exc)
                errors.append({"item_id": item_id, "error": str(exc)})
                record["items"].append(item_record)
                continue
            item_record["plan"] = plan.to_record()
            item_record["verdict"] = report.verdict
            item_record["first_failure_step"] = report.first_failure_step
            record["items"].append(item_record)
            items.append(
                EvalItem(
                    item_id=item_id,
                    scene_id=scene.id,
                    room_type=scene.room_type,
                    instruction=instruction,
                    plan=plan,
                    object_list=truth,
                    auto_report=report,
                )
            )
        scene_records.append(record)

    (out_dir / "detections.jsonl").write_text(
        "\n".join(detection_lines) + ("\n" if detection_lines else "")
    )
    (out_dir / "items.jsonl").write_text(
        "\n".join(json.dumps(i.to_record(), sort_keys=True) for i in items)
        + ("\n" if items else "")
    )

    table: SuccessTable | None = None
    breakdown = None
    table_source = None
    if config.evaluation_mode == "AutoOnly":
        decided = [
            (item.room_type, item.auto_report.verdict == VERDICT_SUCCESS)
            for item in items
            if item.auto_report is not None
        ]
        if decided:
            table = aggregate_success(decided)
            breakdown = failure_breakdown(
                [item.auto_report.verdict for item in items if item.auto_report is not None]
            )
            table_source = "auto"
    else:
        votes_path = out_dir / "votes.jsonl"
        if not votes_path.exists():
            votes_path.write_text("")
        store = VoteStore(items, votes_path)
        table, _complete = store.success_table()
        breakdown = store.breakdown()
        table_source = "votes"

    data = {
        "config": config.resolved_dict(),
        "config_hash": config.config_hash(),
        "backend": config.backend.identifier(),
        "scenes": scene_records,
        "errors": errors,
        "item_count": len(items),
        "success_table": table.to_record() if table else None,
        "table_source": table_source,
        "failure_breakdown": breakdown,
    }
    report = ExperimentReport(data=data, items=items, out_dir=out_dir)
    report.save()
    return report
