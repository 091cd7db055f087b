"""Instruction-dataset tooling: vocabularies, augmentation, filtering, splits.

Augmentation swaps object classes for other classes that plausibly occur in
the same room type, keeping positions fixed, which multiplies a scene corpus
without inventing out-of-place objects. Generated (instruction, plan) samples
are kept only when the plan parses and touches listed objects exclusively.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, replace

from .errors import DatasetError
from .planning import ActionStep, parse_plan_text
from .scene import ObjectInstance, ObjectList, RoomType, Scene, ground_truth_object_list
from .seeding import derive_seed
from .validation import SynonymTable, check_hallucination


@dataclass(frozen=True)
class RoomVocabulary:
    room_type: RoomType
    names: tuple[str, ...]


@dataclass(frozen=True)
class Triplet:
    scene_id: str
    object_list: ObjectList
    instruction: str
    steps: tuple[ActionStep, ...]

    def to_record(self) -> dict:
        return {
            "scene_id": self.scene_id,
            "object_list": list(self.object_list.names),
            "instruction": self.instruction,
            "steps": [{"index": s.index, "raw": s.raw} for s in self.steps],
        }


def room_type_vocabulary(scenes, room_type: RoomType) -> RoomVocabulary:
    """Union of ground-truth object lists over scenes of one room type."""
    names: set[str] = set()
    found = False
    for scene in scenes:
        if scene.room_type == room_type:
            found = True
            names.update(ground_truth_object_list(scene).names)
    if not found:
        raise DatasetError(f"no scenes of room type {room_type.value}")
    return RoomVocabulary(room_type=room_type, names=tuple(sorted(names)))


def augment_scene(
    scene: Scene,
    vocab: RoomVocabulary,
    substitution_prob: float,
    seed: int,
    counters: dict | None = None,
) -> Scene:
    """Seeded per-object class substitution from the room vocabulary.

    Each object is independently considered with substitution_prob; the
    replacement is drawn from vocabulary names neither equal to the current
    class nor present in the scene already. When no eligible name remains the
    substitution is skipped and counted under counters["skipped"].
    """
    if vocab.room_type != scene.room_type:
        raise DatasetError(
            f"vocabulary for {vocab.room_type.value} used on a {scene.room_type.value} scene"
        )
    if not 0 <= substitution_prob <= 1:
        raise DatasetError("substitution_prob must lie in [0, 1]")
    rng = random.Random(derive_seed(seed, "augment", scene.id))
    present = {o.class_name for o in scene.objects}
    new_objects: list[ObjectInstance] = []
    for obj in scene.objects:
        draw = rng.random()
        if draw >= substitution_prob:
            new_objects.append(obj)
            continue
        eligible = sorted(set(vocab.names) - present - {obj.class_name})
        if not eligible:
            if counters is not None:
                counters["skipped"] = counters.get("skipped", 0) + 1
            new_objects.append(obj)
            continue
        replacement = rng.choice(eligible)
        present.add(replacement)
        new_objects.append(replace(obj, class_name=replacement))
    return replace(
        scene,
        id=f"{scene.id}-aug{seed & 0xFFFFFFFF:08x}",
        objects=tuple(new_objects),
    )


def expand_scenes(scenes, factor: int, substitution_prob: float, seed: int) -> list[Scene]:
    """Each scene yields itself plus (factor - 1) augmented variants."""
    if factor < 1:
        raise DatasetError("factor must be >= 1")
    scenes = list(scenes)
    vocabs = {
        rt: room_type_vocabulary(scenes, rt)
        for rt in {s.room_type for s in scenes}
    }
    out: list[Scene] = []
    for scene in scenes:
        out.append(replace(scene, id=f"{scene.id}-x000"))
        for j in range(1, factor):
            variant = augment_scene(
                scene,
                vocabs[scene.room_type],
                substitution_prob,
                derive_seed(seed, "expand", scene.id, j),
            )
            out.append(replace(variant, id=f"{scene.id}-x{j:03d}"))
    return out


@dataclass(frozen=True)
class FilterResult:
    accepted: bool
    triplet: Triplet | None = None
    reason: str | None = None


def filter_generated_sample(
    instruction: str,
    plan_text: str,
    object_list: ObjectList,
    scene_id: str = "",
    synonyms: SynonymTable | None = None,
) -> FilterResult:
    """Accept a generated sample only if it parses and stays on the list."""
    from .planning import Plan

    try:
        steps = parse_plan_text(plan_text)
    except Exception:
        return FilterResult(accepted=False, reason="parse_failure")
    plan = Plan(instruction=instruction, steps=tuple(steps), raw_text=plan_text)
    for audit in check_hallucination(plan, object_list, synonyms):
        if audit.hallucinated:
            return FilterResult(accepted=False, reason=f"hallucination(step {audit.index})")
    return FilterResult(
        accepted=True,
        triplet=Triplet(
            scene_id=scene_id,
            object_list=object_list,
            instruction=instruction,
            steps=tuple(steps),
        ),
    )


def split_generated(text: str) -> tuple[str, str] | None:
    """Split a generation-mode completion into (instruction, plan text).

    Expects an "Instruction:" line followed by step lines; None when the
    instruction line is missing.
    """
    instruction = None
    plan_lines: list[str] = []
    for line in text.splitlines():
        stripped = line.strip()
        if instruction is None and stripped.lower().startswith("instruction:"):
            instruction = stripped.split(":", 1)[1].strip()
            continue
        plan_lines.append(line)
    if not instruction:
        return None
    return instruction, "\n".join(plan_lines)


def split_scenes(scenes, train_fraction: float, seed: int) -> tuple[list[Scene], list[Scene]]:
    """Seeded split, stratified by room type, remainder going to train."""
    scenes = list(scenes)
    if len(scenes) < 2:
        raise DatasetError("need at least 2 scenes to split")
    if not 0 < train_fraction < 1:
        raise DatasetError("train_fraction must lie in (0, 1)")
    by_type: dict[RoomType, list[int]] = {}
    for i, scene in enumerate(scenes):
        by_type.setdefault(scene.room_type, []).append(i)
    train_idx: set[int] = set()
    for room_type, indices in sorted(by_type.items(), key=lambda kv: kv[0].value):
        rng = random.Random(derive_seed(seed, "split", room_type.value))
        shuffled = list(indices)
        rng.shuffle(shuffled)
        n_train = math.ceil(len(shuffled) * train_fraction - 1e-9)
        train_idx.update(shuffled[:n_train])
    train = [s for i, s in enumerate(scenes) if i in train_idx]
    evaluation = [s for i, s in enumerate(scenes) if i not in train_idx]
    return train, evaluation
