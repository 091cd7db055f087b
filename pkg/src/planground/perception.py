"""Simulated per-view object detection and multi-view aggregation.

A view sees an object when it is within sensor range, inside the horizontal
field of view, and (optionally) not blocked by an obstacle. Detection noise
is a per-object recall draw plus a Poisson number of spurious names from a
distractor vocabulary. The per-view random stream is derived from the run
seed and the pose index, so results do not depend on evaluation order.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

from .errors import DetectorConfigError
from .exploration import CameraPose
from .geometry import EPS, angle_difference
from .scene import ObjectList, Scene, has_line_of_sight
from .seeding import derive_seed

DEFAULT_RANGE = 2.0
DEFAULT_FOV = math.pi / 2


@dataclass(frozen=True)
class CameraConfig:
    range: float = DEFAULT_RANGE
    fov: float = DEFAULT_FOV
    occlusion_enabled: bool = True

    def __post_init__(self):
        if self.range <= 0:
            raise DetectorConfigError("camera range must be positive")
        if not 0 < self.fov <= 2 * math.pi + EPS:
            raise DetectorConfigError("fov must lie in (0, 2*pi]")


@dataclass(frozen=True)
class DetectorConfig:
    true_positive_rate: float = 0.95
    false_positive_rate: float = 0.0
    distractor_vocabulary: tuple[str, ...] = ()

    def __post_init__(self):
        if not 0 <= self.true_positive_rate <= 1:
            raise DetectorConfigError("true_positive_rate must lie in [0, 1]")
        if self.false_positive_rate < 0:
            raise DetectorConfigError("false_positive_rate must be >= 0")
        if self.false_positive_rate > 0 and not self.distractor_vocabulary:
            raise DetectorConfigError(
                "false_positive_rate > 0 requires a distractor vocabulary"
            )


@dataclass(frozen=True)
class ViewDetections:
    pose: CameraPose
    names: tuple[str, ...]

    def to_record(self) -> dict:
        return {"pose": self.pose.to_dict(), "names": list(self.names)}


def visible_objects(scene: Scene, pose: CameraPose, camera: CameraConfig) -> set[int]:
    """Indices of scene objects visible from the pose."""
    visible: set[int] = set()
    origin = (pose.x, pose.y)
    for i, obj in enumerate(scene.objects):
        dx = obj.position[0] - pose.x
        dy = obj.position[1] - pose.y
        if math.hypot(dx, dy) > camera.range + EPS:
            continue
        bearing = math.atan2(dy, dx)
        if abs(angle_difference(bearing, pose.theta)) > camera.fov / 2 + EPS:
            continue
        if camera.occlusion_enabled and not has_line_of_sight(scene, origin, obj.position):
            continue
        visible.add(i)
    return visible


def _poisson(rng: random.Random, lam: float) -> int:
    # Knuth's multiplicative method; lam stays small here.
    threshold = math.exp(-lam)
    count = 0
    p = 1.0
    while True:
        p *= rng.random()
        if p <= threshold:
            return count
        count += 1


def detect(
    scene: Scene,
    pose: CameraPose,
    camera: CameraConfig,
    detector: DetectorConfig,
    seed: int,
    pose_index: int = 0,
) -> ViewDetections:
    """One simulated detector pass over the view at `pose`."""
    if detector.false_positive_rate > 0:
        scene_classes = {obj.class_name for obj in scene.objects}
        overlap = scene_classes.intersection(detector.distractor_vocabulary)
        if overlap:
            raise DetectorConfigError(
                f"distractor vocabulary overlaps scene classes: {sorted(overlap)}"
            )
    rng = random.Random(derive_seed(seed, "detect", pose_index))
    names: list[str] = []
    for i in sorted(visible_objects(scene, pose, camera)):
        if rng.random() < detector.true_positive_rate:
            names.append(scene.objects[i].class_name)
    if detector.false_positive_rate > 0:
        for _ in range(_poisson(rng, detector.false_positive_rate)):
            names.append(rng.choice(detector.distractor_vocabulary))
    return ViewDetections(pose=pose, names=tuple(names))


def detect_views(
    scene: Scene,
    poses: list[CameraPose],
    camera: CameraConfig,
    detector: DetectorConfig,
    seed: int,
) -> list[ViewDetections]:
    return [
        detect(scene, pose, camera, detector, seed, pose_index=i)
        for i, pose in enumerate(poses)
    ]


def aggregate_object_list(views) -> ObjectList:
    """Union of all per-view names, deduplicated and sorted."""
    names: set[str] = set()
    for view in views:
        names.update(view.names)
    return ObjectList.from_names(names)
