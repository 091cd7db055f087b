"""Floorplan scenes: bounds, obstacles, placed objects, and a seeded generator.

A scene is a 2D rectangle with axis-aligned rectangular obstacles punched out.
The remaining region is the area an agent can occupy. Objects are points with
normalized class names.
"""

from __future__ import annotations

import json
import math
import random
from collections import deque
from dataclasses import dataclass, replace
from enum import Enum
from importlib import resources
from pathlib import Path

from .errors import GenerationError, SceneFormatError, SceneValidationError
from .geometry import EPS, Point, Rect, segment_crosses_rect_interior

FORMAT_VERSION = 1
DEFAULT_GRID_SIDE = 0.75
DEFAULT_SIGHT_RANGE = 2.0


class RoomType(str, Enum):
    KITCHEN = "Kitchen"
    LIVING_ROOM = "LivingRoom"
    BEDROOM = "Bedroom"
    BATHROOM = "Bathroom"

    @classmethod
    def parse(cls, value: str) -> "RoomType":
        try:
            return cls(value)
        except ValueError:
            raise SceneValidationError(
                f"unknown room_type {value!r}; expected one of "
                f"{[m.value for m in cls]}"
            ) from None


ROOM_TYPES = tuple(RoomType)


def normalize_name(raw: str) -> str:
    """Lowercase, underscores to spaces, whitespace collapsed and trimmed."""
    return " ".join(raw.replace("_", " ").lower().split())


@dataclass(frozen=True)
class ObjectInstance:
    class_name: str
    position: Point


@dataclass(frozen=True)
class ObjectList:
    """Sorted, deduplicated, normalized class names."""

    names: tuple[str, ...] = ()

    @classmethod
    def from_names(cls, names) -> "ObjectList":
        cleaned = {normalize_name(n) for n in names}
        cleaned.discard("")
        return cls(tuple(sorted(cleaned)))

    def __iter__(self):
        return iter(self.names)

    def __len__(self) -> int:
        return len(self.names)

    def __contains__(self, name: str) -> bool:
        return normalize_name(name) in self.names


@dataclass(frozen=True)
class Scene:
    id: str
    room_type: RoomType
    bounds: Rect
    obstacles: tuple[Rect, ...] = ()
    objects: tuple[ObjectInstance, ...] = ()
    format_version: int = FORMAT_VERSION


def validate_scene(scene: Scene) -> None:
    """Raise SceneValidationError naming the first offending field."""
    if not scene.id:
        raise SceneValidationError("scene id is empty")
    if not scene.bounds.is_valid():
        raise SceneValidationError(
            f"bounds must have positive width and height, got {scene.bounds}"
        )
    for i, ob in enumerate(scene.obstacles):
        if not ob.is_valid():
            raise SceneValidationError(f"obstacles[{i}] has non-positive size")
        if not scene.bounds.contains_rect(ob):
            raise SceneValidationError(f"obstacles[{i}] outside bounds")
    for i, obj in enumerate(scene.objects):
        if not obj.class_name or normalize_name(obj.class_name) != obj.class_name:
            raise SceneValidationError(
                f"objects[{i}] class name {obj.class_name!r} is not normalized"
            )
        x, y = obj.position
        if not scene.bounds.contains(x, y):
            raise SceneValidationError(f"objects[{i}] ({obj.class_name}) outside bounds")
        for j, ob in enumerate(scene.obstacles):
            if ob.strictly_contains(x, y):
                raise SceneValidationError(
                    f"objects[{i}] ({obj.class_name}) inside obstacles[{j}]"
                )


def scene_to_dict(scene: Scene) -> dict:
    return {
        "id": scene.id,
        "room_type": scene.room_type.value,
        "format_version": scene.format_version,
        "bounds": scene.bounds.to_dict(),
        "obstacles": [ob.to_dict() for ob in scene.obstacles],
        "objects": [
            {"class": o.class_name, "x": o.position[0], "y": o.position[1]}
            for o in scene.objects
        ],
    }


def scene_from_dict(data: dict) -> Scene:
    if not isinstance(data, dict):
        raise SceneFormatError("scene document is not a mapping")
    try:
        version = int(data.get("format_version", FORMAT_VERSION))
        if version != FORMAT_VERSION:
            raise SceneFormatError(f"unsupported format_version {version}")
        scene = Scene(
            id=str(data["id"]),
            room_type=RoomType.parse(str(data["room_type"])),
            bounds=Rect.from_dict(data["bounds"]),
            obstacles=tuple(Rect.from_dict(d) for d in data.get("obstacles", [])),
            objects=tuple(
                ObjectInstance(
                    class_name=normalize_name(str(d["class"])),
                    position=(float(d["x"]), float(d["y"])),
                )
                for d in data.get("objects", [])
            ),
            format_version=version,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise SceneFormatError(f"malformed scene document: {exc}") from exc
    validate_scene(scene)
    return scene


def load_scene(path) -> Scene:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise SceneFormatError(f"cannot read {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SceneFormatError(f"{path}: invalid scene file: {exc}") from exc
    return scene_from_dict(data)


def save_scene(scene: Scene, path) -> None:
    validate_scene(scene)
    Path(path).write_text(json.dumps(scene_to_dict(scene), indent=2, sort_keys=True) + "\n")


def ground_truth_object_list(scene: Scene) -> ObjectList:
    return ObjectList.from_names(o.class_name for o in scene.objects)


def achievable_grid_points(scene: Scene, grid_side: float) -> list[Point]:
    """Lattice points inside bounds and not strictly inside any obstacle.

    The lattice is anchored at the bounds min corner with boundary points
    included. Returned row-major: y outer, x inner.
    """
    if grid_side <= 0:
        raise ValueError("grid_side must be positive")
    b = scene.bounds
    nx = int(math.floor((b.x_max - b.x_min) / grid_side + EPS))
    ny = int(math.floor((b.y_max - b.y_min) / grid_side + EPS))
    points: list[Point] = []
    for j in range(ny + 1):
        y = b.y_min + j * grid_side
        for i in range(nx + 1):
            x = b.x_min + i * grid_side
            if any(ob.strictly_contains(x, y) for ob in scene.obstacles):
                continue
            points.append((x, y))
    return points


def _grid_is_connected(points: list[Point], grid_side: float) -> bool:
    """4-connectivity over the lattice (neighbors one grid step apart)."""
    if not points:
        return False
    x0, y0 = points[0]
    index = {
        (round((x - x0) / grid_side), round((y - y0) / grid_side)) for x, y in points
    }
    start = next(iter(index))
    seen = {start}
    queue = deque([start])
    while queue:
        i, j = queue.popleft()
        for ni, nj in ((i + 1, j), (i - 1, j), (i, j + 1), (i, j - 1)):
            if (ni, nj) in index and (ni, nj) not in seen:
                seen.add((ni, nj))
                queue.append((ni, nj))
    return len(seen) == len(index)


def has_line_of_sight(scene: Scene, a: Point, b: Point) -> bool:
    return not any(
        segment_crosses_rect_interior(a, b, ob) for ob in scene.obstacles
    )


def _observable(scene: Scene, pos: Point, grid: list[Point], sight_range: float) -> bool:
    for p in grid:
        if math.dist(p, pos) <= sight_range + EPS and has_line_of_sight(scene, p, pos):
            return True
    return False


def load_catalog(path=None) -> dict[RoomType, list[str]]:
    """Room-type vocabulary map; falls back to the bundled catalog file."""
    if path is None:
        text = resources.files("planground.data").joinpath("catalog.json").read_text()
    else:
        text = Path(path).read_text()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SceneFormatError(f"invalid catalog file: {exc}") from exc
    catalog: dict[RoomType, list[str]] = {}
    for key, names in raw.items():
        room = RoomType.parse(key)
        cleaned = sorted({normalize_name(n) for n in names} - {""})
        if not cleaned:
            raise SceneValidationError(f"catalog for {key} is empty")
        catalog[room] = cleaned
    return catalog


@dataclass(frozen=True)
class SceneGenSpec:
    """Parameters for the synthetic scene generator."""

    room_type: RoomType
    width_range: tuple[float, float] = (4.5, 7.5)
    height_range: tuple[float, float] = (4.5, 7.5)
    obstacle_count: tuple[int, int] = (1, 3)
    object_count: tuple[int, int] = (4, 9)
    catalog: dict[RoomType, list[str]] | None = None
    grid_side: float = DEFAULT_GRID_SIDE
    sight_range: float = DEFAULT_SIGHT_RANGE

    def validate(self) -> None:
        for name in ("width_range", "height_range"):
            lo, hi = getattr(self, name)
            if not 0 < lo <= hi:
                raise GenerationError(f"{name} must satisfy 0 < lo <= hi")
        for name in ("obstacle_count", "object_count"):
            lo, hi = getattr(self, name)
            if not 0 <= lo <= hi:
                raise GenerationError(f"{name} must satisfy 0 <= lo <= hi")
        if self.grid_side <= 0 or self.sight_range <= 0:
            raise GenerationError("grid_side and sight_range must be positive")


_OBSTACLE_RETRIES = 300
_OBJECT_RETRIES = 500


def generate_synthetic_scene(spec: SceneGenSpec, seed: int) -> Scene:
    """Deterministic synthetic scene for a (spec, seed) pair.

    Guarantees beyond the type invariants: the achievable lattice at
    spec.grid_side is non-empty and 4-connected, and every placed object has
    an unobstructed line of sight from some lattice point within
    spec.sight_range. Obstacle sets and object placements that violate these
    are rejection-resampled within a fixed retry budget.
    """
    spec.validate()
    catalog = spec.catalog if spec.catalog is not None else load_catalog()
    try:
        vocabulary = catalog[spec.room_type]
    except KeyError:
        raise GenerationError(f"catalog has no entry for {spec.room_type.value}") from None
    if not vocabulary:
        raise GenerationError(f"catalog for {spec.room_type.value} is empty")

    rng = random.Random(seed)
    width = round(rng.uniform(*spec.width_range), 3)
    height = round(rng.uniform(*spec.height_range), 3)
    bounds = Rect(0.0, 0.0, width, height)
    n_obstacles = rng.randint(*spec.obstacle_count)
    n_objects = rng.randint(*spec.object_count)

    grid: list[Point] = []
    obstacles: tuple[Rect, ...] = ()
    for _ in range(_OBSTACLE_RETRIES):
        candidate = []
        for _ in range(n_obstacles):
            w = round(rng.uniform(0.4, 1.4), 3)
            h = round(rng.uniform(0.4, 1.4), 3)
            w = min(w, width * 0.45)
            h = min(h, height * 0.45)
            x0 = round(rng.uniform(0.0, width - w), 3)
            y0 = round(rng.uniform(0.0, height - h), 3)
            candidate.append(Rect(x0, y0, round(x0 + w, 3), round(y0 + h, 3)))
        trial = Scene(
            id="trial", room_type=spec.room_type, bounds=bounds,
            obstacles=tuple(candidate),
        )
        grid = achievable_grid_points(trial, spec.grid_side)
        if grid and _grid_is_connected(grid, spec.grid_side):
            obstacles = tuple(candidate)
            break
    else:
        raise GenerationError(
            f"no connected obstacle layout found in {_OBSTACLE_RETRIES} attempts"
        )

    partial = Scene(id="trial", room_type=spec.room_type, bounds=bounds, obstacles=obstacles)
    objects: list[ObjectInstance] = []
    for _ in range(n_objects):
        name = rng.choice(vocabulary)
        for _ in range(_OBJECT_RETRIES):
            x = round(rng.uniform(0.0, width), 3)
            y = round(rng.uniform(0.0, height), 3)
            if any(ob.strictly_contains(x, y) for ob in obstacles):
                continue
            if _observable(partial, (x, y), grid, spec.sight_range):
                objects.append(ObjectInstance(class_name=name, position=(x, y)))
                break
        else:
            raise GenerationError(
                f"no observable placement for {name!r} in {_OBJECT_RETRIES} attempts"
            )

    scene = Scene(
        id=f"{spec.room_type.value.lower()}-{seed & 0xFFFFFFFF:08x}",
        room_type=spec.room_type,
        bounds=bounds,
        obstacles=obstacles,
        objects=tuple(objects),
    )
    validate_scene(scene)
    return scene


def rename_scene(scene: Scene, new_id: str) -> Scene:
    return replace(scene, id=new_id)
