import json
import math

import pytest

from conftest import make_scene
from planground.errors import SceneFormatError, SceneValidationError
from planground.geometry import Rect
from planground.scene import (
    ObjectList,
    RoomType,
    SceneGenSpec,
    achievable_grid_points,
    generate_synthetic_scene,
    ground_truth_object_list,
    has_line_of_sight,
    load_catalog,
    load_scene,
    normalize_name,
    rename_scene,
    save_scene,
    scene_from_dict,
    scene_to_dict,
    validate_scene,
)


def test_normalize_name():
    assert normalize_name("  Scrub   Brush ") == "scrub brush"
    assert normalize_name("trash_can") == "trash can"
    assert normalize_name("") == ""


def test_room_type_parse():
    assert RoomType.parse("Kitchen") is RoomType.KITCHEN
    assert RoomType.parse("LivingRoom") is RoomType.LIVING_ROOM
    # only the canonical spellings are accepted
    with pytest.raises(SceneValidationError, match="garage"):
        RoomType.parse("garage")
    with pytest.raises(SceneValidationError):
        RoomType.parse("living room")


def test_object_list_sorted_dedup():
    ol = ObjectList.from_names(["Towel", "sink", "towel", "", "Scrub  Brush"])
    assert ol.names == ("scrub brush", "sink", "towel")
    assert "towel" in ol
    assert "TOWEL" in ol  # membership normalizes
    assert len(ol) == 3
    assert list(ol) == ["scrub brush", "sink", "towel"]


def test_ground_truth_list(bathroom_scene):
    assert ground_truth_object_list(bathroom_scene).names == (
        "scrub brush", "sink", "sponge", "toilet", "towel",
    )


# --- grid enumeration -------------------------------------------------------

def test_grid_open_room_count_and_order():
    scene = make_scene(width=3.0, height=2.25)
    pts = achievable_grid_points(scene, 0.75)
    assert len(pts) == 20  # 5 x-values x 4 y-values, boundaries included
    assert pts[0] == (0.0, 0.0)
    assert pts[1] == (0.75, 0.0)  # x varies fastest
    assert pts[5] == (0.0, 0.75)
    assert pts[-1] == (3.0, 2.25)


def test_grid_skips_obstacle_interior_keeps_boundary():
    # obstacle covering x in [0.75, 2.25], y in [0.75, 1.5]
    scene = make_scene(width=3.0, height=2.25, obstacles=[(0.75, 0.75, 2.25, 1.5)])
    pts = achievable_grid_points(scene, 0.75)
    assert (1.5, 0.75) in pts  # on the obstacle edge
    assert (1.5, 1.5) in pts
    blocked = [p for p in pts if 0.75 < p[0] < 2.25 and 0.75 < p[1] < 1.5]
    assert blocked == []
    assert len(pts) == 20  # nothing strictly inside at this grid spacing


def test_grid_interior_point_removed():
    scene = make_scene(width=3.0, height=2.25, obstacles=[(1.0, 0.5, 2.0, 1.0)])
    pts = achievable_grid_points(scene, 0.75)
    assert (1.5, 0.75) not in pts
    assert len(pts) == 19


def test_grid_empty_scene_bounds_too_small():
    scene = make_scene(width=0.5, height=0.5)
    assert achievable_grid_points(scene, 0.75) == [(0.0, 0.0)]


def test_grid_rejects_bad_side():
    scene = make_scene()
    with pytest.raises(ValueError):
        achievable_grid_points(scene, 0.0)


def test_line_of_sight_blocked_by_obstacle():
    scene = make_scene(width=4.0, height=2.0, obstacles=[(1.5, 0.5, 2.5, 1.5)])
    assert not has_line_of_sight(scene, (0.5, 1.0), (3.5, 1.0))
    assert has_line_of_sight(scene, (0.5, 1.9), (3.5, 1.9))


# --- serialization ----------------------------------------------------------

def test_scene_round_trip(tmp_path, bathroom_scene):
    path = tmp_path / "scene.json"
    save_scene(bathroom_scene, path)
    loaded = load_scene(path)
    assert loaded == bathroom_scene
    # file is stable on re-save
    before = path.read_text()
    save_scene(loaded, path)
    assert path.read_text() == before


def test_scene_dict_shape(bathroom_scene):
    data = scene_to_dict(bathroom_scene)
    assert data["room_type"] == "Bathroom"
    assert data["format_version"] == 1
    assert data["objects"][0]["class"] == "sink"
    assert scene_from_dict(data) == bathroom_scene


def test_scene_from_dict_rejects_garbage():
    with pytest.raises(SceneFormatError):
        scene_from_dict(["not", "a", "mapping"])
    with pytest.raises(SceneFormatError):
        scene_from_dict({"id": "x"})
    good = scene_to_dict(make_scene(objects=[("sink", 1, 1)]))
    bad = dict(good, format_version=99)
    with pytest.raises(SceneFormatError):
        scene_from_dict(bad)


def test_load_scene_bad_json(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{nope")
    with pytest.raises(SceneFormatError):
        load_scene(path)


def test_validate_scene_errors():
    with pytest.raises(SceneValidationError, match="bounds"):
        validate_scene(make_scene(width=-1.0))
    with pytest.raises(SceneValidationError, match="obstacles"):
        validate_scene(make_scene(obstacles=[(2.0, 0.0, 5.0, 1.0)]))
    with pytest.raises(SceneValidationError, match="outside bounds"):
        validate_scene(make_scene(objects=[("sink", 10.0, 0.5)]))
    with pytest.raises(SceneValidationError, match="inside obstacles"):
        validate_scene(
            make_scene(obstacles=[(1.0, 1.0, 2.0, 2.0)], objects=[("sink", 1.5, 1.5)])
        )
    with pytest.raises(SceneValidationError, match="not normalized"):
        validate_scene(make_scene(objects=[("Sink", 1.0, 0.5)]))


def test_object_on_obstacle_boundary_is_legal():
    validate_scene(
        make_scene(obstacles=[(1.0, 1.0, 2.0, 2.0)], objects=[("sink", 1.0, 1.5)])
    )


# --- catalog + generator ----------------------------------------------------

def test_load_catalog_bundled():
    catalog = load_catalog()
    assert set(catalog) == set(RoomType)
    assert "sink" in catalog[RoomType.BATHROOM]
    assert all(len(v) >= 10 for v in catalog.values())


def test_load_catalog_custom(tmp_path):
    path = tmp_path / "cat.json"
    path.write_text(json.dumps({r.value: ["thing a", "thing b"] for r in RoomType}))
    catalog = load_catalog(path)
    assert catalog[RoomType.KITCHEN] == ["thing a", "thing b"]


def test_generator_is_deterministic_and_valid():
    spec = SceneGenSpec(room_type=RoomType.KITCHEN)
    a = generate_synthetic_scene(spec, 42)
    b = generate_synthetic_scene(spec, 42)
    assert a == b
    validate_scene(a)
    assert a.room_type is RoomType.KITCHEN
    assert a.id.startswith("kitchen-")
    lo, hi = spec.object_count
    assert lo <= len(a.objects) <= hi
    assert generate_synthetic_scene(spec, 43) != a


def test_generator_objects_are_observable():
    # every object must be visible from some achievable grid point
    spec = SceneGenSpec(room_type=RoomType.BEDROOM)
    for seed in range(5):
        scene = generate_synthetic_scene(spec, seed)
        grid = achievable_grid_points(scene, spec.grid_side)
        assert grid, scene.id
        for obj in scene.objects:
            assert any(
                math.dist(p, obj.position) <= spec.sight_range + 1e-9
                and has_line_of_sight(scene, p, obj.position)
                for p in grid
            ), f"{obj.class_name} hidden in {scene.id}"


def test_generator_names_come_from_catalog():
    catalog = load_catalog()
    scene = generate_synthetic_scene(SceneGenSpec(room_type=RoomType.LIVING_ROOM), 7)
    vocab = set(catalog[RoomType.LIVING_ROOM])
    assert {o.class_name for o in scene.objects} <= vocab


def test_spec_validation():
    from planground.errors import GenerationError

    with pytest.raises(GenerationError):
        SceneGenSpec(room_type=RoomType.KITCHEN, width_range=(5.0, 4.0)).validate()
    with pytest.raises(GenerationError):
        SceneGenSpec(room_type=RoomType.KITCHEN, object_count=(5, 2)).validate()


def test_rename_scene(bathroom_scene):
    renamed = rename_scene(bathroom_scene, "other-id")
    assert renamed.id == "other-id"
    assert renamed.objects == bathroom_scene.objects
    assert bathroom_scene.id == "bathroom-fixture"


def test_scene_is_hashable_frozen(bathroom_scene):
    with pytest.raises(Exception):
        bathroom_scene.id = "nope"
    assert Rect(0, 0, 1, 1) == Rect(0, 0, 1, 1)
