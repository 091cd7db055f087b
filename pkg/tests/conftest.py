"""Shared fixtures: hand-built scenes and canned plan texts."""

import pytest

from planground.geometry import Rect
from planground.scene import ObjectInstance, RoomType, Scene


def make_scene(
    width=3.0,
    height=2.25,
    obstacles=(),
    objects=(),
    room=RoomType.BATHROOM,
    scene_id="test-scene",
):
    """Scene with bounds anchored at the origin and explicit contents.

    `objects` entries are (class_name, x, y) triples.
    """
    return Scene(
        id=scene_id,
        room_type=room,
        bounds=Rect(0.0, 0.0, float(width), float(height)),
        obstacles=tuple(Rect(*o) if not isinstance(o, Rect) else o for o in obstacles),
        objects=tuple(ObjectInstance(name, (float(x), float(y))) for name, x, y in objects),
    )


CLEANING_PLAN = """Step 1: Grasp a sponge
Step 2: Move to the sink
Step 3: Wet the sponge
Step 4: Scrub the sink
Step 5: Rinse the sponge
Step 6: Grasp a towel
Step 7: Dry the sink
Step 8: Move to the toilet
Step 9. Grasp a scrub brush
Step 10. Scrub the toilet bowl
Step 11. Place the scrub brush back in its place"""

CLEANING_OBJECTS = ["sink", "toilet", "sponge", "towel", "scrub brush"]

SANDWICH_PLAN = """Step 1. Grasp a plate
Step 2. Grasp the knife
Step 3. Grasp a piece of bread
Step 4. Move the knife to the bread and slice it
Step 5. Grasp another piece of bread
Step 6. Move the knife to the bread and slice it
Step 7. Grasp a lettuce
Step 8. Tear the lettuce and place it on the plate
Step 9. Grasp a tomato
Step 10. Slice the tomato and place it on the plate
Step 11. Move the two slices of bread to the plate"""

SANDWICH_OBJECTS = ["plate", "knife", "bread", "lettuce", "tomato", "sink"]

DOORKNOB_PLAN = """Step 1. Grasp the doorknob
Step 2. Move to the door
Step 3. Open the door"""

DOORKNOB_OBJECTS = ["door", "doorknob"]


@pytest.fixture
def bathroom_scene():
    return make_scene(
        width=4.5,
        height=3.75,
        objects=[
            ("sink", 1.0, 0.5),
            ("toilet", 3.5, 0.5),
            ("sponge", 1.2, 0.6),
            ("towel", 2.0, 3.0),
            ("scrub brush", 3.4, 0.8),
        ],
        scene_id="bathroom-fixture",
    )
