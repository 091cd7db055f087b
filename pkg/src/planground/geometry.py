"""2D primitives: axis-aligned rectangles, angles, segment clipping."""

from __future__ import annotations

import math
from dataclasses import dataclass

EPS = 1e-9

Point = tuple[float, float]


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle in meters."""

    x_min: float
    y_min: float
    x_max: float
    y_max: float

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    def is_valid(self) -> bool:
        return self.width > 0 and self.height > 0

    def contains(self, x: float, y: float) -> bool:
        """Closed containment (boundary included)."""
        return (
            self.x_min - EPS <= x <= self.x_max + EPS
            and self.y_min - EPS <= y <= self.y_max + EPS
        )

    def strictly_contains(self, x: float, y: float) -> bool:
        """Open containment (boundary excluded)."""
        return (
            self.x_min + EPS < x < self.x_max - EPS
            and self.y_min + EPS < y < self.y_max - EPS
        )

    def contains_rect(self, other: "Rect") -> bool:
        return (
            self.x_min - EPS <= other.x_min
            and self.y_min - EPS <= other.y_min
            and other.x_max <= self.x_max + EPS
            and other.y_max <= self.y_max + EPS
        )

    def to_dict(self) -> dict:
        return {
            "x_min": self.x_min,
            "y_min": self.y_min,
            "x_max": self.x_max,
            "y_max": self.y_max,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Rect":
        return cls(
            float(data["x_min"]),
            float(data["y_min"]),
            float(data["x_max"]),
            float(data["y_max"]),
        )


def wrap_angle(theta: float) -> float:
    """Wrap an angle into [0, 2*pi)."""
    wrapped = math.fmod(theta, 2 * math.pi)
    if wrapped < 0:
        wrapped += 2 * math.pi
    return 0.0 if abs(wrapped - 2 * math.pi) < EPS else wrapped


def angle_difference(a: float, b: float) -> float:
    """Smallest signed difference a - b, in (-pi, pi]."""
    d = math.fmod(a - b, 2 * math.pi)
    if d > math.pi:
        d -= 2 * math.pi
    elif d <= -math.pi:
        d += 2 * math.pi
    return d


def segment_crosses_rect_interior(p: Point, q: Point, rect: Rect) -> bool:
    """True if the open segment p->q passes through the rectangle's interior.

    Grazing an edge or touching a corner does not count: only a clipped span of
    positive length whose midpoint lies strictly inside the rectangle does.
    Uses Liang-Barsky clipping.
    """
    px, py = p
    qx, qy = q
    dx = qx - px
    dy = qy - py

    t0, t1 = 0.0, 1.0
    for delta, lo, hi, start in (
        (dx, rect.x_min, rect.x_max, px),
        (dy, rect.y_min, rect.y_max, py),
    ):
        if abs(delta) < EPS:
            if start < lo - EPS or start > hi + EPS:
                return False
            continue
        ta = (lo - start) / delta
        tb = (hi - start) / delta
        if ta > tb:
            ta, tb = tb, ta
        t0 = max(t0, ta)
        t1 = min(t1, tb)
        if t0 > t1:
            return False

    if t1 - t0 < EPS:
        return False
    tm = 0.5 * (t0 + t1)
    return rect.strictly_contains(px + tm * dx, py + tm * dy)
