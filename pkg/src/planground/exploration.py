"""Observation pose planning over the achievable lattice.

Four location-selection criteria: full traversal, seeded random subset,
single overall center point, and block-wise centers from k-means clustering
with an elbow rule on the within-cluster sum of squares. Each chosen location
is expanded into one pose per camera heading.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

import numpy as np

from .errors import StrategyError
from .geometry import Point, wrap_angle
from .scene import Scene, achievable_grid_points
from .seeding import derive_seed

CRITERIA = ("traversal", "random", "center", "blockwise")

DEFAULT_GRID_SIDE = 0.75
DEFAULT_UNIT_ANGLE = 2 * math.pi / 3
DEFAULT_MAX_CLUSTERS = 8
DEFAULT_ELBOW_THRESHOLD = 0.15

_KMEANS_TOL = 1e-9
_KMEANS_MAX_ITER = 100
_KMEANS_RESTARTS = 30


@dataclass(frozen=True)
class CollectionStrategy:
    """Where to stand (criterion over the lattice) and how far to rotate."""

    criterion: str = "blockwise"
    grid_side: float = DEFAULT_GRID_SIDE
    unit_angle: float = DEFAULT_UNIT_ANGLE
    ratio: float = 1.0
    max_clusters: int = DEFAULT_MAX_CLUSTERS
    elbow_threshold: float = DEFAULT_ELBOW_THRESHOLD

    def validate(self) -> None:
        if self.criterion not in CRITERIA:
            raise StrategyError(
                f"unknown criterion {self.criterion!r}; expected one of {CRITERIA}"
            )
        if self.grid_side <= 0:
            raise StrategyError("grid_side must be positive")
        if not 0 < self.ratio <= 1:
            raise StrategyError("ratio must lie in (0, 1]")
        if self.max_clusters < 1:
            raise StrategyError("max_clusters must be >= 1")
        if not 0 < self.elbow_threshold < 1:
            raise StrategyError("elbow_threshold must lie in (0, 1)")
        if self.unit_angle <= 0:
            raise StrategyError("unit_angle must be positive")
        turns = 2 * math.pi / self.unit_angle
        if abs(turns - round(turns)) > 1e-9 or round(turns) < 1:
            raise StrategyError("unit_angle must divide 2*pi into whole views")

    @property
    def views_per_location(self) -> int:
        return round(2 * math.pi / self.unit_angle)

    def to_dict(self) -> dict:
        return {
            "criterion": self.criterion,
            "grid": self.grid_side,
            "unit_angle_deg": round(math.degrees(self.unit_angle), 9),
            "ratio": self.ratio,
            "max_clusters": self.max_clusters,
            "elbow_threshold": self.elbow_threshold,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CollectionStrategy":
        strategy = cls(
            criterion=str(data.get("criterion", "blockwise")),
            grid_side=float(data.get("grid", DEFAULT_GRID_SIDE)),
            unit_angle=math.radians(
                float(data.get("unit_angle_deg", math.degrees(DEFAULT_UNIT_ANGLE)))
            ),
            ratio=float(data.get("ratio", 1.0)),
            max_clusters=int(data.get("max_clusters", DEFAULT_MAX_CLUSTERS)),
            elbow_threshold=float(data.get("elbow_threshold", DEFAULT_ELBOW_THRESHOLD)),
        )
        strategy.validate()
        return strategy


@dataclass(frozen=True)
class CameraPose:
    x: float
    y: float
    theta: float

    def to_dict(self) -> dict:
        return {"x": self.x, "y": self.y, "theta": self.theta}


@dataclass(frozen=True)
class Clustering:
    k: int
    centroids: tuple[Point, ...]
    assignments: tuple[int, ...]
    wcss: float


def _kmeans_pp_init(arr: np.ndarray, k: int, rng: random.Random) -> np.ndarray:
    n = len(arr)
    chosen = [rng.randrange(n)]
    d2 = ((arr - arr[chosen[0]]) ** 2).sum(axis=1)
    while len(chosen) < k:
        total = float(d2.sum())
        if total <= 0:
            # All remaining mass at distance zero: duplicate points.
            chosen.append(rng.randrange(n))
        else:
            r = rng.random() * total
            idx = int(np.searchsorted(np.cumsum(d2), r, side="right"))
            idx = min(idx, n - 1)
            chosen.append(idx)
        d2 = np.minimum(d2, ((arr - arr[chosen[-1]]) ** 2).sum(axis=1))
    return arr[chosen].astype(float).copy()


def _lloyd(arr: np.ndarray, centroids: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
    n = len(arr)
    k = len(centroids)
    for _ in range(_KMEANS_MAX_ITER):
        d2 = ((arr[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        assign = d2.argmin(axis=1)
        new = centroids.copy()
        taken: set[int] = set()
        for c in range(k):
            mask = assign == c
            if mask.any():
                new[c] = arr[mask].mean(axis=0)
            else:
                # Re-seed an empty cluster at the point farthest from its
                # current centroid (skipping points already used this round).
                dist_own = d2[np.arange(n), assign]
                order = np.argsort(-dist_own)
                pick = next(int(i) for i in order if int(i) not in taken)
                taken.add(pick)
                new[c] = arr[pick]
        movement = float(np.abs(new - centroids).max())
        centroids = new
        if movement < _KMEANS_TOL:
            break
    d2 = ((arr[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    assign = d2.argmin(axis=1)
    wcss = float(d2[np.arange(n), assign].sum())
    return centroids, assign, wcss


def kmeans_wcss(points, k: int, seed: int, restarts: int = _KMEANS_RESTARTS) -> Clustering:
    """Seeded k-means (k-means++ init, Lloyd iteration, best of restarts)."""
    pts = [(float(x), float(y)) for x, y in points]
    if not pts:
        raise StrategyError("kmeans needs at least one point")
    if not 1 <= k <= len(pts):
        raise StrategyError(f"k={k} out of range for {len(pts)} points")
    arr = np.asarray(pts, dtype=float)
    best: tuple[float, np.ndarray, np.ndarray] | None = None
    for run in range(max(1, restarts)):
        rng = random.Random(derive_seed(seed, "kmeans", k, run))
        centroids, assign, wcss = _lloyd(arr, _kmeans_pp_init(arr, k, rng))
        if best is None or wcss < best[0] - 1e-12:
            best = (wcss, centroids, assign)
    wcss, centroids, assign = best
    return Clustering(
        k=k,
        centroids=tuple((float(cx), float(cy)) for cx, cy in centroids),
        assignments=tuple(int(a) for a in assign),
        wcss=wcss,
    )


def select_k_elbow(wcss_curve, threshold: float) -> int:
    """Smallest k whose relative improvement to k+1 falls below threshold.

    A zero wcss short-circuits to its k; with no qualifying k the largest k
    on the curve is returned.
    """
    curve = [(int(k), float(w)) for k, w in wcss_curve]
    if not curve:
        raise StrategyError("empty wcss curve")
    for i, (k, w) in enumerate(curve):
        if k != i + 1:
            raise StrategyError("wcss curve must cover k = 1..K contiguously")
        if w < 0:
            raise StrategyError("wcss values must be non-negative")
    for i, (k, w) in enumerate(curve):
        if w <= 1e-12:
            return k
        if i + 1 < len(curve):
            drop = (w - curve[i + 1][1]) / w
            if drop < threshold:
                return k
    return curve[-1][0]


def _nearest_grid_point(grid: list[Point], target: Point) -> Point:
    """Snap to the closest lattice point; ties go to smaller x, then y."""
    tx, ty = target
    return min(grid, key=lambda p: ((p[0] - tx) ** 2 + (p[1] - ty) ** 2, p[0], p[1]))


def select_locations(scene: Scene, strategy: CollectionStrategy, seed: int) -> list[Point]:
    strategy.validate()
    grid = achievable_grid_points(scene, strategy.grid_side)
    if not grid:
        raise StrategyError(
            f"scene {scene.id} has no achievable grid points at side {strategy.grid_side}"
        )
    if strategy.criterion == "traversal":
        return list(grid)
    if strategy.criterion == "random":
        count = math.ceil(strategy.ratio * len(grid) - 1e-9)
        count = min(max(count, 1), len(grid))
        rng = random.Random(derive_seed(seed, "random-locations"))
        return rng.sample(grid, count)
    if strategy.criterion == "center":
        cx = sum(p[0] for p in grid) / len(grid)
        cy = sum(p[1] for p in grid) / len(grid)
        return [_nearest_grid_point(grid, (cx, cy))]
    # blockwise
    k_max = min(strategy.max_clusters, len(grid))
    clusterings = {
        k: kmeans_wcss(grid, k, derive_seed(seed, "blockwise", k))
        for k in range(1, k_max + 1)
    }
    curve = [(k, clusterings[k].wcss) for k in range(1, k_max + 1)]
    k_best = select_k_elbow(curve, strategy.elbow_threshold)
    locations: list[Point] = []
    for centroid in clusterings[k_best].centroids:
        snapped = _nearest_grid_point(grid, centroid)
        if snapped not in locations:
            locations.append(snapped)
    return locations


def plan_poses(scene: Scene, strategy: CollectionStrategy, seed: int) -> list[CameraPose]:
    """Chosen locations expanded into one pose per heading k*unit_angle."""
    locations = select_locations(scene, strategy, seed)
    views = strategy.views_per_location
    return [
        CameraPose(x=x, y=y, theta=wrap_angle(k * strategy.unit_angle))
        for x, y in locations
        for k in range(views)
    ]


def image_count(scene: Scene, strategy: CollectionStrategy, seed: int) -> int:
    return len(plan_poses(scene, strategy, seed))
