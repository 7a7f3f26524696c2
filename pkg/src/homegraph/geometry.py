"""Turning simulated detections into semantic relations.

Rule-based stand-in for a point-cloud scene-graph pipeline: detections are
matched to support surfaces and room polygons, yielding on/in/near assertions
plus data association back onto existing graph nodes. Axis-aligned geometry
only; rotated furniture is out of scope.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from shapely.geometry import Point, Polygon

from .config import (
    ASSOCIATION_RADIUS_M,
    NEAR_RADIUS_M,
    SOURCE_CONFIDENCE,
    SUPPORT_GAP_M,
)
from .graph import Kind, Pose, Relation, SceneGraph, SemanticAssertion, Source

Vec3 = tuple[float, float, float]


class GeometryError(Exception):
    pass


class DegeneratePolygonError(GeometryError):
    pass


@dataclass(frozen=True)
class AABB:
    min: Vec3
    max: Vec3

    def __post_init__(self):
        if any(lo > hi for lo, hi in zip(self.min, self.max)):
            raise ValueError(f"aabb min {self.min} exceeds max {self.max}")

    def contains(self, p: Vec3) -> bool:
        return all(lo <= v <= hi for lo, v, hi in zip(self.min, p, self.max))

    def to_json(self) -> dict:
        return {"min": list(self.min), "max": list(self.max)}

    @classmethod
    def from_json(cls, data: dict) -> "AABB":
        return cls(tuple(float(v) for v in data["min"]),
                   tuple(float(v) for v in data["max"]))


@dataclass(frozen=True)
class Detection:
    label: str
    centroid: Vec3
    aabb: AABB
    score: float

    def __post_init__(self):
        if not self.aabb.contains(self.centroid):
            raise ValueError(f"centroid {self.centroid} outside aabb {self.aabb}")
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"detection score {self.score} outside [0, 1]")

    def to_json(self) -> dict:
        return {
            "label": self.label,
            "centroid": list(self.centroid),
            "aabb": self.aabb.to_json(),
            "score": self.score,
        }

    @classmethod
    def from_json(cls, data: dict) -> "Detection":
        return cls(
            label=data["label"],
            centroid=tuple(float(v) for v in data["centroid"]),
            aabb=AABB.from_json(data["aabb"]),
            score=float(data["score"]),
        )


@dataclass(frozen=True)
class GeometricObservation:
    """A batch of detections from one perception pass."""

    detections: tuple[Detection, ...]
    tick: int

    def to_json(self) -> dict:
        return {"detections": [d.to_json() for d in self.detections],
                "tick": self.tick}

    @classmethod
    def from_json(cls, data: dict) -> "GeometricObservation":
        return cls(tuple(Detection.from_json(d) for d in data["detections"]),
                   int(data["tick"]))


@dataclass(frozen=True)
class Rect:
    """Axis-aligned 2D rectangle, used for furniture footprints."""

    min_x: float
    min_y: float
    max_x: float
    max_y: float

    def __post_init__(self):
        if self.min_x >= self.max_x or self.min_y >= self.max_y:
            raise ValueError("footprint must have positive area")

    def contains(self, x: float, y: float) -> bool:
        return self.min_x <= x <= self.max_x and self.min_y <= y <= self.max_y

    def center(self) -> tuple[float, float]:
        return ((self.min_x + self.max_x) / 2.0, (self.min_y + self.max_y) / 2.0)


@dataclass(frozen=True)
class SurfaceModel:
    """Supporting surface of one furniture node."""

    furniture_id: int
    footprint: Rect
    top_height: float

    def __post_init__(self):
        if self.top_height < 0:
            raise ValueError("top_height must be non-negative")


@dataclass(frozen=True)
class RoomGeometry:
    room_id: int
    polygon: tuple[tuple[float, float], ...]


def support_test(d: Detection, s: SurfaceModel) -> bool:
    """True iff the detection rests on the surface: horizontal centroid inside
    the footprint and the box bottom within the support gap of the top."""
    if not s.footprint.contains(d.centroid[0], d.centroid[1]):
        return False
    return abs(d.aabb.min[2] - s.top_height) <= SUPPORT_GAP_M


def containment_test(p: tuple[float, float], polygon) -> bool:
    """Point-in-polygon with the boundary counting as inside."""
    if len(polygon) < 3:
        raise DegeneratePolygonError(f"polygon needs >= 3 vertices, got {len(polygon)}")
    return Polygon(polygon).covers(Point(p[0], p[1]))


def _support_gap(d: Detection, s: SurfaceModel) -> float:
    return abs(d.aabb.min[2] - s.top_height)


def find_support(d: Detection, surfaces: list[SurfaceModel]) -> Optional[SurfaceModel]:
    """The surface the detection rests on: smallest bottom-to-top gap wins,
    ties by furniture id."""
    passing = [s for s in surfaces if support_test(d, s)]
    if not passing:
        return None
    return min(passing, key=lambda s: (_support_gap(d, s), s.furniture_id))


def find_room(p: tuple[float, float], rooms: list[RoomGeometry]) -> Optional[RoomGeometry]:
    containing = [r for r in rooms if containment_test(p, r.polygon)]
    if not containing:
        return None
    return min(containing, key=lambda r: r.room_id)


def extract_relations(
    obs: GeometricObservation,
    graph: SceneGraph,
    surfaces: list[SurfaceModel],
    rooms: list[RoomGeometry],
) -> list[SemanticAssertion]:
    """Convert one observation into on/in/near assertions.

    Each detection yields at most one placement assertion: "on" its support
    surface when one passes the support test, otherwise "in" its containing
    room. Pairs of detections resting on the same surface within the near
    radius additionally yield mutual "near" assertions.
    """
    base = SOURCE_CONFIDENCE["geometric"]
    out: list[SemanticAssertion] = []
    supports: list[Optional[SurfaceModel]] = []
    for d in obs.detections:
        support = find_support(d, surfaces)
        supports.append(support)
        if support is not None:
            landmark = graph.node(support.furniture_id).label
            relation = Relation.ON
        else:
            room = find_room((d.centroid[0], d.centroid[1]), rooms)
            if room is None:
                continue
            landmark = graph.node(room.room_id).label
            relation = Relation.IN
        out.append(SemanticAssertion(
            subject_label=d.label,
            relation=relation,
            object_label=landmark,
            confidence=d.score * base,
            source=Source.GEOMETRIC,
            asserted_at=obs.tick,
        ))
    for i, di in enumerate(obs.detections):
        if supports[i] is None:
            continue
        for j, dj in enumerate(obs.detections):
            if i == j or supports[j] is None:
                continue
            if supports[i].furniture_id != supports[j].furniture_id:
                continue
            if graph.canonical(di.label) == graph.canonical(dj.label):
                continue  # label-level assertions cannot tell twins apart
            if _dist3(di.centroid, dj.centroid) <= NEAR_RADIUS_M:
                out.append(SemanticAssertion(
                    subject_label=di.label,
                    relation=Relation.NEAR,
                    object_label=dj.label,
                    confidence=di.score * base,
                    source=Source.GEOMETRIC,
                    asserted_at=obs.tick,
                ))
    return out


def associate_detection(d: Detection, graph: SceneGraph,
                        tick: Optional[int] = None) -> int:
    """Match a detection to an existing object node or create a new one.

    Same canonical label within the association radius reuses the node; a
    node known only from cues (no pose yet) adopts the first sighting of its
    label. The matched node's pose is refreshed to the detection centroid.
    """
    if tick is None:
        tick = graph.tick
    canon = graph.canonical(d.label)
    same_label = [n for n in graph.nodes_of_kind(Kind.OBJECT) if n.label == canon]
    posed = [
        (n, _dist3(n.pose.position(), d.centroid))
        for n in same_label if n.pose is not None
    ]
    in_range = [(n, dist) for n, dist in posed if dist <= ASSOCIATION_RADIUS_M]
    if in_range:
        node = min(in_range, key=lambda pair: (pair[1], pair[0].id))[0]
    else:
        poseless = [n for n in same_label if n.pose is None]
        if poseless:
            node = min(poseless, key=lambda n: n.id)
        else:
            node = graph.add_node(Kind.OBJECT, canon, None, tick=tick)
    graph.set_node_pose(node.id, Pose(*d.centroid), tick)
    return node.id


def _dist3(a: Vec3, b: Vec3) -> float:
    return math.dist(a, b)
