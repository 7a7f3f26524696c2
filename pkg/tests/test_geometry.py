from __future__ import annotations

import math

import numpy as np
import pytest

from homegraph.config import (
    ASSOCIATION_RADIUS_M,
    NEAR_RADIUS_M,
    SUPPORT_GAP_M,
)
from homegraph.geometry import (
    AABB,
    DegeneratePolygonError,
    Detection,
    GeometricObservation,
    Rect,
    RoomGeometry,
    SurfaceModel,
    associate_detection,
    containment_test,
    extract_relations,
    find_support,
    support_test,
)
from homegraph.graph import Kind, Pose, Relation, RelationEdge, SceneGraph, Source


def det(label, x, y, bottom_z, score=0.95, size=0.1):
    half = size / 2
    return Detection(
        label=label,
        centroid=(x, y, bottom_z + half),
        aabb=AABB((x - half, y - half, bottom_z), (x + half, y + half, bottom_z + size)),
        score=score,
    )


# ── support_test ──────────────────────────────────────────────────────────────


def test_support_exact_contact():
    surface = SurfaceModel(1, Rect(0, 0, 1, 1), 0.80)
    assert support_test(det("apple", 0.5, 0.5, 0.80), surface)


def test_support_gap_too_large():
    surface = SurfaceModel(1, Rect(0, 0, 1, 1), 0.80)
    assert not support_test(det("apple", 0.5, 0.5, 0.90), surface)


def test_support_centroid_outside_footprint():
    surface = SurfaceModel(1, Rect(0, 0, 1, 1), 0.80)
    assert not support_test(det("apple", 1.5, 0.5, 0.80), surface)


def test_support_randomized_against_bruteforce():
    rng = np.random.RandomState(11)
    mismatches = 0
    for _ in range(1000):
        surface = SurfaceModel(
            1,
            Rect(0.0, 0.0, float(rng.uniform(0.5, 2.0)), float(rng.uniform(0.5, 2.0))),
            float(rng.uniform(0.2, 1.2)),
        )
        d = det("thing", float(rng.uniform(-0.5, 2.5)),
                float(rng.uniform(-0.5, 2.5)),
                float(rng.uniform(0.0, 1.5)))
        # independent re-statement of the two-clause predicate
        expected = (
            surface.footprint.min_x <= d.centroid[0] <= surface.footprint.max_x
            and surface.footprint.min_y <= d.centroid[1] <= surface.footprint.max_y
            and abs(d.aabb.min[2] - surface.top_height) <= SUPPORT_GAP_M
        )
        mismatches += support_test(d, surface) != expected
    assert mismatches == 0


# ── containment_test ──────────────────────────────────────────────────────────

_L_SHAPE = [(0, 0), (4, 0), (4, 2), (2, 2), (2, 4), (0, 4)]


def _ray_cast(p, polygon):
    # classic even-odd crossing oracle, boundary handled separately
    x, y = p
    inside = False
    n = len(polygon)
    for i in range(n):
        x1, y1 = polygon[i]
        x2, y2 = polygon[(i + 1) % n]
        if _on_segment(p, (x1, y1), (x2, y2)):
            return True
        if (y1 > y) != (y2 > y):
            t = (y - y1) / (y2 - y1)
            if x < x1 + t * (x2 - x1):
                inside = not inside
    return inside


def _on_segment(p, a, b, eps=1e-12):
    (px, py), (ax, ay), (bx, by) = p, a, b
    cross = (bx - ax) * (py - ay) - (by - ay) * (px - ax)
    if abs(cross) > eps:
        return False
    return min(ax, bx) - eps <= px <= max(ax, bx) + eps and \
        min(ay, by) - eps <= py <= max(ay, by) + eps


def test_containment_center():
    assert containment_test((1.0, 1.0), _L_SHAPE)


def test_containment_boundary_counts_inside():
    assert containment_test((2.0, 0.0), _L_SHAPE)   # on an edge
    assert containment_test((4.0, 2.0), _L_SHAPE)   # on a vertex


def test_containment_outside():
    assert not containment_test((3.0, 3.0), _L_SHAPE)


def test_containment_degenerate_polygon():
    with pytest.raises(DegeneratePolygonError):
        containment_test((0.0, 0.0), [(0, 0), (1, 1)])


def test_containment_random_against_ray_cast():
    rng = np.random.RandomState(23)
    polygons = [
        _L_SHAPE,
        [(0, 0), (5, 0), (5, 5), (0, 5)],
        [(0, 0), (6, 1), (4, 5), (2, 4), (-1, 3)],
    ]
    mismatches = 0
    for _ in range(1000):
        polygon = polygons[rng.randint(len(polygons))]
        p = (float(rng.uniform(-2, 7)), float(rng.uniform(-2, 7)))
        mismatches += containment_test(p, polygon) != _ray_cast(p, polygon)
    assert mismatches == 0


# ── extract_relations ─────────────────────────────────────────────────────────


@pytest.fixture
def scene():
    g = SceneGraph()
    living = g.add_node(Kind.ROOM, "living room", Pose(3, 2.5), tick=0)
    table = g.add_node(Kind.FURNITURE, "cleaning table", Pose(1.0, 1.0, 0.8), tick=0)
    shelf = g.add_node(Kind.FURNITURE, "shelf", Pose(4.0, 4.0, 1.2), tick=0)
    g.add_edge(RelationEdge(table.id, Relation.IN, living.id, 1.0, Source.PRIOR, 0))
    g.add_edge(RelationEdge(shelf.id, Relation.IN, living.id, 1.0, Source.PRIOR, 0))
    surfaces = [
        SurfaceModel(table.id, Rect(0.5, 0.5, 1.5, 1.5), 0.8),
        SurfaceModel(shelf.id, Rect(3.5, 3.5, 4.5, 4.5), 1.2),
    ]
    rooms = [RoomGeometry(living.id, ((0, 0), (6, 0), (6, 5), (0, 5)))]
    return g, surfaces, rooms


def test_extract_on_relation(scene):
    g, surfaces, rooms = scene
    obs = GeometricObservation((det("apple", 1.0, 1.0, 0.8),), 10)
    out = extract_relations(obs, g, surfaces, rooms)
    assert [(a.subject_label, a.relation, a.object_label) for a in out] == [
        ("apple", Relation.ON, "cleaning table")]
    assert out[0].confidence == pytest.approx(0.95 * 0.9)
    assert out[0].source == Source.GEOMETRIC


def test_extract_falls_back_to_room(scene):
    g, surfaces, rooms = scene
    obs = GeometricObservation((det("balloon", 3.0, 2.0, 1.5),), 10)
    out = extract_relations(obs, g, surfaces, rooms)
    assert [(a.subject_label, a.relation, a.object_label) for a in out] == [
        ("balloon", Relation.IN, "living room")]


def test_extract_outside_everything_is_silent(scene):
    g, surfaces, rooms = scene
    obs = GeometricObservation((det("bird", 20.0, 20.0, 3.0),), 10)
    assert extract_relations(obs, g, surfaces, rooms) == []


def test_extract_near_pairs_mutual(scene):
    g, surfaces, rooms = scene
    obs = GeometricObservation(
        (det("apple", 0.8, 1.0, 0.8), det("orange", 1.3, 1.0, 0.8)), 10
    )
    out = extract_relations(obs, g, surfaces, rooms)
    near = [(a.subject_label, a.object_label) for a in out
            if a.relation == Relation.NEAR]
    assert ("apple", "orange") in near and ("orange", "apple") in near


def test_extract_at_most_one_placement_per_detection(scene):
    g, surfaces, rooms = scene
    obs = GeometricObservation(
        (det("apple", 1.0, 1.0, 0.8), det("orange", 1.2, 1.0, 0.8)), 10
    )
    out = extract_relations(obs, g, surfaces, rooms)
    for label in ("apple", "orange"):
        placements = [a for a in out if a.subject_label == label
                      and a.relation in (Relation.ON, Relation.IN)]
        assert len(placements) == 1


def test_extract_randomized_against_bruteforce(scene):
    """Placement assertions match a from-scratch evaluation of the support
    and containment predicates, including the smallest-gap tie-break."""
    g, surfaces, rooms = scene
    labels = {s.furniture_id: g.node(s.furniture_id).label for s in surfaces}
    room_labels = {r.room_id: g.node(r.room_id).label for r in rooms}
    rng = np.random.RandomState(37)
    mismatches = 0
    for _ in range(1000):
        d = det("thing", float(rng.uniform(-1, 7)), float(rng.uniform(-1, 6)),
                float(rng.uniform(0.0, 1.6)))
        obs = GeometricObservation((d,), 0)
        got = [(a.relation, a.object_label) for a in
               extract_relations(obs, g, surfaces, rooms)
               if a.relation in (Relation.ON, Relation.IN)]

        passing = []
        for s in surfaces:
            inside = (s.footprint.min_x <= d.centroid[0] <= s.footprint.max_x
                      and s.footprint.min_y <= d.centroid[1] <= s.footprint.max_y)
            gap = abs(d.aabb.min[2] - s.top_height)
            if inside and gap <= SUPPORT_GAP_M:
                passing.append((gap, s.furniture_id))
        if passing:
            expected = [(Relation.ON, labels[min(passing)[1]])]
        else:
            containing = [r.room_id for r in rooms
                          if _ray_cast((d.centroid[0], d.centroid[1]), list(r.polygon))]
            expected = ([(Relation.IN, room_labels[min(containing)])]
                        if containing else [])
        mismatches += got != expected
    assert mismatches == 0


def test_extract_smallest_gap_wins_between_stacked_surfaces():
    g = SceneGraph()
    room = g.add_node(Kind.ROOM, "room", Pose(0, 0), tick=0)
    low = g.add_node(Kind.FURNITURE, "low table", Pose(1, 1, 0.78), tick=0)
    high = g.add_node(Kind.FURNITURE, "high table", Pose(1, 1, 0.81), tick=0)
    for f in (low, high):
        g.add_edge(RelationEdge(f.id, Relation.IN, room.id, 1.0, Source.PRIOR, 0))
    surfaces = [
        SurfaceModel(low.id, Rect(0, 0, 2, 2), 0.78),
        SurfaceModel(high.id, Rect(0, 0, 2, 2), 0.81),
    ]
    d = det("apple", 1.0, 1.0, 0.80)
    assert find_support(d, surfaces).furniture_id == high.id  # gap 0.01 < 0.02


# ── associate_detection ───────────────────────────────────────────────────────


def test_associate_redetection_reuses_node(scene):
    g, _, _ = scene
    first = associate_detection(det("apple", 1.0, 1.0, 0.8), g, tick=1)
    second = associate_detection(det("apple", 1.1, 1.0, 0.8), g, tick=2)
    assert first == second
    assert g.node(first).pose.x == pytest.approx(1.1)
    assert g.node(first).last_updated == 2


def test_associate_far_detection_creates_new_node(scene):
    g, _, _ = scene
    first = associate_detection(det("cup", 1.0, 1.0, 0.8), g, tick=1)
    second = associate_detection(det("cup", 4.0, 1.0, 0.8), g, tick=2)
    assert first != second


def test_associate_adopts_poseless_provisional(scene):
    g, _, _ = scene
    provisional = g.ground_label("apple").node_id  # created by a cue, no pose
    assert g.node(provisional).pose is None
    node = associate_detection(det("apple", 1.0, 1.0, 0.8), g, tick=3)
    assert node == provisional
    assert g.node(node).pose is not None


def test_associate_jitter_never_duplicates(scene):
    g, _, _ = scene
    rng = np.random.RandomState(5)
    base = np.array([1.0, 1.0])
    ids = set()
    for _ in range(100):
        jitter = rng.uniform(-ASSOCIATION_RADIUS_M * 0.6,
                             ASSOCIATION_RADIUS_M * 0.6, size=2)
        # stay strictly inside the association radius of the base position
        while np.linalg.norm(jitter) >= ASSOCIATION_RADIUS_M * 0.9:
            jitter = rng.uniform(-ASSOCIATION_RADIUS_M * 0.6,
                                 ASSOCIATION_RADIUS_M * 0.6, size=2)
        x, y = base + jitter
        ids.add(associate_detection(det("apple", float(x), float(y), 0.8), g))
        # keep the node anchored so drift cannot walk it away
        g.set_node_pose(next(iter(ids)), Pose(1.0, 1.0, 0.85), g.tick)
    assert len(ids) == 1


def test_near_radius_constant():
    assert NEAR_RADIUS_M == 1.0
