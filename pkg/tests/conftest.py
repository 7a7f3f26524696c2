from __future__ import annotations

import pytest

from homegraph.graph import Kind, Pose, Relation, RelationEdge, SceneGraph, Source


@pytest.fixture
def house() -> SceneGraph:
    """Two rooms, two tables, seeded the way a scenario would be."""
    g = SceneGraph()
    living = g.add_node(Kind.ROOM, "living room", Pose(3.0, 2.5), tick=0)
    cleaning = g.add_node(Kind.ROOM, "cleaning room", Pose(8.0, 2.5), tick=0)
    shelf = g.add_node(Kind.FURNITURE, "shelf", Pose(0.7, 4.3, 1.2), tick=0)
    table = g.add_node(Kind.FURNITURE, "cleaning table", Pose(9.1, 2.6, 0.8), tick=0)
    for furniture, room in ((shelf, living), (table, cleaning)):
        g.add_edge(RelationEdge(furniture.id, Relation.IN, room.id, 1.0,
                                Source.PRIOR, 0))
    g.add_node(Kind.ROBOT, "robot", Pose(1.0, 0.8), tick=0)
    g.add_node(Kind.HUMAN, "operator", Pose(1.0, 0.8), tick=0)
    return g
