"""Scene graph basics: assertions, conflict resolution, decay, snapshots.

The graph never deletes a claim. Every placement assertion lands in history
and the single active placement is recomputed from scratch each time, ranked
by age-decayed confidence with deterministic tie-breaks.
"""

from homegraph import (
    Kind,
    Pose,
    Relation,
    RelationEdge,
    SceneGraph,
    SemanticAssertion,
    Source,
    effective_confidence,
)

g = SceneGraph()

# Seed the static map: rooms and furniture come from the floor plan, so they
# are trusted (confidence 1.0) and never compete with observations.
living = g.add_node(Kind.ROOM, "living room", Pose(3.0, 2.5))
cleaning = g.add_node(Kind.ROOM, "cleaning room", Pose(8.0, 2.5))
shelf = g.add_node(Kind.FURNITURE, "shelf", Pose(0.7, 4.3, 1.2))
table = g.add_node(Kind.FURNITURE, "cleaning table", Pose(9.1, 2.6, 0.8))
g.add_edge(RelationEdge(shelf.id, Relation.IN, living.id, 1.0, Source.PRIOR, 0))
g.add_edge(RelationEdge(table.id, Relation.IN, cleaning.id, 1.0, Source.PRIOR, 0))

# A geometric observation at tick 0: the robot saw the apple on the shelf.
g.apply_assertion(SemanticAssertion(
    "apple", Relation.ON, "shelf", 0.9, Source.GEOMETRIC, 0))

apple = g.ground_label("apple").node_id
print("tick 0   :", g.node(g.resolve_placement(apple, 0).object).label)

# Twenty simulated minutes later someone says it moved. The old observation
# has decayed (half-life 6000 ticks), so the fresh verbal claim wins.
g.apply_assertion(SemanticAssertion(
    "apple", Relation.ON, "cleaning table", 0.8, Source.VERBAL, 12000))

active = g.resolve_placement(apple, 12000)
print("tick 12k :", g.node(active.object).label)
for edge in g.placement_edges(apple):
    print(f"  history: on {g.node(edge.object).label:<15} "
          f"c={edge.confidence} c_eff={effective_confidence(edge, 12000):.3f} "
          f"source={edge.source.value}")

# locate() follows the chain object -> furniture -> room.
chain = g.locate("the apple", 12000)
print("located  :", g.node(chain.object_id).label,
      "on", g.node(chain.furniture_id).label,
      "in", g.node(chain.room_id).label,
      f"(belief {chain.confidence:.2f})")

# Snapshots are plain JSON and restore to an observationally equal graph.
blob = g.snapshot()
restored = SceneGraph.restore(blob)
assert restored.snapshot(now=g.tick) == blob
print("snapshot :", len(blob), "bytes, round-trips exactly")
