"""Planning: prior-driven search, belief fast path, and replanning.

Without a believed location the plan visits prior-ranked furniture; a strong
belief (effective confidence >= 0.5) collapses it to direct retrieval. A
relevant graph change mid-run bumps the plan revision.
"""

from homegraph import (
    Kind,
    Pose,
    PriorTable,
    Relation,
    RelationEdge,
    SceneGraph,
    SemanticAssertion,
    Source,
    candidate_locations,
    is_relevant,
    parse_command,
    plan,
    replan,
)

g = SceneGraph()
living = g.add_node(Kind.ROOM, "living room", Pose(3.0, 2.5))
cleaning = g.add_node(Kind.ROOM, "cleaning room", Pose(8.0, 2.5))
for label, x, y, z, room in (
    ("shelf", 0.7, 4.3, 1.2, living),
    ("sofa", 3.5, 4.55, 0.45, living),
    ("dining table", 4.75, 1.2, 0.75, living),
    ("cleaning table", 9.1, 2.6, 0.8, cleaning),
):
    node = g.add_node(Kind.FURNITURE, label, Pose(x, y, z))
    g.add_edge(RelationEdge(node.id, Relation.IN, room.id, 1.0, Source.PRIOR, 0))
g.add_node(Kind.ROBOT, "robot", Pose(1.0, 0.8))
g.add_node(Kind.HUMAN, "operator", Pose(1.0, 0.8))

priors = PriorTable({"apple": [("shelf", 0.7), ("dining table", 0.4)]})

task = parse_command("bring an apple")
print("command ->", task.object_label)

# No belief yet: candidates follow the prior table, then everything else.
for node_id, score in candidate_locations(task, g, priors, now=0):
    print(f"  candidate {g.node(node_id).label:<15} score {score}")

p0 = plan(task, g, priors, now=0)
print("plan rev 0:", " -> ".join(type(a).__name__ for a in p0.actions))

# A verbal cue lands: the apple is actually on the cleaning table.
delta = g.apply_assertion(SemanticAssertion(
    "apple", Relation.ON, "cleaning table", 0.8, Source.VERBAL, 40))
print("delta relevant to task:", is_relevant(delta, task))

p1 = replan(task, g, priors, p0, now=40)
first_nav = next(a for a in p1.actions if type(a).__name__ == "Navigate")
print("plan rev", p1.revision, "first target:", g.node(first_nav.target).label)
print("plan rev 1:", " -> ".join(type(a).__name__ for a in p1.actions))

# Once the pick has completed, replanning reduces to delivery.
p1.cursor = next(i for i, a in enumerate(p1.actions)
                 if type(a).__name__ == "Pick") + 1
p2 = replan(task, g, priors, p1, now=300)
print("plan rev", p2.revision, "while holding:",
      " -> ".join(type(a).__name__ for a in p2.actions))
