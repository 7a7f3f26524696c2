"""Cues to assertions: the statement grammar, pointing gestures, and the
update/replan decision.

The default interpreter is a deterministic grammar. An external interpreter
(an LLM adapter, say) can be plugged in behind InterpreterClient; it falls
back to the grammar whenever it times out or misbehaves.
"""

from homegraph import (
    GestureCue,
    Kind,
    Pose,
    SceneGraph,
    Source,
    Task,
    interpret_statement,
    interpret_with_client,
    resolve_gesture,
)
from homegraph.cues import MockInterpreterClient, VerbalCue, grammar_decision

# Statements: "[the] X is|are (on|in|at|near) [the] Y", split on '.'/';'.
for text in (
    "The apple is on the cleaning table.",
    "orange is on the cleaning table",
    "The keys are in the drawer; the mug is near the sink.",
    "Hello robot!",
):
    parsed = interpret_statement(text, Source.VERBAL, tick=40)
    print(f"{text!r}")
    for a in parsed:
        print(f"   -> ({a.subject_label}, {a.relation.value}, {a.object_label}, "
              f"{a.confidence})")
    if not parsed:
        print("   -> (no relational content)")

# Gestures resolve against furniture inside a 20-degree pointing cone.
g = SceneGraph()
g.add_node(Kind.ROOM, "living room", Pose(3, 2.5))
g.add_node(Kind.FURNITURE, "dining table", Pose(4.75, 1.2, 0.75))
g.add_node(Kind.FURNITURE, "sofa", Pose(3.5, 4.55, 0.45))

point = GestureCue(origin=(1.8, 1.2, 1.4),
                   direction=(0.9765749485507942, 0.0, -0.21517753103661563),
                   tick=12)
hit = resolve_gesture(point, g)
print("\npointing resolves to:", hit.object_label,
      "(subject is a task placeholder:", hit.subject_label + ")")

# The decision rule: update the graph whenever something was asserted;
# replan only when the claim is about the active task's object and moves it.
# grammar_decision binds the placeholder to the active task's object.
task = Task(id="task-1", object_label="teddy bear", issued_at=0)
decision = grammar_decision(point, g, task, 12)
print("decision :", {"update_graph": decision.update_graph,
                     "replan": decision.replan})
print("rationale:", decision.rationale)

# The pluggable client path: the bundled mock just echoes the grammar.
cue = VerbalCue("The teddy bear is on the dining table.", tick=15)
decision = interpret_with_client(MockInterpreterClient(), cue, g, task, 15)
print("\nvia client:", decision.rationale)
