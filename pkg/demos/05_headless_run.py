"""A full headless run of the bundled verbal scenario, narrated from the log.

The robot is told to fetch an apple. Its prior says the shelf is the place
to look; en route, a person mentions the apple is on the cleaning table, the
plan revision bumps, and the run ends with a handover to the operator.
"""

from homegraph import Executive, scenario_path
from homegraph.sim import load_scenario_file

scenario = load_scenario_file(scenario_path("verbal_apple"))
executive = Executive(scenario)
report = executive.run()

interesting = {"task_issued", "plan_revised", "cue_delivered", "query_asked",
               "task_succeeded", "task_failed"}
for ev in executive.log.entries:
    kind = ev["type"]
    if kind == "task_issued":
        print(f"[{ev['tick']:>4}] command: {ev['text']!r}")
    elif kind == "plan_revised":
        print(f"[{ev['tick']:>4}] plan rev {ev['revision']} "
              f"-> first stop {ev['first_target_label']!r}")
    elif kind == "cue_delivered":
        cue = ev["cue"]
        detail = cue.get("text") or "(gesture)"
        print(f"[{ev['tick']:>4}] {cue['type']} cue: {detail!r}")
    elif kind == "query_asked":
        print(f"[{ev['tick']:>4}] robot asks human node {ev['human']}")
    elif kind == "action_completed" and ev["action"]["type"] in ("pick", "handover"):
        print(f"[{ev['tick']:>4}] {ev['action']['type']} "
              f"{'ok' if ev['ok'] else 'failed'}")
    elif kind in ("task_succeeded", "task_failed"):
        print(f"[{ev['tick']:>4}] {kind}")

print("\nreport:", report.to_json())

# Where does the robot believe the apple ended up? In its own hand no more;
# the last placement before delivery was the cleaning table, then held_by.
apple = executive.graph.ground_label("apple").node_id
history = executive.graph.placement_edges(apple)
print("belief history for the apple:")
for edge in history:
    target = executive.graph.node(edge.object).label
    print(f"  t={edge.asserted_at:>4} {edge.relation.value:<8} {target:<16} "
          f"({edge.source.value}, c={edge.confidence:.3f})")
