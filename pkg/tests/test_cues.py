from __future__ import annotations

import math

import numpy as np
import pytest

from homegraph.config import GESTURE_CONE_DEG
from homegraph.cues import (
    GestureCue,
    InterpreterRequest,
    InterpreterResponse,
    MalformedCueError,
    MockInterpreterClient,
    TASK_OBJECT_PLACEHOLDER,
    VerbalCue,
    WrittenCue,
    cue_from_json,
    cue_to_json,
    decide_next_steps,
    grammar_decision,
    interpret_statement,
    interpret_with_client,
    resolve_gesture,
)
from homegraph.graph import Kind, Pose, Relation, SceneGraph, SemanticAssertion, Source
from homegraph.planner import Task


def make_task(label="apple"):
    return Task(id="task-1", object_label=label, issued_at=0)


# ── statement grammar ─────────────────────────────────────────────────────────


def test_verbal_statement_parses():
    out = interpret_statement("The apple is on the cleaning table.",
                              Source.VERBAL, 100)
    assert len(out) == 1
    a = out[0]
    assert (a.subject_label, a.relation, a.object_label) == (
        "apple", Relation.ON, "cleaning table")
    assert a.confidence == 0.8
    assert a.source == Source.VERBAL
    assert a.asserted_at == 100


def test_written_statement_parses_with_written_confidence():
    out = interpret_statement("orange is on the cleaning table",
                              Source.WRITTEN, 5)
    assert len(out) == 1
    assert out[0].confidence == 0.7
    assert out[0].source == Source.WRITTEN


def test_non_relational_text_yields_nothing():
    assert interpret_statement("Hello robot!", Source.VERBAL, 0) == []


@pytest.mark.parametrize("text,expected", [
    ("The keys are in the drawer.", [("keys", Relation.IN, "drawer")]),
    ("the cup is near the sink", [("cup", Relation.NEAR, "sink")]),
    ("The ball is at the sofa!", [("ball", Relation.AT, "sofa")]),
    ("The apple is on the shelf. The orange is in the basket.",
     [("apple", Relation.ON, "shelf"), ("orange", Relation.IN, "basket")]),
    ("thanks; the mug is on the desk", [("mug", Relation.ON, "desk")]),
    ("is on the table", []),
    ("the apple is under the table", []),  # unsupported relation word
])
def test_grammar_cases(text, expected):
    out = interpret_statement(text, Source.VERBAL, 0)
    assert [(a.subject_label, a.relation, a.object_label) for a in out] == expected


def test_grammar_is_deterministic():
    runs = [interpret_statement("The apple is on the shelf.", Source.VERBAL, 7)
            for _ in range(3)]
    assert runs[0] == runs[1] == runs[2]


# ── gesture resolution ────────────────────────────────────────────────────────


def _world_with_furniture(positions):
    g = SceneGraph()
    g.add_node(Kind.ROOM, "room", Pose(0, 0), tick=0)
    for i, (x, y, z) in enumerate(positions):
        g.add_node(Kind.FURNITURE, f"table {i}", Pose(x, y, z), tick=0)
    return g


def _unit(v):
    n = math.sqrt(sum(c * c for c in v))
    return tuple(c / n for c in v)


def test_gesture_hits_single_candidate():
    g = _world_with_furniture([(3.0, 0.0, 0.8)])
    cue = GestureCue(origin=(0.0, 0.0, 1.0),
                     direction=_unit((3.0, 0.0, -0.2)), tick=50)
    out = resolve_gesture(cue, g)
    assert out is not None
    assert out.object_label == "table 0"
    assert out.relation == Relation.AT
    assert out.subject_label == TASK_OBJECT_PLACEHOLDER
    assert out.confidence == 0.6


def test_gesture_picks_smaller_deviation():
    # two tables at roughly 5 and 12 degrees off the pointing ray
    g = _world_with_furniture([
        (4.0, 4.0 * math.tan(math.radians(12)), 1.0),
        (4.0, -4.0 * math.tan(math.radians(5)), 1.0),
    ])
    cue = GestureCue(origin=(0.0, 0.0, 1.0), direction=(1.0, 0.0, 0.0), tick=0)
    out = resolve_gesture(cue, g)
    assert out.object_label == "table 1"


def test_gesture_outside_cone_resolves_nothing():
    g = _world_with_furniture([(0.0, 5.0, 1.0), (0.0, -5.0, 1.0)])
    cue = GestureCue(origin=(0.0, 0.0, 1.0), direction=(1.0, 0.0, 0.0), tick=0)
    assert resolve_gesture(cue, g) is None


def test_gesture_utterance_names_the_object():
    g = _world_with_furniture([(2.0, 0.0, 1.0)])
    cue = GestureCue(origin=(0.0, 0.0, 1.0), direction=(1.0, 0.0, 0.0),
                     tick=3, utterance="the teddy bear")
    out = resolve_gesture(cue, g)
    assert out.subject_label == "teddy bear"


def test_gesture_unit_norm_enforced():
    with pytest.raises(MalformedCueError):
        GestureCue(origin=(0, 0, 0), direction=(1.0, 0.5, 0.0), tick=0)


def test_gesture_oracle_randomized():
    """resolve_gesture equals an exhaustive minimum-deviation search."""
    rng = np.random.RandomState(42)
    mismatches = 0
    for _ in range(300):
        n = rng.randint(2, 7)
        positions = [(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(0.3, 1.5))
                     for _ in range(n)]
        g = _world_with_furniture(positions)
        origin = (rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(0.5, 1.8))
        direction = _unit(tuple(rng.normal(size=3)))
        cue = GestureCue(origin=origin, direction=direction, tick=0)
        got = resolve_gesture(cue, g)

        best = None
        for node in g.nodes_of_kind(Kind.FURNITURE):
            v = tuple(p - o for p, o in zip(node.pose.position(), origin))
            dist = math.sqrt(sum(c * c for c in v))
            cos = sum(a * b for a, b in zip(direction, v)) / dist
            theta = math.degrees(math.acos(max(-1.0, min(1.0, cos))))
            if theta <= GESTURE_CONE_DEG:
                key = (theta, dist, node.id)
                if best is None or key < best[0]:
                    best = (key, node.label)
        if best is None:
            mismatches += got is not None
        else:
            mismatches += got is None or got.object_label != best[1]
    assert mismatches == 0


# ── decision rule ─────────────────────────────────────────────────────────────


def test_decision_relevant_assertion_triggers_replan(house):
    task = make_task("apple")
    a = SemanticAssertion("apple", Relation.ON, "cleaning table", 0.8,
                          Source.VERBAL, 10)
    decision = decide_next_steps([a], task, house, 10)
    assert decision.update_graph and decision.replan


def test_decision_irrelevant_assertion_updates_only(house):
    task = make_task("apple")
    a = SemanticAssertion("orange", Relation.ON, "cleaning table", 0.8,
                          Source.VERBAL, 10)
    decision = decide_next_steps([a], task, house, 10)
    assert decision.update_graph and not decision.replan


def test_decision_empty_input(house):
    decision = decide_next_steps([], make_task(), house, 0)
    assert not decision.update_graph and not decision.replan


def test_decision_same_believed_location_skips_replan(house):
    house.apply_assertion(SemanticAssertion(
        "apple", Relation.ON, "cleaning table", 0.8, Source.VERBAL, 0))
    a = SemanticAssertion("apple", Relation.ON, "cleaning table", 0.85,
                          Source.GEOMETRIC, 5)
    decision = decide_next_steps([a], make_task("apple"), house, 5)
    assert decision.update_graph and not decision.replan


def test_decision_synonym_subject_matches_task(house):
    house.add_synonyms({"apple": ["red fruit"]})
    a = SemanticAssertion("red fruit", Relation.ON, "cleaning table", 0.8,
                          Source.VERBAL, 10)
    decision = decide_next_steps([a], make_task("apple"), house, 10)
    assert decision.replan


def test_decision_soundness_randomized(house):
    """replan=true only ever fires when some assertion subject matches the
    task object."""
    rng = np.random.RandomState(7)
    labels = ["apple", "orange", "mug", "ball"]
    for _ in range(300):
        task = make_task(str(rng.choice(labels)))
        assertions = [
            SemanticAssertion(str(rng.choice(labels)), Relation.ON,
                              "cleaning table", float(rng.uniform(0.1, 1.0)),
                              Source.VERBAL, int(rng.randint(0, 100)))
            for _ in range(rng.randint(0, 4))
        ]
        decision = decide_next_steps(assertions, task, house, 100)
        if decision.replan:
            assert any(a.subject_label == task.object_label for a in assertions)
        if not assertions:
            assert not decision.update_graph


# ── cue wire format ───────────────────────────────────────────────────────────


def test_cue_json_roundtrip():
    cues = [
        VerbalCue("The apple is on the shelf.", 10, speaker=4),
        WrittenCue("orange is on the table", (1.0, 2.0, 0.5), 11),
        GestureCue((0.0, 0.0, 1.0), (1.0, 0.0, 0.0), 12, utterance="teddy"),
    ]
    for cue in cues:
        assert cue_from_json(cue_to_json(cue)) == cue


def test_cue_from_json_rejects_garbage():
    with pytest.raises(MalformedCueError):
        cue_from_json({"type": "interpretive dance", "tick": 0})
    with pytest.raises(MalformedCueError):
        cue_from_json({"type": "verbal", "text": "   ", "tick": 0})
    with pytest.raises(MalformedCueError):
        cue_from_json({"type": "gesture", "origin": [0, 0, 0],
                       "direction": [2.0, 0.0, 0.0], "tick": 0})


# ── pluggable client ──────────────────────────────────────────────────────────


class TimeoutClient:
    timeout = 0.1

    def interpret(self, request, timeout):
        raise TimeoutError("interpreter did not answer in time")


class OverconfidentClient:
    timeout = 1.0

    def interpret(self, request, timeout):
        return InterpreterResponse(
            assertions=[{
                "subject_label": "apple",
                "relation": "on",
                "object_label": "cleaning table",
                "confidence": 1.7,
            }],
            update_graph=True,
            replan=False,
        )


def test_mock_client_matches_grammar_path(house):
    cue = VerbalCue("The apple is on the cleaning table.", 10)
    task = make_task("apple")
    via_client = interpret_with_client(MockInterpreterClient(), cue, house,
                                       task, 10)
    direct = grammar_decision(cue, house, task, 10)
    assert via_client.assertions == direct.assertions
    assert (via_client.update_graph, via_client.replan) == (
        direct.update_graph, direct.replan)


def test_client_timeout_falls_back_to_grammar(house):
    cue = VerbalCue("The apple is on the cleaning table.", 10)
    decision = interpret_with_client(TimeoutClient(), cue, house,
                                     make_task("apple"), 10)
    assert decision.update_graph and decision.replan
    assert decision.rationale.startswith("fallback(TimeoutError")
    assert len(decision.assertions) == 1


def test_client_confidence_clamped(house):
    cue = VerbalCue("whatever the text says", 10)
    decision = interpret_with_client(OverconfidentClient(), cue, house,
                                     make_task("apple"), 10)
    assert decision.assertions[0].confidence == 1.0
    assert "clamped confidence 1.7 -> 1.0" in decision.rationale
    assert all(0.0 <= a.confidence <= 1.0 for a in decision.assertions)


def test_gesture_cue_binds_placeholder_to_task(house):
    # origin 1.0 m high so the ray to the table top stays inside the cone
    cue = GestureCue(origin=(8.0, 2.6, 1.0), direction=(1.0, 0.0, 0.0), tick=9)
    decision = grammar_decision(cue, house, make_task("teddy bear"), 9)
    assert decision.assertions[0].subject_label == "teddy bear"
    assert decision.assertions[0].object_label == "cleaning table"


def test_gesture_without_task_is_dropped(house):
    cue = GestureCue(origin=(8.0, 2.6, 1.0), direction=(1.0, 0.0, 0.0), tick=9)
    decision = grammar_decision(cue, house, None, 9)
    assert decision.assertions == [] and not decision.update_graph


def test_rationale_is_byte_deterministic(house):
    cue = VerbalCue("The apple is on the cleaning table.", 10)
    task = make_task("apple")
    r1 = grammar_decision(cue, house, task, 10).rationale
    r2 = grammar_decision(cue, house, task, 10).rationale
    assert r1 == r2


def test_request_wire_shape():
    req = InterpreterRequest("text", "verbal", 3, "bring apple", ("shelf",))
    doc = req.to_json()
    assert set(doc) == {"cue_text", "source", "tick", "task_summary",
                        "landmark_labels"}
