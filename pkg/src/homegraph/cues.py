"""Interpreting verbal, written, and gesture cues into assertions.

The default interpreter is a deterministic grammar so runs are reproducible;
an external interpreter (e.g. an LLM adapter) can be plugged in through
:class:`InterpreterClient` and always falls back to the grammar on failure.
Speech audio and OCR are out of scope: cues arrive pre-transcribed.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Optional, Protocol, Union

from .config import GESTURE_CONE_DEG, SOURCE_CONFIDENCE
from .graph import (
    Kind,
    Relation,
    SceneGraph,
    SemanticAssertion,
    Source,
    normalize_label,
)
from .geometry import GeometricObservation

Vec3 = tuple[float, float, float]

# Subject emitted for an object-less pointing gesture; the executive binds it
# to the active task's object before applying.
TASK_OBJECT_PLACEHOLDER = "__task_object__"


class CueError(Exception):
    pass


class MalformedCueError(CueError):
    pass


# ── cue types ─────────────────────────────────────────────────────────────────


@dataclass(frozen=True)
class VerbalCue:
    text: str
    tick: int
    speaker: Optional[int] = None  # node id of the speaker, if known

    def __post_init__(self):
        if not self.text.strip():
            raise MalformedCueError("verbal cue text is empty")


@dataclass(frozen=True)
class WrittenCue:
    text: str
    seen_at: Vec3
    tick: int

    def __post_init__(self):
        if not self.text.strip():
            raise MalformedCueError("written cue text is empty")


@dataclass(frozen=True)
class GestureCue:
    origin: Vec3
    direction: Vec3
    tick: int
    utterance: Optional[str] = None

    def __post_init__(self):
        norm = math.sqrt(sum(c * c for c in self.direction))
        if abs(norm - 1.0) > 1e-6:
            raise MalformedCueError(
                f"gesture direction must be a unit vector, |d| = {norm:.8f}"
            )


Cue = Union[VerbalCue, WrittenCue, GestureCue, GeometricObservation]


def cue_to_json(cue: Cue) -> dict:
    if isinstance(cue, VerbalCue):
        return {"type": "verbal", "text": cue.text, "speaker": cue.speaker,
                "tick": cue.tick}
    if isinstance(cue, WrittenCue):
        return {"type": "written", "text": cue.text,
                "seen_at": list(cue.seen_at), "tick": cue.tick}
    if isinstance(cue, GestureCue):
        return {"type": "gesture", "origin": list(cue.origin),
                "direction": list(cue.direction), "utterance": cue.utterance,
                "tick": cue.tick}
    if isinstance(cue, GeometricObservation):
        return {"type": "geometric", **cue.to_json()}
    raise MalformedCueError(f"unknown cue object {cue!r}")


def cue_from_json(data: dict, tick: Optional[int] = None) -> Cue:
    """Decode a cue from its wire form; `tick` overrides the embedded tick
    (used when a scripted or injected cue is delivered)."""
    if not isinstance(data, dict):
        raise MalformedCueError("cue must be a JSON object")
    kind = data.get("type")
    t = tick if tick is not None else data.get("tick")
    if t is None:
        raise MalformedCueError("cue has no tick")
    try:
        if kind == "verbal":
            return VerbalCue(text=data["text"], tick=int(t),
                             speaker=data.get("speaker"))
        if kind == "written":
            seen_at = data.get("seen_at") or [0.0, 0.0, 0.0]
            if len(seen_at) == 2:
                seen_at = [*seen_at, 0.0]
            return WrittenCue(text=data["text"],
                              seen_at=tuple(float(v) for v in seen_at),
                              tick=int(t))
        if kind == "gesture":
            return GestureCue(
                origin=tuple(float(v) for v in data["origin"]),
                direction=tuple(float(v) for v in data["direction"]),
                tick=int(t),
                utterance=data.get("utterance"),
            )
        if kind == "geometric":
            return GeometricObservation.from_json({**data, "tick": t})
    except MalformedCueError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedCueError(f"bad {kind} cue: {exc}") from exc
    raise MalformedCueError(f"unknown cue type {kind!r}")


# ── decisions ─────────────────────────────────────────────────────────────────


@dataclass
class UpdateDecision:
    """What to do with an interpreted cue: update the graph, replan, both,
    or nothing. `rationale` is a human-readable trace of which rule fired."""

    update_graph: bool
    replan: bool
    assertions: list[SemanticAssertion] = field(default_factory=list)
    rationale: str = ""

    def to_json(self) -> dict:
        return {
            "update_graph": self.update_graph,
            "replan": self.replan,
            "assertions": [a.to_json() for a in self.assertions],
            "rationale": self.rationale,
        }


# ── statement grammar ─────────────────────────────────────────────────────────

_STATEMENT = re.compile(
    r"^\s*(.+?)\s+(?:is|are)\s+(on|in|at|near)\s+(.+?)[\s!?,]*$",
    re.IGNORECASE,
)

_SOURCE_OF = {Source.VERBAL: "verbal", Source.WRITTEN: "written"}


def interpret_statement(text: str, source: Source, tick: int) -> list[SemanticAssertion]:
    """Parse "[the] X is|are (on|in|at|near) [the] Y" sentences.

    Sentences split on '.' and ';'. Unparseable sentences yield nothing;
    matches carry the source's base confidence.
    """
    if source not in _SOURCE_OF:
        raise ValueError(f"statements come from verbal or written cues, not {source}")
    out = []
    for sentence in re.split(r"[.;]", text):
        m = _STATEMENT.match(sentence)
        if not m:
            continue
        subject = normalize_label(m.group(1))
        landmark = normalize_label(m.group(3))
        if not subject or not landmark:
            continue
        out.append(SemanticAssertion(
            subject_label=subject,
            relation=Relation(m.group(2).lower()),
            object_label=landmark,
            confidence=SOURCE_CONFIDENCE[source.value],
            source=source,
            asserted_at=tick,
        ))
    return out


def _utterance_subject(utterance: Optional[str]) -> Optional[str]:
    """Object named by a gesture's utterance: the statement subject when the
    utterance parses, otherwise the whole utterance as a bare noun."""
    if not utterance or not utterance.strip():
        return None
    m = _STATEMENT.match(re.split(r"[.;]", utterance)[0])
    if m:
        return normalize_label(m.group(1)) or None
    bare = normalize_label(re.sub(r"[.!?,;]", " ", utterance))
    return bare or None


def resolve_gesture(g: GestureCue, graph: SceneGraph) -> Optional[SemanticAssertion]:
    """Resolve a pointing gesture to the furniture it indicates.

    Candidates are furniture nodes; the smallest angular deviation from the
    pointing ray wins, within the cone half-angle. Ties fall to the nearer
    candidate, then the smaller id. Without an utterance naming an object,
    the assertion subject is a placeholder for the active task's object.
    """
    best = None
    for node in graph.nodes_of_kind(Kind.FURNITURE):
        if node.pose is None:
            continue
        to_node = tuple(p - o for p, o in zip(node.pose.position(), g.origin))
        dist = math.sqrt(sum(c * c for c in to_node))
        if dist == 0.0:
            continue
        cos_theta = sum(d * v for d, v in zip(g.direction, to_node)) / dist
        theta = math.degrees(math.acos(max(-1.0, min(1.0, cos_theta))))
        if theta > GESTURE_CONE_DEG:
            continue
        key = (theta, dist, node.id)
        if best is None or key < best[0]:
            best = (key, node)
    if best is None:
        return None
    subject = _utterance_subject(g.utterance) or TASK_OBJECT_PLACEHOLDER
    return SemanticAssertion(
        subject_label=subject,
        relation=Relation.AT,
        object_label=best[1].label,
        confidence=SOURCE_CONFIDENCE["gesture"],
        source=Source.GESTURE,
        asserted_at=g.tick,
    )


# ── next-step decision ────────────────────────────────────────────────────────


def decide_next_steps(assertions: list[SemanticAssertion], active_task,
                      graph: SceneGraph, tick: int) -> UpdateDecision:
    """Decide whether interpreted assertions warrant a graph update and/or a
    replan.

    Replanning is warranted when an assertion is about the active task's
    object and either no location is currently believed or the believed
    location differs from the asserted landmark. `active_task` only needs an
    `object_label` attribute (or may be None).
    """
    if not assertions:
        return UpdateDecision(False, False, [], "no assertions extracted")
    if active_task is None:
        return UpdateDecision(True, False, list(assertions),
                              f"{len(assertions)} assertion(s); no active task")
    from .config import BELIEF_THRESHOLD

    task_label = graph.canonical(active_task.object_label)
    chain = graph.locate(task_label, tick)
    believed: Optional[int] = None
    if chain is not None and chain.confidence >= BELIEF_THRESHOLD:
        believed = chain.furniture_id if chain.furniture_id is not None else chain.room_id
    for a in assertions:
        if graph.canonical(a.subject_label) != task_label:
            continue
        landmark = graph.ground_label(a.object_label, create=False).node_id
        if believed is None:
            return UpdateDecision(
                True, True, list(assertions),
                f"replan: {task_label!r} matches task object and no location "
                f"is believed yet; asserted landmark {a.object_label!r}",
            )
        if landmark is not None and landmark != believed:
            return UpdateDecision(
                True, True, list(assertions),
                f"replan: {task_label!r} matches task object and asserted "
                f"landmark {a.object_label!r} differs from believed node "
                f"{believed}",
            )
    return UpdateDecision(
        True, False, list(assertions),
        f"{len(assertions)} assertion(s); none change the believed location "
        f"of task object {task_label!r}",
    )


# ── pluggable external interpreter ────────────────────────────────────────────


@dataclass(frozen=True)
class InterpreterRequest:
    cue_text: str
    source: str                    # "verbal" | "written"
    tick: int
    task_summary: str
    landmark_labels: tuple[str, ...]

    def to_json(self) -> dict:
        return {
            "cue_text": self.cue_text,
            "source": self.source,
            "tick": self.tick,
            "task_summary": self.task_summary,
            "landmark_labels": list(self.landmark_labels),
        }


@dataclass
class InterpreterResponse:
    """Wire-level response: assertions as raw dicts so a remote interpreter
    cannot crash the pipeline with out-of-range values (they get clamped)."""

    assertions: list[dict]
    update_graph: bool = False
    replan: bool = False


class InterpreterClient(Protocol):
    timeout: float

    def interpret(self, request: InterpreterRequest,
                  timeout: float) -> InterpreterResponse: ...


class MockInterpreterClient:
    """Deterministic stand-in for an external interpreter: re-runs the
    statement grammar on the request text. Pure given the same request."""

    def __init__(self, timeout: float = 2.0):
        self.timeout = timeout

    def interpret(self, request: InterpreterRequest,
                  timeout: float) -> InterpreterResponse:
        assertions = interpret_statement(
            request.cue_text, Source(request.source), request.tick
        )
        return InterpreterResponse(
            assertions=[a.to_json() for a in assertions],
            update_graph=bool(assertions),
            replan=False,  # defers the replan call to the decision rule
        )


def grammar_decision(cue: Cue, graph: SceneGraph, active_task,
                     tick: int) -> UpdateDecision:
    """The built-in interpretation path for non-geometric cues."""
    if isinstance(cue, VerbalCue):
        assertions = interpret_statement(cue.text, Source.VERBAL, cue.tick)
        decision = decide_next_steps(assertions, active_task, graph, tick)
        decision.rationale = f"grammar(verbal): {decision.rationale}"
        return decision
    if isinstance(cue, WrittenCue):
        assertions = interpret_statement(cue.text, Source.WRITTEN, cue.tick)
        decision = decide_next_steps(assertions, active_task, graph, tick)
        decision.rationale = f"grammar(written): {decision.rationale}"
        return decision
    if isinstance(cue, GestureCue):
        assertion = resolve_gesture(cue, graph)
        if assertion is None:
            return UpdateDecision(False, False, [],
                                  "gesture: no furniture within the pointing cone")
        if assertion.subject_label == TASK_OBJECT_PLACEHOLDER:
            if active_task is None:
                return UpdateDecision(
                    False, False, [],
                    "gesture: placeholder subject but no active task to bind",
                )
            assertion = SemanticAssertion(
                subject_label=active_task.object_label,
                relation=assertion.relation,
                object_label=assertion.object_label,
                confidence=assertion.confidence,
                source=assertion.source,
                asserted_at=assertion.asserted_at,
            )
        decision = decide_next_steps([assertion], active_task, graph, tick)
        decision.rationale = f"grammar(gesture): {decision.rationale}"
        return decision
    raise MalformedCueError(
        f"geometric observations take the perception path, got {type(cue).__name__}"
    )


def _clamp01(value: float) -> float:
    return max(0.0, min(1.0, value))


def interpret_with_client(client: Optional[InterpreterClient], cue: Cue,
                          graph: SceneGraph, active_task,
                          tick: int) -> UpdateDecision:
    """Interpret a cue through the external client, falling back to the
    grammar path on timeout, error, or malformed response.

    Gesture cues always take the built-in cone resolver (pointing is not
    text). Confidences from the client are clamped into [0, 1] and the
    clamping is recorded in the rationale.
    """
    if client is None or not isinstance(cue, (VerbalCue, WrittenCue)):
        return grammar_decision(cue, graph, active_task, tick)

    source = Source.VERBAL if isinstance(cue, VerbalCue) else Source.WRITTEN
    landmarks = tuple(sorted(
        n.label for n in graph.nodes.values()
        if n.kind in (Kind.FURNITURE, Kind.ROOM)
    ))
    request = InterpreterRequest(
        cue_text=cue.text,
        source=source.value,
        tick=cue.tick,
        task_summary=(f"bring {active_task.object_label}" if active_task else "idle"),
        landmark_labels=landmarks,
    )
    try:
        response = client.interpret(request, getattr(client, "timeout", 2.0))
        assertions, notes = _map_response_assertions(response, source, cue.tick)
    except Exception as exc:  # timeout or any client fault: never block progress
        decision = grammar_decision(cue, graph, active_task, tick)
        decision.rationale = (
            f"fallback({type(exc).__name__}: {exc}); {decision.rationale}"
        )
        return decision

    decision = decide_next_steps(assertions, active_task, graph, tick)
    if response.replan and not decision.replan and decision.update_graph:
        decision.replan = True
        notes.append("client requested replan")
    prefix = "client"
    if notes:
        prefix += f" ({'; '.join(notes)})"
    decision.rationale = f"{prefix}: {decision.rationale}"
    return decision


def _map_response_assertions(
    response: InterpreterResponse, source: Source, tick: int
) -> tuple[list[SemanticAssertion], list[str]]:
    if not isinstance(response, InterpreterResponse):
        raise MalformedCueError("client returned a non-response object")
    assertions = []
    notes = []
    for raw in response.assertions:
        confidence = float(raw["confidence"])
        clamped = _clamp01(confidence)
        if clamped != confidence:
            notes.append(f"clamped confidence {confidence} -> {clamped}")
        assertions.append(SemanticAssertion(
            subject_label=raw["subject_label"],
            relation=Relation(raw["relation"]),
            object_label=raw["object_label"],
            confidence=clamped,
            source=Source(raw.get("source", source.value)),
            asserted_at=int(raw.get("asserted_at", tick)),
        ))
    return assertions, notes
