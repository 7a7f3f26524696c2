"""Fetch-task planning over the scene graph.

Plans are prior-driven searches until the graph believes a location strongly
enough, at which point the plan collapses to direct retrieval. Replanning is
a fresh plan with a bumped revision; a completed pick is never planned again.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Union

from .config import BELIEF_THRESHOLD, FALLBACK_PRIOR_SCORE, QUERY_ROUTE_RADIUS_M
from .graph import GraphDelta, Kind, Relation, SceneGraph, normalize_label

OPERATOR_LABEL = "operator"


class PlannerError(Exception):
    pass


class UnparseableCommandError(PlannerError):
    def __init__(self, text: str):
        super().__init__(f"cannot parse command: {text!r}")
        self.text = text


class NoCandidatesError(PlannerError):
    pass


class TaskStatus(str, Enum):
    ACTIVE = "active"
    SUCCEEDED = "succeeded"
    FAILED = "failed"
    CANCELLED = "cancelled"


@dataclass
class Task:
    """One fetch command. `destination` None means hand over to the operator;
    otherwise it names the drop-off node."""

    id: str
    object_label: str
    issued_at: int
    status: TaskStatus = TaskStatus.ACTIVE
    destination: Optional[int] = None
    hint: Optional[str] = None  # "from the Y" part of the command, if any

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "object_label": self.object_label,
            "issued_at": self.issued_at,
            "status": self.status.value,
            "destination": self.destination,
            "hint": self.hint,
        }


# ── actions ───────────────────────────────────────────────────────────────────


@dataclass(frozen=True)
class Navigate:
    target: int


@dataclass(frozen=True)
class Perceive:
    pass


@dataclass(frozen=True)
class QueryHuman:
    human: int


@dataclass(frozen=True)
class Pick:
    label: str


@dataclass(frozen=True)
class Handover:
    target: int


@dataclass(frozen=True)
class Place:
    target: int


Action = Union[Navigate, Perceive, QueryHuman, Pick, Handover, Place]

_ACTION_TYPES = {
    "navigate": Navigate,
    "perceive": Perceive,
    "query_human": QueryHuman,
    "pick": Pick,
    "handover": Handover,
    "place": Place,
}


def action_to_json(action: Action) -> dict:
    if isinstance(action, Navigate):
        return {"type": "navigate", "target": action.target}
    if isinstance(action, Perceive):
        return {"type": "perceive"}
    if isinstance(action, QueryHuman):
        return {"type": "query_human", "human": action.human}
    if isinstance(action, Pick):
        return {"type": "pick", "label": action.label}
    if isinstance(action, Handover):
        return {"type": "handover", "target": action.target}
    if isinstance(action, Place):
        return {"type": "place", "target": action.target}
    raise ValueError(f"unknown action {action!r}")


def action_from_json(data: dict) -> Action:
    kind = data.get("type")
    if kind == "navigate":
        return Navigate(int(data["target"]))
    if kind == "perceive":
        return Perceive()
    if kind == "query_human":
        return QueryHuman(int(data["human"]))
    if kind == "pick":
        return Pick(data["label"])
    if kind == "handover":
        return Handover(int(data["target"]))
    if kind == "place":
        return Place(int(data["target"]))
    raise ValueError(f"unknown action type {kind!r}")


@dataclass
class Plan:
    task_id: str
    actions: list[Action]
    cursor: int = 0
    revision: int = 0
    created_at: int = 0
    believed_target: Optional[int] = None  # furniture node the plan trusts

    def current_action(self) -> Optional[Action]:
        if self.cursor < len(self.actions):
            return self.actions[self.cursor]
        return None

    def advance(self) -> None:
        if self.cursor < len(self.actions):
            self.cursor += 1

    def exhausted(self) -> bool:
        return self.cursor >= len(self.actions)

    def pick_completed(self) -> bool:
        return any(isinstance(a, Pick) for a in self.actions[: self.cursor])

    def to_json(self) -> dict:
        return {
            "task_id": self.task_id,
            "actions": [action_to_json(a) for a in self.actions],
            "cursor": self.cursor,
            "revision": self.revision,
            "created_at": self.created_at,
            "believed_target": self.believed_target,
        }


# ── prior table ───────────────────────────────────────────────────────────────


class PriorTable:
    """Commonsense object -> furniture rankings, strictly descending scores."""

    def __init__(self, entries: Optional[dict[str, list[tuple[str, float]]]] = None):
        self._entries: dict[str, list[tuple[str, float]]] = {}
        for label, ranked in (entries or {}).items():
            self.set(label, ranked)

    def set(self, label: str, ranked: list[tuple[str, float]]) -> None:
        canon = normalize_label(label)
        scores = [s for _, s in ranked]
        if any(not 0.0 <= s <= 1.0 for s in scores):
            raise ValueError(f"prior scores for {canon!r} outside [0, 1]")
        if any(a <= b for a, b in zip(scores, scores[1:])):
            raise ValueError(f"prior scores for {canon!r} must strictly descend")
        self._entries[canon] = [(normalize_label(f), s) for f, s in ranked]

    def get(self, label: str) -> list[tuple[str, float]]:
        return list(self._entries.get(normalize_label(label), []))

    def labels(self) -> list[str]:
        return sorted(self._entries)

    @classmethod
    def from_json(cls, data: dict) -> "PriorTable":
        return cls({k: [(f, float(s)) for f, s in v] for k, v in data.items()})

    def to_json(self) -> dict:
        return {k: [[f, s] for f, s in v] for k, v in self._entries.items()}


# ── command parsing ───────────────────────────────────────────────────────────

_COMMAND = re.compile(
    r"^\s*(?:please\s+)?(?:bring|fetch|get)\s+(?:me\s+)?(.+?)"
    r"(?:\s+from\s+(.+?))?[\s.!?]*$",
    re.IGNORECASE,
)


def parse_command(text: str, tick: int = 0, task_id: str = "task-1") -> Task:
    """Parse "bring|fetch|get [me] [a|an|the] X [from the Y]"."""
    m = _COMMAND.match(text)
    if not m:
        raise UnparseableCommandError(text)
    object_label = normalize_label(m.group(1))
    if not object_label:
        raise UnparseableCommandError(text)
    hint = normalize_label(m.group(2)) if m.group(2) else None
    return Task(id=task_id, object_label=object_label, issued_at=tick, hint=hint)


# ── candidate ranking ─────────────────────────────────────────────────────────


def _furniture_in_room(graph: SceneGraph, room_id: int) -> list[int]:
    out = []
    for e in graph.edges:
        if (e.relation == Relation.IN and e.object == room_id
                and graph.nodes[e.subject].kind == Kind.FURNITURE):
            out.append(e.subject)
    return sorted(set(out))


def _expand_room(graph: SceneGraph, room_id: int, score: float,
                 prior_order: list[str]) -> list[tuple[int, float]]:
    # Furniture already ranked by a prior keeps that relative order; the rest
    # follows by id.
    members = _furniture_in_room(graph, room_id)
    rank = {label: i for i, label in enumerate(prior_order)}
    members.sort(key=lambda fid: (rank.get(graph.nodes[fid].label, len(rank)), fid))
    return [(fid, score) for fid in members]


def candidate_locations(task: Task, graph: SceneGraph, priors: PriorTable,
                        now: int) -> list[tuple[int, float]]:
    """Ordered furniture candidates for finding the task object.

    A strong belief short-circuits everything. Otherwise: the command's
    source hint first (rooms expand to their furniture), then the prior
    table, then all remaining furniture at the fallback score.
    """
    chain = graph.locate(task.object_label, now)
    prior_entries = priors.get(task.object_label)
    prior_order = [label for label, _ in prior_entries]

    if chain is not None and chain.confidence >= BELIEF_THRESHOLD:
        if chain.furniture_id is not None:
            return [(chain.furniture_id, chain.confidence)]

    out: list[tuple[int, float]] = []
    seen: set[int] = set()

    def push(fid: int, score: float) -> None:
        if fid not in seen:
            seen.add(fid)
            out.append((fid, score))

    # Room-level belief (e.g. only an in-room edge): search that room first.
    if (chain is not None and chain.confidence >= BELIEF_THRESHOLD
            and chain.room_id is not None):
        for fid, score in _expand_room(graph, chain.room_id, chain.confidence,
                                       prior_order):
            push(fid, score)

    if task.hint:
        hinted = graph.ground_label(task.hint, create=False).node_id
        if hinted is not None:
            node = graph.nodes[hinted]
            if node.kind == Kind.FURNITURE:
                push(hinted, 1.0)
            elif node.kind == Kind.ROOM:
                for fid, score in _expand_room(graph, hinted, 1.0, prior_order):
                    push(fid, score)

    for label, score in prior_entries:
        grounded = graph.ground_label(label, create=False).node_id
        if grounded is not None and graph.nodes[grounded].kind == Kind.FURNITURE:
            push(grounded, score)

    for node in sorted(graph.nodes_of_kind(Kind.FURNITURE), key=lambda n: n.id):
        push(node.id, FALLBACK_PRIOR_SCORE)

    return out


# ── planning ──────────────────────────────────────────────────────────────────


def _operator_node(graph: SceneGraph) -> Optional[int]:
    grounded = graph.ground_label(OPERATOR_LABEL, create=False)
    return grounded.node_id


def _point_segment_distance(p, a, b) -> float:
    """2D distance from point p to segment a-b."""
    px, py = p
    ax, ay = a
    bx, by = b
    dx, dy = bx - ax, by - ay
    seg_len_sq = dx * dx + dy * dy
    if seg_len_sq == 0.0:
        return math.hypot(px - ax, py - ay)
    t = max(0.0, min(1.0, ((px - ax) * dx + (py - ay) * dy) / seg_len_sq))
    return math.hypot(px - (ax + t * dx), py - (ay + t * dy))


def _human_on_route(graph: SceneGraph, waypoints: list[tuple[float, float]]
                    ) -> Optional[int]:
    """Nearest non-operator human within the query radius of the route."""
    segments = list(zip(waypoints, waypoints[1:]))
    if not segments:
        return None
    best: Optional[tuple[float, int]] = None
    for human in graph.nodes_of_kind(Kind.HUMAN):
        if human.label == OPERATOR_LABEL or human.pose is None:
            continue
        hp = (human.pose.x, human.pose.y)
        dist = min(_point_segment_distance(hp, a, b) for a, b in segments)
        if dist <= QUERY_ROUTE_RADIUS_M:
            if best is None or (dist, human.id) < best:
                best = (dist, human.id)
    return best[1] if best else None


def plan(task: Task, graph: SceneGraph, priors: PriorTable, now: int) -> Plan:
    """Build a search-and-fetch plan from the current belief state.

    Candidates each get a Navigate+Perceive visit; the believed location (if
    any) additionally gets the Pick. When belief is weak and a human stands
    near the route, ask them before starting the search.
    """
    candidates = candidate_locations(task, graph, priors, now)
    if not candidates:
        raise NoCandidatesError("graph has no furniture to search")

    chain = graph.locate(task.object_label, now)
    believed = None
    if (chain is not None and chain.confidence >= BELIEF_THRESHOLD
            and chain.furniture_id is not None):
        believed = chain.furniture_id

    actions: list[Action] = []
    for fid, _score in candidates:
        node = graph.node(fid)
        if node.pose is None:
            raise PlannerError(f"navigate target {fid} has no pose")
        actions.append(Navigate(fid))
        actions.append(Perceive())
        if believed is not None and fid == believed:
            actions.append(Pick(task.object_label))

    if task.destination is not None:
        actions.append(Navigate(task.destination))
        actions.append(Place(task.destination))
    else:
        operator = _operator_node(graph)
        if operator is None:
            raise PlannerError("no operator node in the graph")
        actions.append(Navigate(operator))
        actions.append(Handover(operator))

    if believed is None:
        robot = graph.robot_node()
        start = (robot.pose.x, robot.pose.y) if robot and robot.pose else None
        if start is not None:
            waypoints = [start] + [
                (graph.nodes[fid].pose.x, graph.nodes[fid].pose.y)
                for fid, _ in candidates
            ]
            human = _human_on_route(graph, waypoints)
            if human is not None:
                actions.insert(0, QueryHuman(human))

    return Plan(
        task_id=task.id,
        actions=actions,
        cursor=0,
        revision=0,
        created_at=now,
        believed_target=believed,
    )


def is_relevant(delta: GraphDelta, task: Task) -> bool:
    """True iff the delta added an edge about the task's object. Labels in the
    delta and the task are both canonical, so plain equality suffices."""
    target = normalize_label(task.object_label)
    return any(
        delta.labels.get(e.subject) == target
        for e in delta.added_edges
    )


def replan(task: Task, graph: SceneGraph, priors: PriorTable, old_plan: Plan,
           now: int) -> Plan:
    """Fresh plan with the next revision. Once the object is in hand the plan
    reduces to delivery; a completed pick is never repeated."""
    if old_plan.pick_completed():
        if task.destination is not None:
            actions: list[Action] = [Navigate(task.destination),
                                     Place(task.destination)]
        else:
            operator = _operator_node(graph)
            if operator is None:
                raise PlannerError("no operator node in the graph")
            actions = [Navigate(operator), Handover(operator)]
        new_plan = Plan(
            task_id=task.id,
            actions=actions,
            cursor=0,
            revision=old_plan.revision + 1,
            created_at=now,
            believed_target=old_plan.believed_target,
        )
        return new_plan
    new_plan = plan(task, graph, priors, now)
    new_plan.revision = old_plan.revision + 1
    return new_plan
