"""Deterministic tick-based household world.

Ground truth lives here, strictly separated from the robot's belief graph:
the only things that cross the boundary are Detected events, delivered cues,
and action outcomes. One tick is 0.1 s of notional time. There is no physics
and no perception noise in v1; the rng seed is carried for future noise hooks.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

from shapely.geometry import Point, Polygon

from .config import (
    DETECTION_RADIUS_M,
    DETECTION_SCORE,
    HANDOVER_RANGE_M,
    NAVIGATE_TOLERANCE_M,
    PICK_RANGE_M,
    STEP_DISTANCE_M,
)
from .cues import Cue, MalformedCueError, cue_from_json, cue_to_json
from .geometry import AABB, Detection, GeometricObservation, Rect
from .graph import normalize_label
from .planner import (
    Action,
    Handover,
    Navigate,
    Perceive,
    Pick,
    Place,
    QueryHuman,
    action_to_json,
)


class ScenarioError(Exception):
    def __init__(self, message: str, path: str = "$"):
        super().__init__(f"{message} (at {path})")
        self.path = path


class TruncatedLogError(Exception):
    pass


_KNOWLEDGE_RELATIONS = {"on", "in", "at", "near"}

# How a knowledge relation is verbalized when answering a query.
_RELATION_WORD = {"on": "on", "in": "in", "at": "on", "near": "near"}


def make_canonical(synonyms: dict[str, list[str]]) -> Callable[[str], str]:
    table = {}
    for canon, aliases in synonyms.items():
        c = normalize_label(canon)
        for alias in aliases:
            table[normalize_label(alias)] = c
    return lambda label: table.get(normalize_label(label), normalize_label(label))


# ── world model ───────────────────────────────────────────────────────────────


@dataclass
class RoomSpec:
    name: str
    polygon: tuple[tuple[float, float], ...]
    node_id: Optional[int] = None

    def centroid(self) -> tuple[float, float]:
        c = Polygon(self.polygon).centroid
        return (c.x, c.y)


@dataclass
class FurnitureSpec:
    label: str
    room: str
    footprint: Rect
    top_height: float
    node_id: Optional[int] = None

    def center(self) -> tuple[float, float]:
        return self.footprint.center()


@dataclass
class ObjectSpec:
    label: str
    support: Optional[str]          # furniture label, or None for floor objects
    pose: tuple[float, float, float]
    delivered: bool = False


@dataclass
class HumanSpec:
    id: str
    pose: tuple[float, float]
    knowledge: list[dict] = field(default_factory=list)
    gesture_script: Optional[dict] = None
    node_id: Optional[int] = None


@dataclass
class World:
    rooms: list[RoomSpec]
    furniture: list[FurnitureSpec]
    objects: list[ObjectSpec]
    humans: list[HumanSpec]
    robot_pose: tuple[float, float]
    operator_pose: tuple[float, float]
    rng_seed: int = 0
    tick: int = 0
    held_object: Optional[int] = None  # index into objects

    def furniture_by_label(self, label: str) -> Optional[FurnitureSpec]:
        canon = normalize_label(label)
        for f in self.furniture:
            if normalize_label(f.label) == canon:
                return f
        return None


@dataclass
class Scenario:
    world: World
    priors: "PriorTableLike"
    command: Optional[str]
    cue_script: list[dict]          # [{"tick": N, "cue": {...}}], sorted
    synonyms: dict[str, list[str]]
    seed: int


# PriorTable lives in planner; typed loosely here to keep the module boundary.
PriorTableLike = object


# ── scenario loading ──────────────────────────────────────────────────────────


def _require(doc: dict, key: str, path: str):
    if key not in doc:
        raise ScenarioError(f"missing field {key!r}", path)
    return doc[key]


def _as_xy(value, path: str) -> tuple[float, float]:
    try:
        x, y = value
        return (float(x), float(y))
    except (TypeError, ValueError):
        raise ScenarioError("expected [x, y]", path) from None


def load_scenario(document: dict) -> Scenario:
    """Validate a scenario document and build the world.

    Referential checks cover every label: furniture rooms, object supports,
    prior targets, human knowledge, and cue-script speakers must all name
    things that exist.
    """
    from .planner import PriorTable

    if not isinstance(document, dict):
        raise ScenarioError("scenario must be a JSON object")

    rooms: list[RoomSpec] = []
    room_names: set[str] = set()
    for i, rd in enumerate(_require(document, "rooms", "$")):
        path = f"$.rooms[{i}]"
        name = normalize_label(str(_require(rd, "name", path)))
        polygon = _require(rd, "polygon", path)
        if not isinstance(polygon, list) or len(polygon) < 3:
            raise ScenarioError("polygon needs >= 3 vertices", f"{path}.polygon")
        if name in room_names:
            raise ScenarioError(f"duplicate room name {name!r}", path)
        room_names.add(name)
        rooms.append(RoomSpec(name, tuple(_as_xy(p, f"{path}.polygon") for p in polygon)))
    if not rooms:
        raise ScenarioError("at least one room is required", "$.rooms")

    room_polys = {r.name: Polygon(r.polygon) for r in rooms}

    furniture: list[FurnitureSpec] = []
    furniture_labels: set[str] = set()
    for i, fd in enumerate(_require(document, "furniture", "$")):
        path = f"$.furniture[{i}]"
        label = normalize_label(str(_require(fd, "label", path)))
        room = normalize_label(str(_require(fd, "room", path)))
        if room not in room_names:
            raise ScenarioError(f"furniture room {room!r} does not exist",
                                f"{path}.room")
        if label in furniture_labels:
            raise ScenarioError(f"duplicate furniture label {label!r}", path)
        furniture_labels.add(label)
        fp = _require(fd, "footprint", path)
        try:
            rect = Rect(*(float(v) for v in fp))
        except (TypeError, ValueError) as exc:
            raise ScenarioError(f"bad footprint: {exc}", f"{path}.footprint") from None
        top = float(_require(fd, "top_height", path))
        if top < 0:
            raise ScenarioError("top_height must be >= 0", f"{path}.top_height")
        cx, cy = rect.center()
        if not room_polys[room].covers(Point(cx, cy)):
            raise ScenarioError(
                f"furniture {label!r} center is outside its room {room!r}", path
            )
        others = [n for n, poly in room_polys.items()
                  if n != room and poly.contains(Point(cx, cy))]
        if others:
            raise ScenarioError(
                f"furniture {label!r} lies inside room {others[0]!r} as well", path
            )
        furniture.append(FurnitureSpec(label, room, rect, top))

    object_labels: set[str] = set()
    objects: list[ObjectSpec] = []
    per_support: dict[str, int] = {}
    for i, od in enumerate(document.get("objects", [])):
        path = f"$.objects[{i}]"
        label = normalize_label(str(_require(od, "label", path)))
        object_labels.add(label)
        support = od.get("support")
        if support is not None:
            support = normalize_label(str(support))
            if support not in furniture_labels:
                raise ScenarioError(
                    f"object support {support!r} names no furniture", f"{path}.support"
                )
            spec = next(f for f in furniture if f.label == support)
            idx = per_support.get(support, 0)
            per_support[support] = idx + 1
            cx, cy = spec.center()
            pose = (_spread_x(cx, idx, spec.footprint), cy, spec.top_height)
        else:
            if "pose" not in od:
                raise ScenarioError(
                    "floor objects need an explicit pose", f"{path}.support"
                )
            x, y = _as_xy(od["pose"], f"{path}.pose")
            pose = (x, y, 0.0)
        objects.append(ObjectSpec(label, support, pose))

    world_labels = room_names | furniture_labels | object_labels

    humans: list[HumanSpec] = []
    human_ids: set[str] = set()
    for i, hd in enumerate(document.get("humans", [])):
        path = f"$.humans[{i}]"
        hid = str(_require(hd, "id", path))
        if hid in human_ids:
            raise ScenarioError(f"duplicate human id {hid!r}", path)
        human_ids.add(hid)
        pose = _as_xy(_require(hd, "pose", path), f"{path}.pose")
        knowledge = []
        for j, kd in enumerate(hd.get("knowledge", [])):
            kpath = f"{path}.knowledge[{j}]"
            subject = normalize_label(str(_require(kd, "subject", kpath)))
            relation = str(_require(kd, "relation", kpath))
            landmark = normalize_label(str(_require(kd, "object", kpath)))
            if relation not in _KNOWLEDGE_RELATIONS:
                raise ScenarioError(f"unsupported knowledge relation {relation!r}",
                                    f"{kpath}.relation")
            for lbl, fld in ((subject, "subject"), (landmark, "object")):
                if lbl not in world_labels:
                    raise ScenarioError(f"knowledge label {lbl!r} names nothing "
                                        f"in the world", f"{kpath}.{fld}")
            knowledge.append({"subject": subject, "relation": relation,
                              "object": landmark})
        gesture_script = hd.get("gesture_script")
        if gesture_script is not None:
            gpath = f"{path}.gesture_script"
            trigger = _require(gesture_script, "trigger", gpath)
            if trigger != "on_query" and not isinstance(trigger, int):
                raise ScenarioError("trigger must be a tick or \"on_query\"",
                                    f"{gpath}.trigger")
            gesture = _require(gesture_script, "gesture", gpath)
            try:
                cue_from_json({"type": "gesture", **gesture}, tick=0)
            except MalformedCueError as exc:
                raise ScenarioError(str(exc), f"{gpath}.gesture") from exc
        humans.append(HumanSpec(hid, pose, knowledge, gesture_script))

    robot = _require(document, "robot", "$")
    robot_pose = _as_xy(_require(robot, "pose", "$.robot"), "$.robot.pose")

    priors_doc = document.get("priors", {})
    for label, ranked in priors_doc.items():
        ppath = f"$.priors.{label}"
        for j, entry in enumerate(ranked):
            try:
                target, _score = entry
            except (TypeError, ValueError):
                raise ScenarioError("expected [furniture, score]",
                                    f"{ppath}[{j}]") from None
            if normalize_label(str(target)) not in furniture_labels:
                raise ScenarioError(f"prior target {target!r} names no furniture",
                                    f"{ppath}[{j}]")
    try:
        priors = PriorTable.from_json(priors_doc)
    except ValueError as exc:
        raise ScenarioError(str(exc), "$.priors") from exc

    cue_script = []
    for i, cd in enumerate(document.get("cue_script", [])):
        path = f"$.cue_script[{i}]"
        tick = _require(cd, "tick", path)
        if not isinstance(tick, int) or tick < 0:
            raise ScenarioError("tick must be a non-negative integer", f"{path}.tick")
        cue = _require(cd, "cue", path)
        try:
            parsed = cue_from_json({k: v for k, v in cue.items() if k != "speaker"},
                                   tick=tick)
        except MalformedCueError as exc:
            raise ScenarioError(str(exc), f"{path}.cue") from exc
        del parsed
        speaker = cue.get("speaker")
        if speaker is not None and str(speaker) not in human_ids:
            raise ScenarioError(f"cue speaker {speaker!r} names no human",
                                f"{path}.cue.speaker")
        cue_script.append({"tick": tick, "cue": dict(cue)})
    cue_script.sort(key=lambda c: c["tick"])

    synonyms = document.get("synonyms", {})
    if not isinstance(synonyms, dict):
        raise ScenarioError("synonyms must map a label to its aliases", "$.synonyms")

    seed = document.get("seed", 0)
    if not isinstance(seed, int):
        raise ScenarioError("seed must be an integer", "$.seed")

    world = World(
        rooms=rooms,
        furniture=furniture,
        objects=objects,
        humans=humans,
        robot_pose=robot_pose,
        operator_pose=robot_pose,
        rng_seed=seed,
    )
    return Scenario(
        world=world,
        priors=priors,
        command=document.get("command"),
        cue_script=cue_script,
        synonyms=synonyms,
        seed=seed,
    )


def load_scenario_file(path) -> Scenario:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            document = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"not valid JSON: {exc.msg}",
                                f"line {exc.lineno}") from exc
    return load_scenario(document)


def _spread_x(cx: float, idx: int, footprint: Rect) -> float:
    # Multiple objects sharing a support fan out along x so they do not
    # coincide exactly.
    if idx == 0:
        return cx
    shift = 0.15 * ((idx + 1) // 2)
    x = cx + (shift if idx % 2 == 1 else -shift)
    return min(max(x, footprint.min_x + 0.05), footprint.max_x - 0.05)


# ── event constructors (wire format of the run log) ───────────────────────────


def ev_action_started(tick: int, action: Action, robot_pose) -> dict:
    return {"type": "action_started", "tick": tick,
            "action": action_to_json(action),
            "robot_pose": [robot_pose[0], robot_pose[1]]}


def ev_action_completed(tick: int, action: Action, ok: bool, robot_pose) -> dict:
    return {"type": "action_completed", "tick": tick,
            "action": action_to_json(action), "ok": ok,
            "robot_pose": [robot_pose[0], robot_pose[1]]}


def ev_detected(tick: int, obs: GeometricObservation) -> dict:
    return {"type": "detected", "tick": tick, "observation": obs.to_json()}


def ev_cue_delivered(tick: int, cue: Cue) -> dict:
    return {"type": "cue_delivered", "tick": tick, "cue": cue_to_json(cue)}


def ev_query_asked(tick: int, human_node: int) -> dict:
    return {"type": "query_asked", "tick": tick, "human": human_node}


def ev_task_succeeded(tick: int) -> dict:
    return {"type": "task_succeeded", "tick": tick}


def ev_task_failed(tick: int, reason: str) -> dict:
    return {"type": "task_failed", "tick": tick, "reason": reason}


# ── simulator ─────────────────────────────────────────────────────────────────


class Simulator:
    """Steps the world one tick at a time and fires scripted and injected cues.

    `targets` maps graph node ids to positions and must cover everything a
    plan can Navigate to (furniture, rooms, humans, the operator); it is
    filled in by the run wiring after the graph has been seeded.
    """

    def __init__(self, scenario: Scenario, *, cues_enabled: bool = True):
        self.world = scenario.world
        self.cues_enabled = cues_enabled
        self.canonical = make_canonical(scenario.synonyms)
        self.targets: dict[int, tuple[float, float]] = {}
        self._task_label: Optional[str] = None
        self._started_action: Optional[Action] = None
        self._human_nodes: dict[str, int] = {}
        self._cue_queue: list[tuple[int, int, dict]] = []
        self._queue_seq = 0
        if cues_enabled:
            for entry in scenario.cue_script:
                self._enqueue(entry["tick"], dict(entry["cue"]))
            for human in self.world.humans:
                script = human.gesture_script
                if script and isinstance(script["trigger"], int):
                    self._enqueue(script["trigger"],
                                  self._gesture_payload(human))

    # wiring ------------------------------------------------------------

    def register_targets(self, targets: dict[int, tuple[float, float]],
                         human_nodes: dict[str, int]) -> None:
        self.targets = dict(targets)
        self._human_nodes = dict(human_nodes)

    def set_task_label(self, label: Optional[str]) -> None:
        self._task_label = self.canonical(label) if label else None

    # cue plumbing -------------------------------------------------------

    def _enqueue(self, tick: int, cue: dict) -> None:
        self._cue_queue.append((tick, self._queue_seq, cue))
        self._queue_seq += 1

    def _gesture_payload(self, human: HumanSpec) -> dict:
        return {"type": "gesture", **human.gesture_script["gesture"]}

    def inject_cue(self, cue: "Cue | dict") -> dict:
        """Queue a live cue for delivery on the next stepped tick. Returns the
        CueDelivered event that will be appended. Raises MalformedCueError on
        bad input; scripted and injected cues share this validation."""
        raw = cue_to_json(cue) if not isinstance(cue, dict) else dict(cue)
        due = self.world.tick
        speaker = raw.get("speaker")
        if isinstance(speaker, str):
            if speaker not in self._human_nodes:
                raise MalformedCueError(f"cue speaker {speaker!r} names no human")
            raw["speaker"] = self._human_nodes[speaker]
        parsed = cue_from_json(raw, tick=due)
        self._enqueue(due, raw)
        return ev_cue_delivered(due, parsed)

    # stepping -----------------------------------------------------------

    def step(self, action: Optional[Action]) -> list[dict]:
        """Advance one tick while executing `action` (None idles).

        Event order within the tick: ActionStarted, action-specific events,
        ActionCompleted, then CueDelivered for every due cue.
        """
        t = self.world.tick
        events: list[dict] = []
        if action is not None and action is not self._started_action:
            events.append(ev_action_started(t, action, self.world.robot_pose))
            self._started_action = action

        if isinstance(action, Navigate):
            self._step_navigate(t, action, events)
        elif isinstance(action, Perceive):
            events.append(ev_detected(t, self._perceive(t)))
            events.append(ev_action_completed(t, action, True, self.world.robot_pose))
        elif isinstance(action, Pick):
            ok = self._try_pick(action.label)
            events.append(ev_action_completed(t, action, ok, self.world.robot_pose))
        elif isinstance(action, (Handover, Place)):
            ok = self._try_deliver(action)
            events.append(ev_action_completed(t, action, ok, self.world.robot_pose))
        elif isinstance(action, QueryHuman):
            events.append(ev_query_asked(t, action.human))
            self._answer_query(t, action.human)
            events.append(ev_action_completed(t, action, True, self.world.robot_pose))

        due = [entry for entry in self._cue_queue if entry[0] <= t]
        if due:
            self._cue_queue = [e for e in self._cue_queue if e[0] > t]
            for _, _, raw in due:
                events.append(ev_cue_delivered(t, cue_from_json(raw, tick=t)))

        self.world.tick = t + 1
        return events

    def _step_navigate(self, t: int, action: Navigate, events: list[dict]) -> None:
        target = self.targets.get(action.target)
        if target is None:
            events.append(ev_action_completed(t, action, False, self.world.robot_pose))
            return
        rx, ry = self.world.robot_pose
        dx, dy = target[0] - rx, target[1] - ry
        dist = math.hypot(dx, dy)
        if dist > NAVIGATE_TOLERANCE_M:
            move = min(STEP_DISTANCE_M, dist)
            rx += dx / dist * move
            ry += dy / dist * move
            self.world.robot_pose = (rx, ry)
            if self.world.held_object is not None:
                obj = self.world.objects[self.world.held_object]
                obj.pose = (rx, ry, 0.8)
            dist = math.hypot(target[0] - rx, target[1] - ry)
        if dist <= NAVIGATE_TOLERANCE_M:
            events.append(ev_action_completed(t, action, True, self.world.robot_pose))

    def _perceive(self, t: int) -> GeometricObservation:
        rx, ry = self.world.robot_pose
        detections = []
        for i, obj in enumerate(self.world.objects):
            if i == self.world.held_object:
                continue
            ox, oy, oz = obj.pose
            if math.hypot(ox - rx, oy - ry) > DETECTION_RADIUS_M:
                continue
            detections.append(Detection(
                label=obj.label,
                centroid=(ox, oy, oz + 0.05),
                aabb=AABB((ox - 0.05, oy - 0.05, oz), (ox + 0.05, oy + 0.05, oz + 0.1)),
                score=DETECTION_SCORE,
            ))
        return GeometricObservation(tuple(detections), t)

    def _try_pick(self, label: str) -> bool:
        if self.world.held_object is not None:
            return False
        rx, ry = self.world.robot_pose
        canon = self.canonical(label)
        best = None
        for i, obj in enumerate(self.world.objects):
            if self.canonical(obj.label) != canon:
                continue
            dist = math.hypot(obj.pose[0] - rx, obj.pose[1] - ry)
            if dist <= PICK_RANGE_M and (best is None or dist < best[0]):
                best = (dist, i)
        if best is None:
            return False
        idx = best[1]
        self.world.held_object = idx
        self.world.objects[idx].support = None
        self.world.objects[idx].pose = (rx, ry, 0.8)
        return True

    def _try_deliver(self, action: "Handover | Place") -> bool:
        if self.world.held_object is None:
            return False
        target = self.targets.get(action.target)
        if target is None:
            return False
        rx, ry = self.world.robot_pose
        if math.hypot(target[0] - rx, target[1] - ry) > HANDOVER_RANGE_M:
            return False
        obj = self.world.objects[self.world.held_object]
        if isinstance(action, Place):
            spec = next((f for f in self.world.furniture
                         if f.node_id == action.target), None)
            if spec is not None:
                cx, cy = spec.center()
                obj.support = spec.label
                obj.pose = (cx, cy, spec.top_height)
        else:
            obj.pose = (rx, ry, 0.0)
            obj.delivered = True
        self.world.held_object = None
        return True

    def _answer_query(self, t: int, human_node: int) -> None:
        """Schedule the queried human's answer for the next tick: matching
        knowledge becomes a verbal cue, else an on-query gesture fires."""
        if not self.cues_enabled:
            return
        human = next((h for h in self.world.humans if h.node_id == human_node), None)
        if human is None:
            return
        if self._task_label is not None:
            matching = [k for k in human.knowledge
                        if self.canonical(k["subject"]) == self._task_label]
            if matching:
                text = " ".join(
                    f"The {k['subject']} is {_RELATION_WORD[k['relation']]} "
                    f"the {k['object']}." for k in matching
                )
                self._enqueue(t + 1, {"type": "verbal", "text": text,
                                      "speaker": human.node_id})
                return
        script = human.gesture_script
        if script and script["trigger"] == "on_query":
            self._enqueue(t + 1, self._gesture_payload(human))


# ── run metrics ───────────────────────────────────────────────────────────────


@dataclass
class RunReport:
    success: bool
    ticks: int
    distance_m: float
    replans: int
    cues_consumed: int

    def to_json(self) -> dict:
        return {
            "success": self.success,
            "ticks": self.ticks,
            "distance_m": self.distance_m,
            "replans": self.replans,
            "cues_consumed": self.cues_consumed,
        }


def metrics(log: list[dict]) -> RunReport:
    """Aggregate a complete run log. Distance comes from the robot poses on
    action boundary events (movement only happens inside Navigate spans, so
    consecutive boundary poses measure it exactly)."""
    if not log:
        raise TruncatedLogError("empty event log")
    terminal = [ev for ev in log if ev["type"] in ("task_succeeded", "task_failed")]
    if not terminal:
        raise TruncatedLogError("log has no terminal task event")
    poses = [tuple(ev["robot_pose"]) for ev in log
             if ev["type"] in ("action_started", "action_completed")]
    distance = sum(math.hypot(b[0] - a[0], b[1] - a[1])
                   for a, b in zip(poses, poses[1:]))
    return RunReport(
        success=any(ev["type"] == "task_succeeded" for ev in log),
        ticks=max(ev["tick"] for ev in log),
        distance_m=distance,
        replans=sum(1 for ev in log
                    if ev["type"] == "plan_revised" and ev["revision"] >= 1),
        cues_consumed=sum(1 for ev in log if ev["type"] == "cue_delivered"),
    )


def read_log(path) -> list[dict]:
    lines = []
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            raw = raw.strip()
            if raw:
                lines.append(json.loads(raw))
    return lines
