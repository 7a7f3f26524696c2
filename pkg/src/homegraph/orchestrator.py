"""The executive: simulator -> perception/cues -> graph -> planner, persisted
as an event-sourced run log.

Within one tick the log order is fixed: simulator events (cues included),
then the graph deltas they caused, then at most one plan revision, then any
terminal task event. Replays of a log against the same scenario rebuild the
exact final graph.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .config import SOURCE_CONFIDENCE, TICKS_MAX_DEFAULT
from .cues import (
    Cue,
    GeometricObservation,
    InterpreterClient,
    cue_from_json,
    interpret_with_client,
)
from .geometry import RoomGeometry, SurfaceModel, associate_detection, extract_relations
from .graph import (
    Kind,
    Pose,
    Relation,
    RejectedAssertionError,
    SceneGraph,
    SemanticAssertion,
    Source,
)
from .planner import (
    Handover,
    Navigate,
    Pick,
    Place,
    Plan,
    Task,
    TaskStatus,
    is_relevant,
    parse_command,
    plan as make_plan,
    replan,
)
from .sim import (
    RunReport,
    Scenario,
    Simulator,
    ev_task_failed,
    ev_task_succeeded,
    load_scenario_file,
    metrics,
)

OPERATOR_LABEL = "operator"
ROBOT_LABEL = "robot"


class ActiveTaskError(Exception):
    """A command arrived while a task is already active."""


# ── event log ─────────────────────────────────────────────────────────────────


def dump_event(event: dict) -> str:
    return json.dumps(event, sort_keys=True, separators=(",", ":"))


class EventLog:
    """Append-only run log: in-memory entries plus an optional JSONL file.
    Appends come from the single executive thread; readers may tail `entries`
    concurrently (index-based, entries are never mutated)."""

    def __init__(self, path: Optional[Path] = None):
        self.entries: list[dict] = []
        self.path = Path(path) if path else None
        self._fh = open(self.path, "w", encoding="utf-8") if self.path else None

    def append(self, event: dict) -> None:
        self.entries.append(event)
        if self._fh is not None:
            self._fh.write(dump_event(event) + "\n")
            self._fh.flush()

    def __len__(self) -> int:
        return len(self.entries)

    def line(self, index: int) -> str:
        return dump_event(self.entries[index])

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None


# ── graph seeding ─────────────────────────────────────────────────────────────


@dataclass
class WorldModel:
    """The robot's a-priori knowledge wired onto a seeded graph."""

    graph: SceneGraph
    surfaces: list[SurfaceModel]
    rooms: list[RoomGeometry]
    targets: dict[int, tuple[float, float]]
    human_nodes: dict[str, int]
    operator_id: int
    robot_id: int


def seed_graph(scenario: Scenario) -> WorldModel:
    """Seed the belief graph with the static map: rooms, furniture (with
    their in-room edges), humans, the robot, and the operator station.
    Object positions are deliberately absent; they must be perceived or told."""
    world = scenario.world
    graph = SceneGraph()
    graph.add_synonyms(scenario.synonyms)

    targets: dict[int, tuple[float, float]] = {}
    for room in world.rooms:
        cx, cy = room.centroid()
        node = graph.add_node(Kind.ROOM, room.name, Pose(cx, cy, 0.0), tick=0)
        room.node_id = node.id
        targets[node.id] = (cx, cy)
    for spec in world.furniture:
        cx, cy = spec.center()
        node = graph.add_node(Kind.FURNITURE, spec.label,
                              Pose(cx, cy, spec.top_height), tick=0)
        spec.node_id = node.id
        targets[node.id] = (cx, cy)
        room = next(r for r in world.rooms if r.name == spec.room)
        graph.add_edge(_map_edge(node.id, room.node_id))
    human_nodes: dict[str, int] = {}
    for human in world.humans:
        node = graph.add_node(Kind.HUMAN, human.id,
                              Pose(human.pose[0], human.pose[1], 0.0), tick=0)
        human.node_id = node.id
        human_nodes[human.id] = node.id
        targets[node.id] = human.pose
    robot = graph.add_node(Kind.ROBOT, ROBOT_LABEL,
                           Pose(world.robot_pose[0], world.robot_pose[1], 0.0),
                           tick=0)
    targets[robot.id] = world.robot_pose
    operator = graph.add_node(Kind.HUMAN, OPERATOR_LABEL,
                              Pose(world.operator_pose[0], world.operator_pose[1], 0.0),
                              tick=0)
    targets[operator.id] = world.operator_pose

    surfaces = [SurfaceModel(f.node_id, f.footprint, f.top_height)
                for f in world.furniture]
    rooms = [RoomGeometry(r.node_id, r.polygon) for r in world.rooms]
    return WorldModel(graph, surfaces, rooms, targets, human_nodes,
                      operator.id, robot.id)


def _map_edge(furniture_id: int, room_id: int):
    from .graph import RelationEdge

    return RelationEdge(
        subject=furniture_id,
        relation=Relation.IN,
        object=room_id,
        confidence=1.0,
        source=Source.PRIOR,
        asserted_at=0,
    )


def _held_assertion(label: str, tick: int) -> SemanticAssertion:
    return SemanticAssertion(
        subject_label=label,
        relation=Relation.HELD_BY,
        object_label=ROBOT_LABEL,
        confidence=SOURCE_CONFIDENCE["geometric"],
        source=Source.GEOMETRIC,
        asserted_at=tick,
    )


# ── executive ─────────────────────────────────────────────────────────────────


@dataclass
class TickOutcome:
    events: list[dict] = field(default_factory=list)
    replanned: bool = False


class Executive:
    """Owns all run state and serializes every mutation through tick()."""

    def __init__(self, scenario: Scenario, *,
                 log_path: Optional[Path] = None,
                 ticks_max: int = TICKS_MAX_DEFAULT,
                 cues_enabled: bool = True,
                 client: Optional[InterpreterClient] = None):
        self.scenario = scenario
        self.model = seed_graph(scenario)
        self.graph = self.model.graph
        self.sim = Simulator(scenario, cues_enabled=cues_enabled)
        self.sim.register_targets(self.model.targets, self.model.human_nodes)
        self.priors = scenario.priors
        self.client = client
        self.log = EventLog(log_path)
        self.ticks_max = ticks_max
        self.task: Optional[Task] = None
        self.plan: Optional[Plan] = None
        self.finished = False
        self._task_seq = 0
        if scenario.command:
            self.issue_command(scenario.command)

    # -- commands ---------------------------------------------------------

    def issue_command(self, text: str) -> Task:
        if self.task is not None and self.task.status == TaskStatus.ACTIVE:
            raise ActiveTaskError(f"task {self.task.id} is still active")
        tick = self.sim.world.tick
        self._task_seq += 1
        task = parse_command(text, tick=tick, task_id=f"task-{self._task_seq}")
        task.object_label = self.graph.canonical(task.object_label)
        self.task = task
        self.finished = False
        self.sim.set_task_label(task.object_label)
        self.log.append({"type": "task_issued", "tick": tick, "text": text,
                         "task": task.to_json()})
        self.plan = make_plan(task, self.graph, self.priors, tick)
        self.log.append(self._plan_event(tick))
        return task

    def inject_cue(self, cue: "Cue | dict") -> dict:
        return self.sim.inject_cue(cue)

    # -- the loop ----------------------------------------------------------

    def tick(self) -> TickOutcome:
        """One executive tick: step the simulator, fold every event into the
        graph, replan when the new information warrants it."""
        outcome = TickOutcome()
        if self.finished:
            return outcome
        t = self.sim.world.tick
        action = self.plan.current_action() if self.plan else None
        events = self.sim.step(action)
        for ev in events:
            self.log.append(ev)
        outcome.events = events

        replan_needed = False
        deltas = []
        for ev in events:
            if ev["type"] == "detected":
                obs = GeometricObservation.from_json(ev["observation"])
                replan_needed |= self._ingest_observation(obs, t, deltas)
            elif ev["type"] == "cue_delivered":
                cue = cue_from_json(ev["cue"])
                replan_needed |= self._ingest_cue(cue, t, deltas)
            elif ev["type"] == "action_completed":
                self._on_action_completed(ev, t, deltas)

        if (replan_needed and not self.finished
                and self.task is not None
                and self.task.status == TaskStatus.ACTIVE
                and self.plan is not None):
            self.plan = replan(self.task, self.graph, self.priors, self.plan, t)
            self.log.append(self._plan_event(t))
            outcome.replanned = True

        if not self.finished and self.sim.world.tick >= self.ticks_max:
            self._finish(False, "tick limit exceeded", t)
        return outcome

    def run(self) -> RunReport:
        """Run to task completion or the tick limit; returns the report."""
        if self.task is None:
            raise ActiveTaskError("nothing to run: scenario has no command")
        while not self.finished:
            self.tick()
        return metrics(self.log.entries)

    # -- event ingestion ----------------------------------------------------

    def _ingest_observation(self, obs: GeometricObservation, t: int,
                            deltas: list) -> bool:
        from .cues import decide_next_steps

        for d in obs.detections:
            associate_detection(d, self.graph, tick=obs.tick)
        assertions = extract_relations(obs, self.graph, self.model.surfaces,
                                       self.model.rooms)
        task = self._active_task()
        decision = decide_next_steps(assertions, task, self.graph, t)
        self._apply_assertions(assertions, t, deltas)
        return decision.replan

    def _ingest_cue(self, cue: Cue, t: int, deltas: list) -> bool:
        if isinstance(cue, GeometricObservation):
            return self._ingest_observation(cue, t, deltas)
        task = self._active_task()
        decision = interpret_with_client(self.client, cue, self.graph, task, t)
        self._apply_assertions(decision.assertions, t, deltas)
        return decision.replan

    def _apply_assertions(self, assertions, t: int, deltas: list) -> None:
        for a in assertions:
            try:
                delta = self.graph.apply_assertion(a)
            except RejectedAssertionError as exc:
                self.log.append({"type": "assertion_rejected", "tick": t,
                                 "assertion": a.to_json(), "reason": str(exc)})
                continue
            deltas.append(delta)
            self.log.append({"type": "graph_delta", **delta.to_json()})

    def _on_action_completed(self, ev: dict, t: int, deltas: list) -> None:
        if self.plan is None:
            return
        action = self.plan.current_action()
        ok = ev["ok"]
        if isinstance(action, Navigate) and ok:
            x, y = ev["robot_pose"]
            self.graph.set_node_pose(self.model.robot_id, Pose(x, y, 0.0), t)
        elif isinstance(action, Pick) and ok:
            # Proprioception, not an environmental cue: applied without
            # consulting the replan rule.
            self._apply_assertions([_held_assertion(action.label, t)], t, deltas)
        elif isinstance(action, (Handover, Place)):
            self._finish(ok, "" if ok else f"{type(action).__name__.lower()} failed", t)
        self.plan.advance()

    def _finish(self, success: bool, reason: str, t: int) -> None:
        if self.task is not None:
            self.task.status = TaskStatus.SUCCEEDED if success else TaskStatus.FAILED
        self.finished = True
        self.log.append(ev_task_succeeded(t) if success else ev_task_failed(t, reason))

    def _active_task(self) -> Optional[Task]:
        if self.task is not None and self.task.status == TaskStatus.ACTIVE:
            return self.task
        return None

    def _plan_event(self, tick: int) -> dict:
        first_nav = next(
            (a for a in self.plan.actions if isinstance(a, Navigate)), None
        )
        return {
            "type": "plan_revised",
            "tick": tick,
            "revision": self.plan.revision,
            "task_id": self.plan.task_id,
            "first_target": first_nav.target if first_nav else None,
            "first_target_label": (
                self.graph.nodes[first_nav.target].label if first_nav else None
            ),
            "plan": self.plan.to_json(),
        }

    # -- state snapshot (used by the API) -----------------------------------

    def state_json(self) -> dict:
        return {
            "tick": self.sim.world.tick,
            "robot_pose": list(self.sim.world.robot_pose),
            "graph": json.loads(self.graph.snapshot()),
            "plan": self.plan.to_json() if self.plan else None,
            "task": self.task.to_json() if self.task else None,
        }


# ── replay ────────────────────────────────────────────────────────────────────


def replay_log(scenario: Scenario, log: list[dict],
               client: Optional[InterpreterClient] = None) -> SceneGraph:
    """Rebuild the final graph from a run log against the same scenario.

    The log's Detected, CueDelivered, and ActionCompleted events are folded
    through the same deterministic pipeline the live run used. A run made
    with an external interpreter client must be replayed with that client.
    """
    model = seed_graph(scenario)
    graph = model.graph
    task: Optional[Task] = None
    for ev in log:
        t = ev["tick"]
        kind = ev["type"]
        if kind == "task_issued":
            task = Task(
                id=ev["task"]["id"],
                object_label=ev["task"]["object_label"],
                issued_at=ev["task"]["issued_at"],
                hint=ev["task"].get("hint"),
            )
        elif kind == "detected":
            obs = GeometricObservation.from_json(ev["observation"])
            for d in obs.detections:
                associate_detection(d, graph, tick=obs.tick)
            assertions = extract_relations(obs, graph, model.surfaces, model.rooms)
            _replay_apply(graph, assertions)
        elif kind == "cue_delivered":
            cue = cue_from_json(ev["cue"])
            if isinstance(cue, GeometricObservation):
                for d in cue.detections:
                    associate_detection(d, graph, tick=cue.tick)
                assertions = extract_relations(cue, graph, model.surfaces,
                                               model.rooms)
                _replay_apply(graph, assertions)
            else:
                decision = interpret_with_client(client, cue, graph, task, t)
                _replay_apply(graph, decision.assertions)
        elif kind == "action_completed" and ev["ok"]:
            action = ev["action"]
            if action["type"] == "navigate":
                x, y = ev["robot_pose"]
                graph.set_node_pose(model.robot_id, Pose(x, y, 0.0), t)
            elif action["type"] == "pick":
                _replay_apply(graph, [_held_assertion(action["label"], t)])
    return graph


def _replay_apply(graph: SceneGraph, assertions) -> None:
    for a in assertions:
        try:
            graph.apply_assertion(a)
        except RejectedAssertionError:
            continue


# ── headless entry point ──────────────────────────────────────────────────────


def run_headless(scenario_path, *,
                 seed: Optional[int] = None,
                 ticks_max: int = TICKS_MAX_DEFAULT,
                 no_cues: bool = False,
                 report_path=None,
                 log_path=None,
                 client: Optional[InterpreterClient] = None
                 ) -> tuple[RunReport, Optional[Path]]:
    """Load a scenario, run it to completion, write the log and report."""
    scenario = load_scenario_file(scenario_path)
    if seed is not None:
        scenario.world.rng_seed = seed
    executive = Executive(
        scenario,
        log_path=log_path,
        ticks_max=ticks_max,
        cues_enabled=not no_cues,
        client=client,
    )
    try:
        report = executive.run()
    finally:
        executive.log.close()
    if report_path is not None:
        Path(report_path).write_text(
            json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )
    return report, Path(log_path) if log_path else None
