// The console's view model. Everything the panels show derives purely from
// (initial snapshot, ordered run events): folding the same stream twice
// yields deeply equal models, and the cursor never moves backwards.

import type {
  CueJson,
  GraphDeltaEvent,
  PlanRevisedEvent,
  RunEvent,
  StateSnapshot,
} from "./types.js";

export interface PlanRevisionRow {
  tick: number;
  revision: number;
  firstTargetLabel: string | null;
  actionSummary: string[];
}

export interface BeliefRow {
  subject: string;
  relation: string;
  landmark: string;
  confidence: number;
  source: string;
  assertedAt: number;
}

export interface CueRow {
  tick: number;
  kind: string;
  detail: string;
}

export interface ViewModel {
  snapshot: StateSnapshot | null;
  cursor: number;
  connected: boolean;
  tick: number;
  taskStatus: string;
  taskObject: string | null;
  planRevisions: PlanRevisionRow[];
  beliefs: Map<string, BeliefRow>;
  cues: CueRow[];
  robotTrail: [number, number][];
  queries: number[];
  rejected: number;
}

export function initialViewModel(): ViewModel {
  return {
    snapshot: null,
    cursor: 0,
    connected: false,
    tick: 0,
    taskStatus: "idle",
    taskObject: null,
    planRevisions: [],
    beliefs: new Map(),
    cues: [],
    robotTrail: [],
    queries: [],
    rejected: 0,
  };
}

const PLACEMENTS = new Set(["on", "in", "held_by", "at"]);

/** Adopt a fresh /state snapshot; beliefs re-derive from its graph. */
export function applySnapshot(vm: ViewModel, snapshot: StateSnapshot): ViewModel {
  const next = { ...vm, snapshot, tick: snapshot.tick };
  if (snapshot.task) {
    next.taskStatus = snapshot.task.status;
    next.taskObject = snapshot.task.object_label;
  }
  next.beliefs = beliefsFromGraph(snapshot);
  return next;
}

function beliefsFromGraph(snapshot: StateSnapshot): Map<string, BeliefRow> {
  const labels = new Map(snapshot.graph.nodes.map((n) => [n.id, n.label]));
  const kinds = new Map(snapshot.graph.nodes.map((n) => [n.id, n.kind]));
  const beliefs = new Map<string, BeliefRow>();
  for (const edge of snapshot.graph.edges) {
    if (!edge.active || !PLACEMENTS.has(edge.relation)) continue;
    if (kinds.get(edge.subject) !== "object") continue;
    beliefs.set(labels.get(edge.subject) ?? String(edge.subject), {
      subject: labels.get(edge.subject) ?? String(edge.subject),
      relation: edge.relation,
      landmark: labels.get(edge.object) ?? String(edge.object),
      confidence: edge.confidence,
      source: edge.source,
      assertedAt: edge.asserted_at,
    });
  }
  return beliefs;
}

/** Pure reducer: returns a new model, never mutates the input. */
export function applyEvent(vm: ViewModel, event: RunEvent): ViewModel {
  const next: ViewModel = {
    ...vm,
    cursor: Math.max(vm.cursor + 1, vm.cursor), // monotone by construction
    tick: Math.max(vm.tick, event.tick),
    planRevisions: vm.planRevisions,
    beliefs: vm.beliefs,
    cues: vm.cues,
    robotTrail: vm.robotTrail,
    queries: vm.queries,
  };
  switch (event.type) {
    case "task_issued": {
      const task = event["task"] as { object_label: string } | undefined;
      next.taskObject = task?.object_label ?? null;
      next.taskStatus = "active";
      break;
    }
    case "plan_revised": {
      const ev = event as PlanRevisedEvent;
      next.planRevisions = [
        ...vm.planRevisions,
        {
          tick: ev.tick,
          revision: ev.revision,
          firstTargetLabel: ev.first_target_label,
          actionSummary: ev.plan.actions.map((a) => a.type),
        },
      ];
      break;
    }
    case "graph_delta": {
      const ev = event as GraphDeltaEvent;
      const beliefs = new Map(vm.beliefs);
      for (const edge of ev.added_edges) {
        if (!PLACEMENTS.has(edge.relation)) continue;
        const subject = ev.labels[String(edge.subject)];
        const landmark = ev.labels[String(edge.object)];
        if (!subject || !landmark) continue;
        const current = beliefs.get(subject);
        if (current && current.assertedAt > edge.asserted_at) continue;
        beliefs.set(subject, {
          subject,
          relation: edge.relation,
          landmark,
          confidence: edge.confidence,
          source: edge.source,
          assertedAt: edge.asserted_at,
        });
      }
      next.beliefs = beliefs;
      break;
    }
    case "cue_delivered": {
      const cue = event["cue"] as CueJson;
      next.cues = [
        ...vm.cues,
        {
          tick: event.tick,
          kind: cue.type,
          detail: cue.text ?? (cue.type === "gesture" ? "(pointing)" : ""),
        },
      ];
      break;
    }
    case "action_started":
    case "action_completed": {
      const pose = event["robot_pose"] as [number, number];
      const last = vm.robotTrail[vm.robotTrail.length - 1];
      if (!last || last[0] !== pose[0] || last[1] !== pose[1]) {
        next.robotTrail = [...vm.robotTrail, pose];
      }
      break;
    }
    case "query_asked":
      next.queries = [...vm.queries, event["human"] as number];
      break;
    case "task_succeeded":
      next.taskStatus = "succeeded";
      break;
    case "task_failed":
      next.taskStatus = "failed";
      break;
    case "assertion_rejected":
      next.rejected = vm.rejected + 1;
      break;
    default:
      break;
  }
  return next;
}

export function applyEvents(vm: ViewModel, events: RunEvent[]): ViewModel {
  return events.reduce(applyEvent, vm);
}

export function setConnected(vm: ViewModel, connected: boolean): ViewModel {
  return { ...vm, connected };
}
