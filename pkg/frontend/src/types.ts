// Wire types mirroring the run service API. Field names match the server's
// JSON exactly; everything here is read-only data.

export interface PoseJson {
  position: [number, number, number];
  yaw: number | null;
}

export interface NodeJson {
  id: number;
  kind: "room" | "furniture" | "object" | "human" | "robot";
  label: string;
  pose: PoseJson | null;
  created_at: number;
  last_updated: number;
}

export interface EdgeJson {
  subject: number;
  relation: "on" | "in" | "near" | "held_by" | "at";
  object: number;
  confidence: number;
  source: "geometric" | "verbal" | "written" | "gesture" | "prior";
  asserted_at: number;
  active: boolean;
}

export interface GraphJson {
  nodes: NodeJson[];
  edges: EdgeJson[];
  tick: number;
}

export interface ActionJson {
  type: "navigate" | "perceive" | "query_human" | "pick" | "handover" | "place";
  target?: number;
  human?: number;
  label?: string;
}

export interface PlanJson {
  task_id: string;
  actions: ActionJson[];
  cursor: number;
  revision: number;
  created_at: number;
  believed_target: number | null;
}

export interface TaskJson {
  id: string;
  object_label: string;
  issued_at: number;
  status: "active" | "succeeded" | "failed" | "cancelled";
  destination: number | null;
  hint: string | null;
}

export interface StateSnapshot {
  tick: number;
  robot_pose: [number, number];
  graph: GraphJson;
  plan: PlanJson | null;
  task: TaskJson | null;
  mode: "paused" | "running" | "finished";
  log_length: number;
}

// Run-log events (one JSON object per stream line). Only the fields the
// console consumes are declared; extra fields pass through untouched.
export interface RunEvent {
  type:
    | "task_issued"
    | "plan_revised"
    | "action_started"
    | "action_completed"
    | "detected"
    | "cue_delivered"
    | "query_asked"
    | "graph_delta"
    | "assertion_rejected"
    | "task_succeeded"
    | "task_failed";
  tick: number;
  [key: string]: unknown;
}

export interface PlanRevisedEvent extends RunEvent {
  type: "plan_revised";
  revision: number;
  task_id: string;
  first_target: number | null;
  first_target_label: string | null;
  plan: PlanJson;
}

export interface GraphDeltaEvent extends RunEvent {
  type: "graph_delta";
  added_nodes: number[];
  updated_nodes: number[];
  added_edges: Omit<EdgeJson, "active">[];
  superseded_edges: Omit<EdgeJson, "active">[];
  labels: Record<string, string>;
}

export interface CueJson {
  type: "verbal" | "written" | "gesture" | "geometric";
  text?: string;
  speaker?: number | null;
  seen_at?: number[];
  origin?: number[];
  direction?: number[];
  utterance?: string | null;
  tick?: number;
}
