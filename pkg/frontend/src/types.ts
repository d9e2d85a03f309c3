// Payload shapes of the mission service API (schema version 1).

export const STRATEGIES = ["Trail", "Shelter", "Waterways", "Contour", "Region"] as const;
export type Strategy = (typeof STRATEGIES)[number];

export type Distribution = Record<Strategy, number>;

export interface MissionEvent {
  seq: number;
  tick: number;
  kind: string;
  [key: string]: unknown;
}

export interface AgentSnapshot {
  id: string;
  x: number;
  y: number;
  altitude_m: number;
  battery_fraction: number;
  mode: string;
  task_id: string | null;
}

export interface TaskView {
  id: string;
  kind: string;
  strategy: Strategy;
  waypoints: [number, number][];
  priority: number;
  provenance: string;
  clue_id: string | null;
}

export interface StageOutputView {
  stage: number;
  name: string;
  payload: Record<string, unknown>;
  raw_text: string | null;
  repaired: boolean;
}

export interface TraceView {
  clue_id: string;
  detection_id: string;
  inspected: boolean;
  stages: StageOutputView[];
  disposition: string | null;
  local_action: string | null;
  relevance: string | null;
  cv_confidence: string | null;
  interp_confidence: string | null;
  strategy: Strategy | null;
  strength: number | null;
  verdict: { decision: string; rationale: string } | null;
  concerns: { persona: string; severity: string; rule_id: string; grounding: string; stance: string }[];
  warnings: string[];
}

export interface ApprovalView {
  id: string;
  kind: string;
  created_tick: number;
  timeout_ticks: number;
  context: {
    clue_id?: string;
    detection_id?: string;
    image_ref?: string;
    geolocation?: [number, number];
    plan?: { strategy: Strategy; tasks: { kind: string }[] };
    rationale?: string;
    entropy?: number | null;
    cost_minutes?: number;
    concerns?: TraceView["concerns"];
    relevance?: string;
    strength?: number | null;
  };
  resolved: boolean;
  resolution: string | null;
}

export interface Snapshot {
  tick: number;
  clock_s: number;
  terminal: string | null;
  belief: Distribution;
  entropy: number;
  dominant: Strategy;
  active_strategy: Strategy;
  agents: AgentSnapshot[];
  task_queue_size: number;
  pending_approvals: ApprovalView[];
  queued_tasks: Record<string, unknown>[];
  coverage: Distribution;
  detected_clues: string[];
  events_total: number;
  events: MissionEvent[];
}

export interface GridDoc {
  width: number;
  height: number;
  cell_size_m: number;
  feature_rows: [number, string][][];
  elevation_rows: [number, number][][];
}

export interface ScenarioDoc {
  name: string;
  grid: GridDoc;
  clues: { id: string; cell: [number, number]; description: string }[];
  profile: { lkp_cell: [number, number]; description?: string };
  [key: string]: unknown;
}

export interface AlertView {
  seq: number; // links back to the originating event
  tick: number;
  level: "info" | "warn";
  text: string;
}

export interface OperatorDecision {
  approval_id: string;
  decision: "approve" | "reject" | "modify";
  plan_edits?: unknown[];
  operator_id?: string;
}
