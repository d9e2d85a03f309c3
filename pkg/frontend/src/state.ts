// Console view-model: a pure reducer over the mission event stream.
//
// All state derives from service events; the console adds nothing of its
// own beyond optimistic locks on approval forms (cleared by the matching
// approval_resolved event, so a conflicting resolution elsewhere simply
// unlocks and updates the queue).

import {
  AgentSnapshot,
  AlertView,
  ApprovalView,
  Distribution,
  MissionEvent,
  STRATEGIES,
  Strategy,
  TaskView,
  TraceView,
} from "./types.js";

export interface ConsoleState {
  cursor: number; // next event sequence to request
  tick: number;
  belief: Distribution | null;
  entropy: number | null;
  dominant: Strategy | null;
  agents: Map<string, AgentSnapshot>;
  home: [number, number] | null;
  assignedTasks: Map<string, TaskView>; // task id -> task (active assignments)
  agentTask: Map<string, string>; // agent id -> task id
  clueMarkers: Map<string, { disposition: string | null; detectionSeq: number }>;
  traces: Map<string, TraceView>; // latest trace per clue id
  approvals: Map<string, ApprovalView>;
  lockedApprovals: Set<string>; // optimistic UI locks awaiting acknowledgement
  alerts: AlertView[];
  coverage: Partial<Distribution>;
  terminal: string | null;
  lastError: string | null;
}

export function initialState(): ConsoleState {
  return {
    cursor: 0,
    tick: 0,
    belief: null,
    entropy: null,
    dominant: null,
    agents: new Map(),
    home: null,
    assignedTasks: new Map(),
    agentTask: new Map(),
    clueMarkers: new Map(),
    traces: new Map(),
    approvals: new Map(),
    lockedApprovals: new Set(),
    alerts: [],
    coverage: {},
    terminal: null,
    lastError: null,
  };
}

export type ConsoleAction =
  | { type: "events"; events: MissionEvent[] }
  | { type: "act"; approvalId: string }
  | { type: "act_failed"; approvalId: string; error: string }
  | { type: "reset" };

export function reduce(state: ConsoleState, action: ConsoleAction): ConsoleState {
  switch (action.type) {
    case "reset":
      return initialState();
    case "act": {
      // Lock the form until the acknowledgement event arrives; repeated
      // clicks while locked are dropped by the caller.
      const locked = new Set(state.lockedApprovals);
      locked.add(action.approvalId);
      return { ...state, lockedApprovals: locked };
    }
    case "act_failed": {
      const locked = new Set(state.lockedApprovals);
      locked.delete(action.approvalId);
      return { ...state, lockedApprovals: locked, lastError: action.error };
    }
    case "events": {
      const next = {
        ...state,
        agents: new Map(state.agents),
        assignedTasks: new Map(state.assignedTasks),
        agentTask: new Map(state.agentTask),
        clueMarkers: new Map(state.clueMarkers),
        traces: new Map(state.traces),
        approvals: new Map(state.approvals),
        lockedApprovals: new Set(state.lockedApprovals),
        alerts: [...state.alerts],
        coverage: { ...state.coverage },
      };
      for (const event of action.events) {
        if (event.seq < next.cursor) continue; // replayed duplicate
        applyEvent(next, event);
        next.cursor = event.seq + 1;
        next.tick = event.tick;
      }
      return next;
    }
  }
}

function applyEvent(state: ConsoleState, event: MissionEvent): void {
  switch (event.kind) {
    case "belief_init":
    case "belief_update": {
      state.belief = event.distribution as Distribution;
      state.entropy = event.entropy as number;
      state.dominant = event.dominant as Strategy;
      break;
    }
    case "agent_status": {
      for (const agent of event.agents as AgentSnapshot[]) {
        state.agents.set(agent.id, agent);
      }
      state.home = (event.home as [number, number]) ?? state.home;
      break;
    }
    case "task_assigned": {
      const task = event.task as TaskView;
      state.assignedTasks.set(task.id, task);
      state.agentTask.set(event.agent as string, task.id);
      break;
    }
    case "task_completed": {
      const taskId = event.task_id as string;
      state.assignedTasks.delete(taskId);
      for (const [agent, id] of state.agentTask) {
        if (id === taskId) state.agentTask.delete(agent);
      }
      break;
    }
    case "detection": {
      state.clueMarkers.set(event.clue_id as string, {
        disposition: null,
        detectionSeq: event.seq,
      });
      break;
    }
    case "trace": {
      const trace = event.trace as TraceView;
      state.traces.set(trace.clue_id, trace);
      const marker = state.clueMarkers.get(trace.clue_id);
      if (marker) {
        state.clueMarkers.set(trace.clue_id, { ...marker, disposition: trace.disposition });
      }
      break;
    }
    case "approval_created": {
      // Clone: the reducer never mutates event payloads or prior states.
      const approval = { ...(event.approval as ApprovalView) };
      state.approvals.set(approval.id, approval);
      state.alerts.push({
        seq: event.seq,
        tick: event.tick,
        level: "warn",
        text: `approval needed (${approval.kind}): ${approval.context.rationale ?? ""}`,
      });
      break;
    }
    case "approval_resolved": {
      const id = event.approval_id as string;
      const approval = state.approvals.get(id);
      if (approval) {
        state.approvals.set(id, {
          ...approval,
          resolved: true,
          resolution: event.decision as string,
        });
      }
      state.lockedApprovals.delete(id); // acknowledgement unlocks the form
      break;
    }
    case "notify": {
      state.alerts.push({
        seq: event.seq,
        tick: event.tick,
        level: "info",
        text: event.message as string,
      });
      break;
    }
    case "envelope_enforced": {
      const enforcement = event.enforcement as { constraint: string };
      state.alerts.push({
        seq: event.seq,
        tick: event.tick,
        level: "warn",
        text: `envelope: ${enforcement.constraint}`,
      });
      break;
    }
    case "coverage": {
      state.coverage = event.fractions as Distribution;
      break;
    }
    case "mission_terminal": {
      state.terminal = event.outcome as string;
      break;
    }
    default:
      break; // unknown kinds are ignored; the console is forward-compatible
  }
}

// ---------------------------------------------------------------------------
// Selectors

export interface BeliefBar {
  strategy: Strategy;
  probability: number;
  percent: number; // integer percents that always total 100
  dominant: boolean;
}

export function beliefBars(state: ConsoleState): BeliefBar[] {
  if (!state.belief) return [];
  const probs = STRATEGIES.map((s) => state.belief![s]);
  const percents = roundToHundred(probs);
  return STRATEGIES.map((s, i) => ({
    strategy: s,
    probability: probs[i],
    percent: percents[i],
    dominant: s === state.dominant,
  }));
}

// Largest-remainder rounding so the rendered bars always sum to 100.
export function roundToHundred(probs: number[]): number[] {
  const scaled = probs.map((p) => p * 100);
  const floors = scaled.map(Math.floor);
  let remainder = 100 - floors.reduce((a, b) => a + b, 0);
  const order = scaled
    .map((v, i) => ({ frac: v - floors[i], i }))
    .sort((a, b) => b.frac - a.frac || a.i - b.i);
  const result = [...floors];
  for (let k = 0; k < order.length && remainder > 0; k++, remainder--) {
    result[order[k].i] += 1;
  }
  return result;
}

export function pendingApprovals(state: ConsoleState): ApprovalView[] {
  return [...state.approvals.values()]
    .filter((a) => !a.resolved)
    .sort((a, b) => a.id.localeCompare(b.id));
}

export function traceFor(state: ConsoleState, clueId: string): TraceView | null {
  return state.traces.get(clueId) ?? null;
}

export function tasksOnMap(state: ConsoleState): TaskView[] {
  return [...state.assignedTasks.values()].sort((a, b) => a.id.localeCompare(b.id));
}

export function strengthDerivation(trace: TraceView): string | null {
  if (trace.relevance == null || trace.cv_confidence == null || trace.interp_confidence == null) {
    return null;
  }
  const scale: Record<string, number> = { High: 0.8, Medium: 0.4, Low: 0.1 };
  const r = scale[trace.relevance];
  const cv = scale[trace.cv_confidence];
  const interp = scale[trace.interp_confidence];
  const value = 0.5 * r + 0.5 * (0.5 * cv + 0.5 * interp);
  return `0.5·${r} + 0.5·(0.5·${cv} + 0.5·${interp}) = ${value.toFixed(4).replace(/0+$/, "").replace(/\.$/, "")}`;
}
