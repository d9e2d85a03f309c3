// DOM rendering. Everything here is a pure projection of ConsoleState plus
// the static scenario document; no mission state lives in the DOM.

import {
  beliefBars,
  ConsoleState,
  pendingApprovals,
  strengthDerivation,
  tasksOnMap,
  traceFor,
} from "./state.js";
import type { ApprovalView, GridDoc, ScenarioDoc } from "./types.js";

const FEATURE_COLORS: Record<string, string> = {
  open: "#d9d0b8",
  forest: "#5d8a57",
  shrubland: "#a4b06a",
  water: "#4f86c6",
  trail: "#b08a5a",
  building: "#8a6d8f",
  shoreline: "#e4d08e",
};

const STRATEGY_COLORS: Record<string, string> = {
  Trail: "#b08a5a",
  Shelter: "#8a6d8f",
  Waterways: "#4f86c6",
  Contour: "#c96f4a",
  Region: "#5d8a57",
};

export function expandGrid(grid: GridDoc): string[][] {
  return grid.feature_rows.map((row) => {
    const cells: string[] = [];
    for (const [count, feature] of row) {
      for (let i = 0; i < count; i++) cells.push(feature);
    }
    return cells;
  });
}

export class MapRenderer {
  private readonly features: string[][];
  private readonly scale: number;

  constructor(
    private readonly canvas: HTMLCanvasElement,
    private readonly scenario: ScenarioDoc,
  ) {
    this.features = expandGrid(scenario.grid);
    this.scale = Math.max(
      2,
      Math.floor(Math.min(960 / scenario.grid.width, 640 / scenario.grid.height)),
    );
    canvas.width = scenario.grid.width * this.scale;
    canvas.height = scenario.grid.height * this.scale;
  }

  private toPx(xMeters: number, yMeters: number): [number, number] {
    const cell = this.scenario.grid.cell_size_m;
    return [(xMeters / cell) * this.scale, (yMeters / cell) * this.scale];
  }

  draw(state: ConsoleState): void {
    const ctx = this.canvas.getContext("2d");
    if (!ctx) return;
    const s = this.scale;

    for (let row = 0; row < this.features.length; row++) {
      for (let col = 0; col < this.features[row].length; col++) {
        ctx.fillStyle = FEATURE_COLORS[this.features[row][col]] ?? "#cccccc";
        ctx.fillRect(col * s, row * s, s, s);
      }
    }

    // Last-known point.
    const [lkpCol, lkpRow] = this.scenario.profile.lkp_cell;
    ctx.strokeStyle = "#222";
    ctx.lineWidth = 2;
    ctx.strokeRect(lkpCol * s - 2, lkpRow * s - 2, s + 4, s + 4);

    // Active task geometry, colored by strategy.
    for (const task of tasksOnMap(state)) {
      ctx.strokeStyle = STRATEGY_COLORS[task.strategy] ?? "#333";
      ctx.lineWidth = 2;
      ctx.beginPath();
      task.waypoints.forEach(([x, y], i) => {
        const [px, py] = this.toPx(x, y);
        if (i === 0) ctx.moveTo(px, py);
        else ctx.lineTo(px, py);
      });
      ctx.stroke();
    }

    // Clue markers; greyed out once rejected.
    for (const clue of this.scenario.clues) {
      const marker = state.clueMarkers.get(clue.id);
      if (!marker) continue;
      const [col, row] = clue.cell;
      ctx.fillStyle = marker.disposition === "rejected" ? "#9a9a9a" : "#e3b52a";
      ctx.beginPath();
      ctx.arc(col * s + s / 2, row * s + s / 2, Math.max(3, s / 2), 0, Math.PI * 2);
      ctx.fill();
    }

    // Agents.
    for (const agent of state.agents.values()) {
      const [px, py] = this.toPx(agent.x, agent.y);
      ctx.fillStyle = agent.mode === "landed" ? "#555" : "#d7263d";
      ctx.beginPath();
      ctx.arc(px, py, Math.max(3, s / 2), 0, Math.PI * 2);
      ctx.fill();
      ctx.fillStyle = "#111";
      ctx.font = "10px sans-serif";
      ctx.fillText(agent.id.replace("suas-", "#"), px + 4, py - 4);
    }
  }
}

export function renderBeliefPanel(container: HTMLElement, state: ConsoleState): void {
  const bars = beliefBars(state);
  const entropy = state.entropy ?? 0;
  const rows = bars
    .map(
      (bar) => `
      <div class="belief-row${bar.dominant ? " dominant" : ""}">
        <span class="label">${bar.strategy}</span>
        <span class="bar"><span class="fill" style="width:${bar.percent}%;background:${STRATEGY_COLORS[bar.strategy]}"></span></span>
        <span class="value">${bar.percent}%</span>
      </div>`,
    )
    .join("");
  container.innerHTML = `
    ${rows || "<em>waiting for belief…</em>"}
    <div class="entropy">entropy <b>${entropy.toFixed(3)}</b>
      <span class="gauge"><span style="width:${Math.round(entropy * 100)}%"></span></span>
      ${entropy >= 0.85 ? "<b class='hi'>high</b>" : "low"}
    </div>`;
}

export function renderApprovals(
  container: HTMLElement,
  state: ConsoleState,
  onAct: (approval: ApprovalView, decision: "approve" | "reject") => void,
): void {
  const items = pendingApprovals(state);
  container.innerHTML = items.length ? "" : "<em>no pending approvals</em>";
  for (const approval of items) {
    const locked = state.lockedApprovals.has(approval.id);
    const card = document.createElement("div");
    card.className = "approval";
    const plan = approval.context.plan;
    card.innerHTML = `
      <div class="kind">${approval.kind} <code>${approval.id}</code></div>
      <div class="body">
        clue <b>${approval.context.clue_id ?? "?"}</b>
        → strategy <b>${plan?.strategy ?? "?"}</b>
        (strength ${approval.context.strength?.toFixed(3) ?? "n/a"},
         cost ${approval.context.cost_minutes?.toFixed(1) ?? "0"} min)
        <div class="rationale">${approval.context.rationale ?? ""}</div>
        ${(approval.context.concerns ?? [])
          .map((c) => `<div class="concern ${c.severity}">${c.persona}: ${c.grounding}</div>`)
          .join("")}
      </div>`;
    for (const decision of ["approve", "reject"] as const) {
      const button = document.createElement("button");
      button.textContent = decision;
      button.disabled = locked;
      button.addEventListener("click", () => onAct(approval, decision));
      card.appendChild(button);
    }
    container.appendChild(card);
  }
}

export function renderTracePanel(container: HTMLElement, state: ConsoleState, clueId: string | null): void {
  if (!clueId) {
    container.innerHTML = "<em>select a clue to inspect its reasoning trace</em>";
    return;
  }
  const trace = traceFor(state, clueId);
  if (!trace) {
    container.innerHTML = `<em>no trace yet for ${clueId}</em>`;
    return;
  }
  const derivation = strengthDerivation(trace);
  container.innerHTML = `
    <h3>${trace.clue_id} <small>${trace.detection_id}${trace.inspected ? " (post-inspection)" : ""}</small></h3>
    <div>disposition: <b>${trace.disposition}</b> (${trace.local_action})</div>
    <div>relevance ${trace.relevance} · cv ${trace.cv_confidence} · tactical ${trace.interp_confidence}
         → strategy <b>${trace.strategy ?? "-"}</b></div>
    <div>update strength: <b>${trace.strength ?? "none"}</b>${derivation ? ` <small>= ${derivation}</small>` : ""}</div>
    <div>verdict: ${trace.verdict ? `${trace.verdict.decision} — ${trace.verdict.rationale}` : "-"}</div>
    ${trace.concerns.map((c) => `<div class="concern ${c.severity}">${c.persona} [${c.severity}] ${c.grounding}</div>`).join("")}
    <ol>
      ${trace.stages
        .map(
          (stage) => `<li><b>${stage.name}</b>${stage.repaired ? " (repaired)" : ""}
            <pre>${JSON.stringify(stage.payload, null, 1)}</pre></li>`,
        )
        .join("")}
    </ol>`;
}

export function renderAlerts(container: HTMLElement, state: ConsoleState, onJump: (seq: number) => void): void {
  container.innerHTML = "";
  for (const alert of state.alerts.slice(-12).reverse()) {
    const row = document.createElement("div");
    row.className = `alert ${alert.level}`;
    row.innerHTML = `<code>#${alert.seq} t${alert.tick}</code> ${alert.text}`;
    row.addEventListener("click", () => onJump(alert.seq));
    container.appendChild(row);
  }
}
