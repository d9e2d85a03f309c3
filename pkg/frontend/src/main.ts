// Console wiring: one event-stream subscription feeding one reducer loop.
//
// The console is a pure client of the mission service; closing the tab never
// changes a mission's outcome. Reconnects resume from the cursor, so no
// event is missed or double-applied.

import { ConflictError, MissionClient } from "./api.js";
import { MapRenderer, renderAlerts, renderApprovals, renderBeliefPanel, renderTracePanel } from "./render.js";
import { ConsoleState, initialState, reduce } from "./state.js";
import type { ApprovalView, ScenarioDoc } from "./types.js";

interface Elements {
  map: HTMLCanvasElement;
  belief: HTMLElement;
  approvals: HTMLElement;
  trace: HTMLElement;
  alerts: HTMLElement;
  status: HTMLElement;
  clueSelect: HTMLSelectElement;
}

export class ConsoleSession {
  private state: ConsoleState = initialState();
  private renderer: MapRenderer | null = null;
  private selectedClue: string | null = null;
  private abort = new AbortController();
  private closed = false;

  constructor(
    private readonly client: MissionClient,
    private readonly scenario: ScenarioDoc,
    private readonly elements: Elements,
  ) {}

  /** Subscribe from the current cursor and render until closed. */
  async run(): Promise<void> {
    this.renderer = new MapRenderer(this.elements.map, this.scenario);
    this.populateClueSelect();
    this.render();
    while (!this.closed) {
      try {
        const { cursor, ended } = await this.client.streamEvents(
          this.state.cursor,
          (events) => this.dispatch({ type: "events", events }),
          this.abort.signal,
        );
        this.state = { ...this.state, cursor };
        if (ended) break;
      } catch (error) {
        if (this.closed) break;
        this.elements.status.textContent = `stream dropped, reconnecting… (${error})`;
      }
      // The service closes non-follow streams once drained; poll again from
      // the cursor after a short pause.
      await new Promise((resolve) => setTimeout(resolve, 300));
    }
  }

  close(): void {
    this.closed = true;
    this.abort.abort();
  }

  private dispatch(action: Parameters<typeof reduce>[1]): void {
    this.state = reduce(this.state, action);
    this.render();
  }

  private populateClueSelect(): void {
    this.elements.clueSelect.innerHTML = "<option value=''>— clue —</option>";
    for (const clue of this.scenario.clues) {
      const option = document.createElement("option");
      option.value = clue.id;
      option.textContent = clue.id;
      this.elements.clueSelect.appendChild(option);
    }
    this.elements.clueSelect.addEventListener("change", () => {
      this.selectedClue = this.elements.clueSelect.value || null;
      this.render();
    });
  }

  private act(approval: ApprovalView, decision: "approve" | "reject"): void {
    if (this.state.lockedApprovals.has(approval.id)) return; // double click
    this.dispatch({ type: "act", approvalId: approval.id });
    this.client
      .resolveApproval({ approval_id: approval.id, decision, operator_id: "console" })
      .catch((error) => {
        // Already resolved elsewhere: surface it without wrecking the queue.
        const message = error instanceof ConflictError ? "resolved elsewhere" : String(error);
        this.dispatch({ type: "act_failed", approvalId: approval.id, error: message });
      });
  }

  private render(): void {
    const { elements, state } = this;
    this.renderer?.draw(state);
    renderBeliefPanel(elements.belief, state);
    renderApprovals(elements.approvals, state, (approval, decision) => this.act(approval, decision));
    renderTracePanel(elements.trace, state, this.selectedClue);
    renderAlerts(elements.alerts, state, (seq) => {
      elements.status.textContent = `alert links to event #${seq}`;
    });
    const terminal = state.terminal ? ` — terminal: ${state.terminal.toUpperCase()}` : "";
    const err = state.lastError ? ` — ${state.lastError}` : "";
    elements.status.textContent =
      `tick ${state.tick} · cursor ${state.cursor} · dominant ${state.dominant ?? "?"}${terminal}${err}`;
  }
}

async function boot(): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const base = params.get("service") ?? "http://127.0.0.1:8340";
  const missionId = params.get("mission");
  const scenarioUrl = params.get("scenario") ?? "../scenarios/rockies_lake.json";

  const elements: Elements = {
    map: document.getElementById("map") as HTMLCanvasElement,
    belief: document.getElementById("belief")!,
    approvals: document.getElementById("approvals")!,
    trace: document.getElementById("trace")!,
    alerts: document.getElementById("alerts")!,
    status: document.getElementById("status")!,
    clueSelect: document.getElementById("clue-select") as HTMLSelectElement,
  };

  const scenario = (await (await fetch(scenarioUrl)).json()) as ScenarioDoc;
  let client: MissionClient;
  if (missionId) {
    client = new MissionClient(base, missionId);
  } else {
    client = await MissionClient.create(base, scenario);
    await client.control("start");
  }
  elements.status.textContent = `connected to ${client.missionId}`;

  const session = new ConsoleSession(client, scenario, elements);
  window.addEventListener("beforeunload", () => session.close());
  await session.run();
}

if (typeof window !== "undefined" && typeof document !== "undefined") {
  boot().catch((error) => {
    const status = document.getElementById("status");
    if (status) status.textContent = `error: ${error}`;
  });
}
