// REST + event-stream client for the mission service. Works in the browser
// and under node 20 (global fetch with streaming bodies in both).

import { framesToEvents, parseSseChunk } from "./sse.js";
import type { MissionEvent, OperatorDecision, ScenarioDoc, Snapshot } from "./types.js";

export class ConflictError extends Error {}

export class MissionClient {
  constructor(
    public readonly base: string,
    public readonly missionId: string,
    private readonly token: string | null = null,
  ) {}

  private headers(): Record<string, string> {
    const headers: Record<string, string> = { "Content-Type": "application/json" };
    if (this.token) headers["X-Auth-Token"] = this.token;
    return headers;
  }

  private async request(method: string, path: string, body?: unknown): Promise<unknown> {
    const response = await fetch(`${this.base}${path}`, {
      method,
      headers: this.headers(),
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (response.status === 409) {
      throw new ConflictError(await response.text());
    }
    if (!response.ok) {
      throw new Error(`${method} ${path} failed: ${response.status} ${await response.text()}`);
    }
    return response.json();
  }

  static async create(base: string, scenario: ScenarioDoc, token: string | null = null): Promise<MissionClient> {
    const response = await fetch(`${base}/missions`, {
      method: "POST",
      headers: { "Content-Type": "application/json", ...(token ? { "X-Auth-Token": token } : {}) },
      body: JSON.stringify({ scenario }),
    });
    if (!response.ok) throw new Error(`mission creation failed: ${response.status}`);
    const body = (await response.json()) as { mission_id: string };
    return new MissionClient(base, body.mission_id, token);
  }

  snapshot(): Promise<Snapshot> {
    return this.request("GET", `/missions/${this.missionId}/snapshot`) as Promise<Snapshot>;
  }

  control(command: string, extra: Record<string, unknown> = {}): Promise<unknown> {
    return this.request("POST", `/missions/${this.missionId}/control`, { command, ...extra });
  }

  step(ticks = 1): Promise<unknown> {
    return this.control("step", { ticks });
  }

  resolveApproval(decision: OperatorDecision): Promise<unknown> {
    return this.request("POST", `/missions/${this.missionId}/approvals`, decision);
  }

  operatorAction(body: Record<string, unknown>): Promise<unknown> {
    return this.request("POST", `/missions/${this.missionId}/operator`, {
      approval_id: "",
      ...body,
    });
  }

  async replay(): Promise<string> {
    const response = await fetch(`${this.base}/missions/${this.missionId}/replay`, {
      headers: this.token ? { "X-Auth-Token": this.token } : {},
    });
    if (response.status === 409) throw new ConflictError(await response.text());
    if (!response.ok) throw new Error(`replay fetch failed: ${response.status}`);
    return response.text();
  }

  /**
   * Read the event stream once from `fromSeq`, delivering events in order.
   * Returns the next cursor, so a dropped connection resumes without gaps
   * or duplicates. `signal` aborts cleanly (used when the console closes).
   */
  async streamEvents(
    fromSeq: number,
    onEvents: (events: MissionEvent[]) => void,
    signal?: AbortSignal,
  ): Promise<{ cursor: number; ended: boolean }> {
    const response = await fetch(
      `${this.base}/missions/${this.missionId}/events?from_seq=${fromSeq}`,
      { headers: this.token ? { "X-Auth-Token": this.token } : {}, signal },
    );
    if (!response.ok || !response.body) {
      throw new Error(`event stream failed: ${response.status}`);
    }
    const reader = response.body.getReader();
    const decoder = new TextDecoder();
    let buffer = "";
    let cursor = fromSeq;
    let ended = false;
    try {
      for (;;) {
        const { done, value } = await reader.read();
        if (done) break;
        buffer += decoder.decode(value, { stream: true });
        const { frames, rest } = parseSseChunk(buffer);
        buffer = rest;
        const parsed = framesToEvents(frames);
        const fresh = parsed.events.filter((e) => e.seq >= cursor);
        if (fresh.length > 0) {
          cursor = fresh[fresh.length - 1].seq + 1;
          onEvents(fresh);
        }
        if (parsed.ended) {
          ended = true;
          break;
        }
      }
    } finally {
      reader.releaseLock();
    }
    return { cursor, ended };
  }
}
