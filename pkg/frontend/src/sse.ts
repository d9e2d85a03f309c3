// Incremental parser for text/event-stream responses.
//
// The service emits frames of the form "id: <seq>\ndata: <json>\n\n" plus a
// terminating "event: end" frame once the mission is terminal. The parser is
// a pure function over an accumulating buffer so it works with any transport
// (fetch streaming, EventSource fallback, tests).

import type { MissionEvent } from "./types.js";

export interface SseFrame {
  id: number | null;
  event: string | null;
  data: string;
}

export interface SseParseResult {
  frames: SseFrame[];
  rest: string;
}

export function parseSseChunk(buffer: string): SseParseResult {
  const frames: SseFrame[] = [];
  let rest = buffer;
  for (;;) {
    const cut = rest.indexOf("\n\n");
    if (cut === -1) break;
    const raw = rest.slice(0, cut);
    rest = rest.slice(cut + 2);
    const frame: SseFrame = { id: null, event: null, data: "" };
    for (const line of raw.split("\n")) {
      if (line.startsWith("id: ")) frame.id = Number(line.slice(4));
      else if (line.startsWith("event: ")) frame.event = line.slice(7);
      else if (line.startsWith("data: ")) frame.data += line.slice(6);
    }
    frames.push(frame);
  }
  return { frames, rest };
}

export function framesToEvents(frames: SseFrame[]): { events: MissionEvent[]; ended: boolean } {
  const events: MissionEvent[] = [];
  let ended = false;
  for (const frame of frames) {
    if (frame.event === "end") {
      ended = true;
      continue;
    }
    if (!frame.data) continue;
    events.push(JSON.parse(frame.data) as MissionEvent);
  }
  return { events, ended };
}
