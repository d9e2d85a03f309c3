import { describe, expect, it } from "vitest";

import { framesToEvents, parseSseChunk } from "../src/sse.js";

const frame = (seq: number, kind = "tick") =>
  `id: ${seq}\ndata: {"seq": ${seq}, "tick": ${seq}, "kind": "${kind}"}\n\n`;

describe("parseSseChunk", () => {
  it("parses complete frames and keeps the remainder", () => {
    const { frames, rest } = parseSseChunk(frame(0) + frame(1) + "id: 2\ndata: {\"se");
    expect(frames).toHaveLength(2);
    expect(frames[0].id).toBe(0);
    expect(rest).toBe('id: 2\ndata: {"se');
  });

  it("handles frames split across chunk boundaries", () => {
    const whole = frame(5);
    const first = parseSseChunk(whole.slice(0, 12));
    expect(first.frames).toHaveLength(0);
    const second = parseSseChunk(first.rest + whole.slice(12));
    expect(second.frames).toHaveLength(1);
    expect(second.frames[0].id).toBe(5);
  });

  it("recognizes the end-of-stream frame", () => {
    const { frames } = parseSseChunk("event: end\ndata: {}\n\n");
    const { events, ended } = framesToEvents(frames);
    expect(ended).toBe(true);
    expect(events).toHaveLength(0);
  });

  it("decodes event payloads in order", () => {
    const { frames } = parseSseChunk(frame(0, "a") + frame(1, "b"));
    const { events } = framesToEvents(frames);
    expect(events.map((e) => e.kind)).toEqual(["a", "b"]);
  });
});
