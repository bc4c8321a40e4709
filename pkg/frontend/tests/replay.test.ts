import { describe, expect, it } from "vitest";
import { ApiError, type StudioClient } from "../src/api";
import { gamapBytes, parseGamap } from "../src/gamap";
import type { CompletedSession } from "../src/reading";
import { ReplayView } from "../src/replay";
import type { AttentionMeta, GamapGrid } from "../src/types";

function grid(value: number): GamapGrid {
  const values = new Float32Array(16 * 16).fill(value);
  values[0] = 1.0;
  return { width: 16, height: 16, values };
}

function payload(g: GamapGrid, meta: AttentionMeta) {
  const bytes = gamapBytes(g);
  return { grid: parseGamap(bytes), meta, bytes };
}

function session(): CompletedSession {
  return {
    sessionId: "s0",
    imageId: "img0",
    grade: 2,
    samples: Array.from({ length: 10 }, (_, i) => ({ t_ms: i * 100, x: i, y: i })),
    imageWidth: 128,
    imageHeight: 128,
  };
}

function clientWith(raw: unknown, processed: unknown | Error): StudioClient {
  return {
    attention: async (_id: string, wantProcessed: boolean) => {
      if (!wantProcessed) return raw;
      if (processed instanceof Error) throw processed;
      return processed;
    },
  } as unknown as StudioClient;
}

describe("ReplayView", () => {
  it("loads both payloads and reports panel difference from kept_fraction", async () => {
    const raw = payload(grid(0.4), { gamma_th: null, kept_fraction: 1.0 });
    const processed = payload(grid(0.2), {
      gamma_th: 0.5,
      kept_fraction: 0.6,
      kept_ranges: [[2, 5], [8, 10]],
    });
    const view = new ReplayView(clientWith(raw, processed), session());
    await view.load();
    expect(view.state).toBe("ready");
    expect(view.panelsDiffer).toBe(true);
    expect(view.filteredSamples.map((s) => s.t_ms)).toEqual([200, 300, 400, 800, 900]);
  });

  it("identical panels when nothing was filtered out", async () => {
    const raw = payload(grid(0.4), { gamma_th: null, kept_fraction: 1.0 });
    const processed = payload(grid(0.4), { gamma_th: 0.5, kept_fraction: 1.0, kept_ranges: [[0, 10]] });
    const view = new ReplayView(clientWith(raw, processed), session());
    await view.load();
    expect(view.panelsDiffer).toBe(false);
    expect(view.filteredSamples).toHaveLength(10);
  });

  it("enters the not-processed state on a 409", async () => {
    const raw = payload(grid(0.4), { gamma_th: null, kept_fraction: 1.0 });
    const view = new ReplayView(clientWith(raw, new ApiError(409, "service not calibrated")), session());
    await view.load();
    expect(view.state).toBe("not-processed");
    expect(view.error).toMatch(/not calibrated/);
  });

  it("scrubber returns the time-prefix of the path", async () => {
    const raw = payload(grid(0.4), { gamma_th: null, kept_fraction: 1.0 });
    const processed = payload(grid(0.4), { gamma_th: 0.5, kept_fraction: 1.0 });
    const view = new ReplayView(clientWith(raw, processed), session());
    await view.load();
    expect(view.pathUpTo(0).map((s) => s.t_ms)).toEqual([0]);
    expect(view.pathUpTo(0.5)).toHaveLength(5); // t <= 450
    expect(view.pathUpTo(1)).toHaveLength(10);
  });
});
