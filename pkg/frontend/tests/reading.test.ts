import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";
import type { StudioClient } from "../src/api";
import { ReadingFlow } from "../src/reading";
import type { PointerSource } from "../src/recorder";
import type { GazeSamplePayload } from "../src/types";

class FakeClient {
  sessions = new Map<string, { imageId: string; samples: GazeSamplePayload[]; grade: number | null; seqs: number[] }>();
  private counter = 0;
  failNextDecision = false;

  async createSession(_reader: string, imageId: string) {
    const id = `s${this.counter++}`;
    this.sessions.set(id, { imageId, samples: [], grade: null, seqs: [] });
    return { session_id: id, image_url: `/images/${imageId}`, image_width: 128, image_height: 128 };
  }

  async postSamples(sessionId: string, seq: number, samples: GazeSamplePayload[]) {
    const session = this.sessions.get(sessionId)!;
    if (session.seqs.includes(seq)) return; // idempotent replay
    session.seqs.push(seq);
    session.samples.push(...samples);
  }

  async postDecision(sessionId: string, grade: number) {
    if (this.failNextDecision) {
      this.failNextDecision = false;
      throw new Error("boom");
    }
    this.sessions.get(sessionId)!.grade = grade;
  }
}

function makeFlow(overrides: Partial<ConstructorParameters<typeof ReadingFlow>[0]> = {}) {
  const client = new FakeClient();
  const source: PointerSource = { current: () => ({ x: 42, y: 24 }) };
  const imageIds = Array.from({ length: 25 }, (_, i) => `img${i}`);
  const rests: number[] = [];
  const flow = new ReadingFlow({
    client: client as unknown as StudioClient,
    readerId: "r",
    imageIds,
    pointerSource: source,
    recorderOptions: { now: () => Date.now() },
    onRestPrompt: async () => {
      rests.push(flow.completed.length);
    },
    ...overrides,
  });
  return { flow, client, rests };
}

describe("ReadingFlow", () => {
  beforeEach(() => vi.useFakeTimers());
  afterEach(() => vi.useRealTimers());

  it("posts grade 0 when Enter is pressed", async () => {
    const { flow, client } = makeFlow();
    await flow.start();
    await vi.advanceTimersByTimeAsync(300);
    const sid = flow.currentSession!.session_id;
    const key = flow.handleKey("Enter");
    await vi.advanceTimersByTimeAsync(500);
    expect(await key).toBe(0);
    expect(client.sessions.get(sid)!.grade).toBe(0);
  });

  it("ignores non-grade keys", async () => {
    const { flow } = makeFlow();
    await flow.start();
    expect(await flow.handleKey("x")).toBeNull();
    expect(flow.completed).toHaveLength(0);
  });

  it("delivers every sampled point to the service in order", async () => {
    const { flow, client } = makeFlow();
    await flow.start();
    await vi.advanceTimersByTimeAsync(1000);
    const sid = flow.currentSession!.session_id;
    const done = flow.handleKey("3");
    await vi.advanceTimersByTimeAsync(500);
    await done;
    const session = client.sessions.get(sid)!;
    expect(session.grade).toBe(3);
    expect(session.samples.length).toBeGreaterThan(60);
    const times = session.samples.map((s) => s.t_ms);
    expect(times).toEqual([...times].sort((a, b) => a - b));
  });

  it("shows the rest prompt after every 20 completed images", async () => {
    const { flow, rests } = makeFlow();
    await flow.start();
    for (let i = 0; i < 21; i++) {
      await vi.advanceTimersByTimeAsync(120);
      const done = flow.handleKey("1");
      await vi.advanceTimersByTimeAsync(300);
      await done;
    }
    // prompt fired exactly once, right when the 20th image was completed
    expect(rests).toEqual([20]);
    expect(flow.completed).toHaveLength(21);
  });

  it("surfaces failures through the retry hook, then succeeds", async () => {
    let retried = 0;
    const { flow, client } = makeFlow({
      onRetry: async () => {
        retried += 1;
      },
    });
    await flow.start();
    await vi.advanceTimersByTimeAsync(200);
    client.failNextDecision = true;
    const sid = flow.currentSession!.session_id;
    const done = flow.handleKey("2");
    await vi.advanceTimersByTimeAsync(500);
    await done;
    expect(retried).toBe(1);
    expect(client.sessions.get(sid)!.grade).toBe(2);
  });

  it("keeps local sample copies for replay", async () => {
    const { flow } = makeFlow();
    await flow.start();
    await vi.advanceTimersByTimeAsync(500);
    const done = flow.handleKey("4");
    await vi.advanceTimersByTimeAsync(300);
    await done;
    expect(flow.completed[0].samples.length).toBeGreaterThan(30);
    expect(flow.completed[0].grade).toBe(4);
  });
});
