import type { GazeSamplePayload } from "./types";

/** Supplies the current pointer position in image coordinates, or null. */
export interface PointerSource {
  current(): { x: number; y: number } | null;
}

export interface RecorderOptions {
  /** capture-rate target; the tracker this stands in for runs at 90 Hz */
  rateHz?: number;
  /** milliseconds between flushes of the sample buffer */
  flushIntervalMs?: number;
  now?: () => number;
  setIntervalImpl?: typeof setInterval;
  clearIntervalImpl?: typeof clearInterval;
}

export type BatchSender = (seq: number, samples: GazeSamplePayload[]) => Promise<void>;

/**
 * Ordered at-least-once delivery of sample batches.
 *
 * Batches carry increasing sequence numbers; a failed send is retried until
 * acknowledged, and the server deduplicates replays by seq, so no sample is
 * silently lost and order is preserved.
 */
export class FlushQueue {
  private queue: { seq: number; samples: GazeSamplePayload[] }[] = [];
  private nextSeq = 0;
  private sending = false;
  public sendFailures = 0;

  constructor(
    private sender: BatchSender,
    private retryDelayMs = 200,
    private sleep: (ms: number) => Promise<void> = (ms) => new Promise((r) => setTimeout(r, ms)),
  ) {}

  push(samples: GazeSamplePayload[]): void {
    if (!samples.length) return;
    this.queue.push({ seq: this.nextSeq++, samples });
    void this.pump();
  }

  get pending(): number {
    return this.queue.reduce((n, b) => n + b.samples.length, 0);
  }

  private async pump(): Promise<void> {
    if (this.sending) return;
    this.sending = true;
    try {
      while (this.queue.length > 0) {
        const batch = this.queue[0];
        try {
          await this.sender(batch.seq, batch.samples);
          this.queue.shift();
        } catch {
          this.sendFailures += 1;
          await this.sleep(this.retryDelayMs);
        }
      }
    } finally {
      this.sending = false;
    }
  }

  /** Resolves once every pushed batch has been acknowledged. */
  async drain(): Promise<void> {
    while (this.queue.length > 0 || this.sending) {
      await this.sleep(10);
    }
  }
}

/**
 * Samples the pointer position at a fixed rate, timestamps rebased to start().
 *
 * Timestamps come from a monotonic clock; ticks without a known pointer
 * position emit nothing (timestamps stay strictly increasing either way).
 */
export class SampleRecorder {
  private timer: ReturnType<typeof setInterval> | null = null;
  private t0 = 0;
  private lastT = -1;
  private buffer: GazeSamplePayload[] = [];
  private recorded: GazeSamplePayload[] = [];
  private readonly rateHz: number;
  private readonly flushIntervalMs: number;
  private readonly now: () => number;
  private readonly setIntervalImpl: typeof setInterval;
  private readonly clearIntervalImpl: typeof clearInterval;
  private lastFlush = 0;

  constructor(
    private source: PointerSource,
    private queue: FlushQueue,
    opts: RecorderOptions = {},
  ) {
    this.rateHz = opts.rateHz ?? 90;
    this.flushIntervalMs = opts.flushIntervalMs ?? 250;
    this.now = opts.now ?? (() => performance.now());
    this.setIntervalImpl = opts.setIntervalImpl ?? setInterval;
    this.clearIntervalImpl = opts.clearIntervalImpl ?? clearInterval;
  }

  /** Samples captured so far (local copy kept for replay). */
  get samples(): readonly GazeSamplePayload[] {
    return this.recorded;
  }

  start(): void {
    if (this.timer !== null) return;
    this.t0 = this.now();
    this.lastT = -1;
    this.lastFlush = 0;
    this.timer = this.setIntervalImpl(() => this.tick(), 1000 / this.rateHz);
  }

  private tick(): void {
    const pos = this.source.current();
    const t = this.now() - this.t0;
    if (pos !== null && t > this.lastT) {
      const sample = { t_ms: t, x: pos.x, y: pos.y };
      this.buffer.push(sample);
      this.recorded.push(sample);
      this.lastT = t;
    }
    if (t - this.lastFlush >= this.flushIntervalMs) {
      this.flush();
      this.lastFlush = t;
    }
  }

  private flush(): void {
    if (this.buffer.length) {
      this.queue.push(this.buffer);
      this.buffer = [];
    }
  }

  /** Stops sampling and hands the last partial batch to the queue. */
  stop(): void {
    if (this.timer !== null) {
      this.clearIntervalImpl(this.timer);
      this.timer = null;
    }
    this.flush();
  }
}
