import type { StudioClient } from "./api";
import { gradeForKey } from "./keys";
import { FlushQueue, SampleRecorder, type PointerSource, type RecorderOptions } from "./recorder";
import type { GazeSamplePayload, SessionInfo } from "./types";

export interface CompletedSession {
  sessionId: string;
  imageId: string;
  grade: number;
  samples: GazeSamplePayload[];
  imageWidth: number;
  imageHeight: number;
}

export interface ReadingFlowOptions {
  client: StudioClient;
  readerId: string;
  imageIds: string[];
  pointerSource: PointerSource;
  /** completed-image count between rest prompts */
  restEvery?: number;
  recorderOptions?: RecorderOptions;
  onImage?: (info: SessionInfo, index: number) => void;
  /** shown after every restEvery completed images; resolve to continue */
  onRestPrompt?: () => Promise<void>;
  /** network failure surface; resolve to retry the failed step */
  onRetry?: (error: unknown) => Promise<void>;
  onDone?: (completed: CompletedSession[]) => void;
}

/**
 * The reading-and-diagnosis cycle: show an image, sample the pointer until a
 * grade key arrives, post the decision, advance. Completed sessions keep a
 * local copy of their samples so the replay view can animate the track.
 */
export class ReadingFlow {
  private index = 0;
  private completedCount = 0;
  private session: SessionInfo | null = null;
  private recorder: SampleRecorder | null = null;
  private queue: FlushQueue | null = null;
  private deciding = false;
  public readonly completed: CompletedSession[] = [];

  constructor(private opts: ReadingFlowOptions) {}

  get currentSession(): SessionInfo | null {
    return this.session;
  }

  get finished(): boolean {
    return this.index >= this.opts.imageIds.length;
  }

  async start(): Promise<void> {
    await this.nextImage();
  }

  private async withRetry<T>(step: () => Promise<T>): Promise<T> {
    for (;;) {
      try {
        return await step();
      } catch (error) {
        if (!this.opts.onRetry) throw error;
        await this.opts.onRetry(error);
      }
    }
  }

  private async nextImage(): Promise<void> {
    if (this.finished) {
      this.opts.onDone?.(this.completed);
      return;
    }
    const imageId = this.opts.imageIds[this.index];
    const info = await this.withRetry(() =>
      this.opts.client.createSession(this.opts.readerId, imageId),
    );
    this.session = info;
    this.queue = new FlushQueue((seq, samples) =>
      this.opts.client.postSamples(info.session_id, seq, samples),
    );
    this.recorder = new SampleRecorder(this.opts.pointerSource, this.queue, this.opts.recorderOptions);
    this.opts.onImage?.(info, this.index);
    this.recorder.start();
  }

  /** Keyboard hook: grade keys close the current session. Returns the grade. */
  async handleKey(key: string): Promise<number | null> {
    const grade = gradeForKey(key);
    if (grade === null || !this.session || !this.recorder || !this.queue || this.deciding) {
      return null;
    }
    this.deciding = true;
    try {
      const session = this.session;
      const recorder = this.recorder;
      const queue = this.queue;
      recorder.stop();
      await queue.drain();
      await this.withRetry(() => this.opts.client.postDecision(session.session_id, grade));
      this.completed.push({
        sessionId: session.session_id,
        imageId: this.opts.imageIds[this.index],
        grade,
        samples: [...recorder.samples],
        imageWidth: session.image_width,
        imageHeight: session.image_height,
      });
      this.session = null;
      this.recorder = null;
      this.queue = null;
      this.index += 1;
      this.completedCount += 1;
      const restEvery = this.opts.restEvery ?? 20;
      if (restEvery > 0 && this.completedCount % restEvery === 0 && !this.finished) {
        await (this.opts.onRestPrompt?.() ?? Promise.resolve());
      }
      await this.nextImage();
      return grade;
    } finally {
      this.deciding = false;
    }
  }
}
