import { ApiError, type StudioClient } from "./api";
import type { AttentionPayload, GazeSamplePayload } from "./types";
import type { CompletedSession } from "./reading";

export type ReplayState = "loading" | "ready" | "not-processed" | "error";

/**
 * Review-side state for one closed session: raw and processed heatmap
 * payloads from the service, the locally captured track for the scrubber,
 * and the filtered track reconstructed from the sidecar's kept ranges.
 */
export class ReplayView {
  state: ReplayState = "loading";
  raw: AttentionPayload | null = null;
  processed: AttentionPayload | null = null;
  error: string | null = null;

  constructor(
    private client: StudioClient,
    public readonly session: CompletedSession,
  ) {}

  async load(): Promise<void> {
    this.state = "loading";
    try {
      this.raw = await this.client.attention(this.session.sessionId, false);
    } catch (error) {
      this.state = "error";
      this.error = String(error);
      return;
    }
    try {
      this.processed = await this.client.attention(this.session.sessionId, true);
      this.state = "ready";
    } catch (error) {
      if (error instanceof ApiError && error.status === 409) {
        this.state = "not-processed";
        this.error = error.detail;
      } else {
        this.state = "error";
        this.error = String(error);
      }
    }
  }

  /** Raw and processed panels differ exactly when the filter dropped samples. */
  get panelsDiffer(): boolean {
    if (!this.raw || !this.processed) return false;
    return this.processed.meta.kept_fraction < 1.0;
  }

  /** Samples the fixation filter kept, per the sidecar's index ranges. */
  get filteredSamples(): GazeSamplePayload[] {
    const ranges = this.processed?.meta.kept_ranges;
    if (!ranges) return [];
    const out: GazeSamplePayload[] = [];
    for (const [start, end] of ranges) {
      out.push(...this.session.samples.slice(start, end));
    }
    return out;
  }

  /** Path prefix for the time scrubber, fraction in [0, 1] of session time. */
  pathUpTo(fraction: number): GazeSamplePayload[] {
    const samples = this.session.samples;
    if (!samples.length) return [];
    const tEnd = samples[samples.length - 1].t_ms;
    const cutoff = Math.max(0, Math.min(1, fraction)) * tEnd;
    return samples.filter((s) => s.t_ms <= cutoff);
  }
}
