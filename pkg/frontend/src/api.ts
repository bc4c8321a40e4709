import { parseGamap } from "./gamap";
import type {
  AttentionMeta,
  AttentionPayload,
  GazeSamplePayload,
  Manifest,
  SessionInfo,
} from "./types";

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

async function raise(response: Response): Promise<never> {
  let detail = response.statusText;
  try {
    const body = await response.json();
    if (body && typeof body.detail === "string") detail = body.detail;
  } catch {
    /* non-JSON error body */
  }
  throw new ApiError(response.status, detail);
}

/** Thin typed client over the recording service's HTTP API. */
export class StudioClient {
  constructor(
    private baseUrl: string,
    private fetchImpl: typeof fetch = fetch,
  ) {}

  private url(path: string): string {
    return this.baseUrl.replace(/\/$/, "") + path;
  }

  async manifest(): Promise<Manifest> {
    const r = await this.fetchImpl(this.url("/manifest"));
    if (!r.ok) await raise(r);
    return (await r.json()) as Manifest;
  }

  imageUrl(imageId: string): string {
    return this.url(`/images/${imageId}`);
  }

  async createSession(readerId: string, imageId: string): Promise<SessionInfo> {
    const r = await this.fetchImpl(this.url("/sessions"), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ reader_id: readerId, image_id: imageId }),
    });
    if (!r.ok) await raise(r);
    return (await r.json()) as SessionInfo;
  }

  async postSamples(sessionId: string, seq: number, samples: GazeSamplePayload[]): Promise<void> {
    const r = await this.fetchImpl(this.url(`/sessions/${sessionId}/samples`), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ seq, samples }),
    });
    if (!r.ok) await raise(r);
  }

  async postDecision(sessionId: string, grade: number): Promise<void> {
    const r = await this.fetchImpl(this.url(`/sessions/${sessionId}/decision`), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ grade }),
    });
    if (!r.ok) await raise(r);
  }

  async attention(sessionId: string, processed: boolean): Promise<AttentionPayload> {
    const r = await this.fetchImpl(
      this.url(`/sessions/${sessionId}/attention?processed=${processed}`),
    );
    if (!r.ok) await raise(r);
    const bytes = await r.arrayBuffer();
    const metaHeader = r.headers.get("X-Attention-Meta");
    const meta: AttentionMeta = metaHeader
      ? (JSON.parse(metaHeader) as AttentionMeta)
      : { gamma_th: null, kept_fraction: 1.0 };
    return { grid: parseGamap(bytes), meta, bytes };
  }
}
