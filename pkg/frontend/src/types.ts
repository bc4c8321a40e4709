export interface GazeSamplePayload {
  t_ms: number;
  x: number;
  y: number;
}

export interface SessionInfo {
  session_id: string;
  image_url: string;
  image_width: number;
  image_height: number;
}

export interface AttentionMeta {
  gamma_th: number | null;
  kept_fraction: number;
  /** optional [start, end) sample-index runs the filter kept */
  kept_ranges?: [number, number][];
}

export interface AttentionPayload {
  grid: GamapGrid;
  meta: AttentionMeta;
  bytes: ArrayBuffer;
}

export interface GamapGrid {
  width: number;
  height: number;
  values: Float32Array;
}

export interface Box {
  x: number;
  y: number;
  w: number;
  h: number;
}

export interface ManifestEntry {
  image_id: string;
  image_path: string;
  grade: number;
  boxes: Box[];
  gaze_track_paths: string[];
}

export interface Manifest {
  splits: Record<string, string[]>;
  entries: ManifestEntry[];
}
