import type { GamapGrid } from "./types";

/**
 * Render a GAMAP grid into an RGBA overlay buffer (nearest-neighbor upscale).
 *
 * Hot colormap; alpha is value * opacity, so opacity 0 leaves the underlying
 * image pixels untouched when composited.
 */
export function renderHeatmapRGBA(
  grid: GamapGrid,
  outWidth: number,
  outHeight: number,
  opacity: number,
) {
  const rgba = new Uint8ClampedArray(new ArrayBuffer(outWidth * outHeight * 4));
  for (let oy = 0; oy < outHeight; oy++) {
    const gy = Math.floor((oy * grid.height) / outHeight);
    for (let ox = 0; ox < outWidth; ox++) {
      const gx = Math.floor((ox * grid.width) / outWidth);
      const v = grid.values[gy * grid.width + gx];
      const i = (oy * outWidth + ox) * 4;
      rgba[i] = Math.round(255 * Math.min(1, 3 * v));
      rgba[i + 1] = Math.round(255 * Math.min(1, Math.max(0, 3 * v - 1)));
      rgba[i + 2] = Math.round(255 * Math.min(1, Math.max(0, 3 * v - 2)));
      rgba[i + 3] = Math.round(255 * Math.max(0, Math.min(1, v * opacity)));
    }
  }
  return rgba;
}

/** Overlay pixel with the highest alpha (ties: first in row-major order). */
export function brightestPixel(
  rgba: ArrayLike<number>,
  width: number,
): { x: number; y: number; alpha: number } {
  let best = 0;
  for (let i = 1; i * 4 < rgba.length; i++) {
    if (rgba[i * 4 + 3] > rgba[best * 4 + 3]) best = i;
  }
  return { x: best % width, y: Math.floor(best / width), alpha: rgba[best * 4 + 3] };
}
