import { describe, expect, it } from "vitest";
import { argmaxCell } from "../src/gamap";
import { brightestPixel, renderHeatmapRGBA } from "../src/heatmap";
import type { GamapGrid } from "../src/types";

function grid16(peak: { x: number; y: number }): GamapGrid {
  const values = new Float32Array(16 * 16);
  for (let i = 0; i < values.length; i++) values[i] = 0.05;
  values[peak.y * 16 + peak.x] = 1.0;
  values[peak.y * 16 + ((peak.x + 5) % 16)] = 0.6;
  return { width: 16, height: 16, values };
}

describe("renderHeatmapRGBA", () => {
  it("opacity 0 leaves every pixel fully transparent", () => {
    const rgba = renderHeatmapRGBA(grid16({ x: 3, y: 4 }), 128, 128, 0);
    for (let i = 3; i < rgba.length; i += 4) {
      expect(rgba[i]).toBe(0);
    }
  });

  it("brightest overlay pixel sits in the payload's max cell", () => {
    const grid = grid16({ x: 11, y: 2 });
    const rgba = renderHeatmapRGBA(grid, 256, 256, 0.8);
    const bright = brightestPixel(rgba, 256);
    const cell = argmaxCell(grid);
    // 256/16 = 16 screen pixels per cell
    expect(Math.floor(bright.x / 16)).toBe(cell.x);
    expect(Math.floor(bright.y / 16)).toBe(cell.y);
  });

  it("alpha scales with value and opacity", () => {
    const grid = grid16({ x: 0, y: 0 });
    const strong = renderHeatmapRGBA(grid, 16, 16, 1.0);
    const faint = renderHeatmapRGBA(grid, 16, 16, 0.25);
    expect(strong[3]).toBe(255);
    expect(faint[3]).toBe(Math.round(255 * 0.25));
  });

  it("upscales nearest-neighbor so whole cells share a color", () => {
    const grid = grid16({ x: 5, y: 5 });
    const rgba = renderHeatmapRGBA(grid, 64, 64, 1.0);
    const px = (x: number, y: number) => rgba.slice((y * 64 + x) * 4, (y * 64 + x) * 4 + 4);
    expect(px(20, 20)).toEqual(px(23, 23)); // both inside cell (5,5)
  });
});
