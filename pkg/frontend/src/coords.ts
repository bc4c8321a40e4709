/** Viewport <-> image coordinate mapping for an element displaying the image. */

export interface ViewportRect {
  left: number;
  top: number;
  width: number;
  height: number;
}

function clamp(v: number, lo: number, hi: number): number {
  return Math.min(Math.max(v, lo), hi);
}

/** Map a client-space pointer position into image pixels, clamped to bounds. */
export function viewportToImage(
  rect: ViewportRect,
  imageWidth: number,
  imageHeight: number,
  clientX: number,
  clientY: number,
): { x: number; y: number } {
  const x = ((clientX - rect.left) / rect.width) * imageWidth;
  const y = ((clientY - rect.top) / rect.height) * imageHeight;
  return { x: clamp(x, 0, imageWidth), y: clamp(y, 0, imageHeight) };
}

/** Inverse of viewportToImage for overlay drawing. */
export function imageToViewport(
  rect: ViewportRect,
  imageWidth: number,
  imageHeight: number,
  x: number,
  y: number,
): { clientX: number; clientY: number } {
  return {
    clientX: rect.left + (x / imageWidth) * rect.width,
    clientY: rect.top + (y / imageHeight) * rect.height,
  };
}
