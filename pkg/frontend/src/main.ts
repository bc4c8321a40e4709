import { StudioClient } from "./api";
import { viewportToImage, imageToViewport } from "./coords";
import { renderHeatmapRGBA } from "./heatmap";
import { ReadingFlow, type CompletedSession } from "./reading";
import { ReplayView } from "./replay";
import type { PointerSource } from "./recorder";
import type { Box, GazeSamplePayload } from "./types";

const client = new StudioClient("");

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

/** Pointer-as-gaze: tracks the latest pointer position over the image element. */
class DomPointerSource implements PointerSource {
  private last: { x: number; y: number } | null = null;

  constructor(
    private image: HTMLImageElement,
    private imageSize: () => { width: number; height: number },
  ) {
    window.addEventListener("pointermove", (ev) => this.update(ev));
    window.addEventListener("pointerdown", (ev) => this.update(ev));
  }

  private update(ev: PointerEvent): void {
    const rect = this.image.getBoundingClientRect();
    if (!rect.width || !rect.height) return;
    const { width, height } = this.imageSize();
    this.last = viewportToImage(rect, width, height, ev.clientX, ev.clientY);
  }

  current(): { x: number; y: number } | null {
    return this.last;
  }
}

function drawPath(
  canvas: HTMLCanvasElement,
  samples: GazeSamplePayload[],
  imageW: number,
  imageH: number,
  color: string,
): void {
  const ctx = canvas.getContext("2d");
  if (!ctx || samples.length === 0) return;
  const rect = { left: 0, top: 0, width: canvas.width, height: canvas.height };
  ctx.strokeStyle = color;
  ctx.lineWidth = 1.5;
  ctx.beginPath();
  samples.forEach((s, i) => {
    const { clientX, clientY } = imageToViewport(rect, imageW, imageH, s.x, s.y);
    if (i === 0) ctx.moveTo(clientX, clientY);
    else ctx.lineTo(clientX, clientY);
  });
  ctx.stroke();
}

function drawBoxes(
  canvas: HTMLCanvasElement,
  boxes: Box[],
  imageW: number,
  imageH: number,
): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  ctx.strokeStyle = "#5f5";
  ctx.lineWidth = 1.5;
  const sx = canvas.width / imageW;
  const sy = canvas.height / imageH;
  for (const box of boxes) {
    ctx.strokeRect(box.x * sx, box.y * sy, box.w * sx, box.h * sy);
  }
}

function drawHeatmap(
  canvas: HTMLCanvasElement,
  view: ReplayView,
  which: "raw" | "processed",
  opacity: number,
): void {
  const payload = which === "raw" ? view.raw : view.processed;
  const ctx = canvas.getContext("2d");
  if (!payload || !ctx) return;
  const rgba = renderHeatmapRGBA(payload.grid, canvas.width, canvas.height, opacity);
  ctx.putImageData(new ImageData(rgba, canvas.width, canvas.height), 0, 0);
}

async function boot(): Promise<void> {
  const manifest = await client.manifest();
  const imageIds = manifest.entries.map((e) => e.image_id);
  const image = el<HTMLImageElement>("reading-image");
  const status = el<HTMLDivElement>("status");
  const restPrompt = el<HTMLDivElement>("rest-prompt");
  const retryBanner = el<HTMLDivElement>("retry-banner");
  const replayList = el<HTMLSelectElement>("replay-select");
  const scrubber = el<HTMLInputElement>("scrubber");
  const opacitySlider = el<HTMLInputElement>("opacity");

  let currentSize = { width: 0, height: 0 };
  const source = new DomPointerSource(image, () => currentSize);

  const flow = new ReadingFlow({
    client,
    readerId: "reader-ui",
    imageIds,
    pointerSource: source,
    onImage: (info, index) => {
      currentSize = { width: info.image_width, height: info.image_height };
      image.src = info.image_url;
      status.textContent = `image ${index + 1} / ${imageIds.length} — grade with 1-4, Enter = normal`;
    },
    onRestPrompt: () =>
      new Promise<void>((resolve) => {
        restPrompt.style.display = "block";
        el<HTMLButtonElement>("rest-continue").onclick = () => {
          restPrompt.style.display = "none";
          resolve();
        };
      }),
    onRetry: (error) =>
      new Promise<void>((resolve) => {
        retryBanner.style.display = "block";
        retryBanner.textContent = `network trouble (${String(error)}) — click to retry`;
        retryBanner.onclick = () => {
          retryBanner.style.display = "none";
          resolve();
        };
      }),
    onDone: (completed) => {
      status.textContent = `done: ${completed.length} images graded`;
    },
  });

  window.addEventListener("keydown", (ev) => {
    void flow.handleKey(ev.key).then((grade) => {
      if (grade !== null && flow.completed.length) {
        const last = flow.completed[flow.completed.length - 1];
        const option = document.createElement("option");
        option.value = String(flow.completed.length - 1);
        option.textContent = `${last.imageId} (grade ${last.grade})`;
        replayList.appendChild(option);
      }
    });
  });

  let activeReplay: ReplayView | null = null;

  async function openReplay(session: CompletedSession): Promise<void> {
    const view = new ReplayView(client, session);
    activeReplay = view;
    await view.load();
    const note = el<HTMLDivElement>("replay-note");
    if (view.state === "not-processed") {
      note.textContent = "not yet processed (service not calibrated)";
    } else if (view.state === "error") {
      note.textContent = `error: ${view.error}`;
    } else {
      const kept = view.processed?.meta.kept_fraction ?? 1;
      note.textContent = `kept fraction ${(kept * 100).toFixed(1)}%` + (view.panelsDiffer ? "" : " (panels identical)");
    }
    redrawReplay();
  }

  function redrawReplay(): void {
    const view = activeReplay;
    if (!view) return;
    const fraction = Number(scrubber.value) / 100;
    const opacity = Number(opacitySlider.value) / 100;
    const boxes = manifest.entries.find((e) => e.image_id === view.session.imageId)?.boxes ?? [];
    const rawCanvas = el<HTMLCanvasElement>("replay-raw");
    const procCanvas = el<HTMLCanvasElement>("replay-processed");
    for (const [canvas, which] of [
      [rawCanvas, "raw"],
      [procCanvas, "processed"],
    ] as const) {
      const ctx = canvas.getContext("2d");
      ctx?.clearRect(0, 0, canvas.width, canvas.height);
      if (which === "raw" || view.state === "ready") {
        drawHeatmap(canvas, view, which, opacity);
      }
      drawBoxes(canvas, boxes, view.session.imageWidth, view.session.imageHeight);
    }
    drawPath(rawCanvas, view.pathUpTo(fraction), view.session.imageWidth, view.session.imageHeight, "#3df");
    drawPath(procCanvas, view.filteredSamples, view.session.imageWidth, view.session.imageHeight, "#fd3");
  }

  replayList.onchange = () => {
    const idx = Number(replayList.value);
    if (!Number.isNaN(idx) && flow.completed[idx]) void openReplay(flow.completed[idx]);
  };
  scrubber.oninput = redrawReplay;
  opacitySlider.oninput = redrawReplay;

  await flow.start();
}

boot().catch((error) => {
  const status = document.getElementById("status");
  if (status) status.textContent = `failed to start: ${String(error)}`;
});
