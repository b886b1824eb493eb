/**
 * Canvas rendering of the mirrored game state. Pure draw calls against a
 * minimal 2D-context interface so tests can record them.
 */

import { PLAY_H, PLAY_W } from "./envelopes.js";
import { UiGameView } from "./gameView.js";
import { Viewport } from "./touchSurface.js";

/** Palette indices match the server's colour classes. */
export const PALETTE = [
  "#3d7dd8", // water blue
  "#58a84c", // grass green
  "#e7cf6e", // sand yellow
  "#2d5d2a", // bush dark green
  "#8a5a2b", // brown
  "#c94034", // red
  "#f4f4f4", // white
  "#1c1c1c", // black
] as const;

export const KIND_GLYPHS: Record<string, string> = {
  animal: "🐾",
  character: "🧒",
  object: "⬢",
};

/** The subset of CanvasRenderingContext2D the renderer uses. */
export interface Draw2D {
  fillStyle: string | CanvasGradient | CanvasPattern;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  lineCap: string;
  font: string;
  textAlign: string;
  textBaseline: string;
  fillRect(x: number, y: number, w: number, h: number): void;
  strokeRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  stroke(): void;
  fillText(text: string, x: number, y: number): void;
}

export function drawScene(ctx: Draw2D, view: UiGameView, viewport: Viewport): void {
  const { widthPx, heightPx } = viewport;
  ctx.fillStyle = "#202020";
  ctx.fillRect(0, 0, widthPx, heightPx);

  if (view.background) {
    const [nx, ny] = view.backgroundSize[0]
      ? view.backgroundSize
      : [120, Math.floor(view.background.length / 120)];
    const cw = widthPx / nx;
    const ch = heightPx / ny;
    for (let iy = 0; iy < ny; iy++) {
      for (let ix = 0; ix < nx; ix++) {
        const colour = view.background[iy * nx + ix];
        ctx.fillStyle = PALETTE[colour] ?? PALETTE[7];
        // raster row 0 is the bottom of the play area
        ctx.fillRect(ix * cw, heightPx - (iy + 1) * ch, cw + 0.5, ch + 0.5);
      }
    }
  }

  ctx.lineCap = "round";
  for (const stroke of view.strokes) {
    ctx.strokeStyle = PALETTE[stroke.colour] ?? PALETTE[7];
    ctx.lineWidth = Math.max(2, (stroke.width / PLAY_W) * widthPx);
    ctx.beginPath();
    stroke.points.forEach(([x, y], i) => {
      const [px, py] = viewport.toPixels(x, y);
      if (i === 0) ctx.moveTo(px, py);
      else ctx.lineTo(px, py);
    });
    ctx.stroke();
  }

  const items = [...view.items.values()].sort((a, b) => a.z - b.z || (a.id < b.id ? -1 : 1));
  for (const item of items) {
    const [cx, cy] = viewport.toPixels(item.x, item.y);
    const w = (item.w / PLAY_W) * widthPx;
    const h = (item.h / PLAY_H) * heightPx;
    ctx.fillStyle = item.echoed ? "rgba(255,255,255,0.55)" : "rgba(255,255,255,0.9)";
    ctx.fillRect(cx - w / 2, cy - h / 2, w, h);
    ctx.strokeStyle = "#1c1c1c";
    ctx.lineWidth = 1.5;
    ctx.strokeRect(cx - w / 2, cy - h / 2, w, h);
    ctx.fillStyle = "#1c1c1c";
    ctx.font = `${Math.max(10, Math.floor(h * 0.5))}px sans-serif`;
    ctx.textAlign = "center";
    ctx.textBaseline = "middle";
    ctx.fillText(`${KIND_GLYPHS[item.kind] ?? ""} ${item.id}`, cx, cy);
  }

  if (view.connection !== "connected") {
    ctx.fillStyle = "rgba(200,40,40,0.9)";
    ctx.fillRect(0, 0, widthPx, 28);
    ctx.fillStyle = "#ffffff";
    ctx.font = "14px sans-serif";
    ctx.textAlign = "center";
    ctx.textBaseline = "middle";
    ctx.fillText("disconnected — touches are not being sent", widthPx / 2, 14);
  }
}
