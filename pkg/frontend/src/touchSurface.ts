/**
 * The children's play surface: maps pointer gestures into gateway touch
 * envelopes for the logged-in child colour, with an optimistic echo of
 * drags. While disconnected every gesture is dropped and a banner flag
 * is raised.
 */

import { ChildColour, PLAY_H, PLAY_W } from "./envelopes.js";
import { GatewayClient } from "./client.js";
import { UiGameView } from "./gameView.js";

/** Maps CSS pixels to play-area metres (origin bottom-left). */
export class Viewport {
  constructor(
    public widthPx: number,
    public heightPx: number
  ) {}

  toMetres(xPx: number, yPx: number): [number, number] {
    const x = (xPx / this.widthPx) * PLAY_W;
    const y = PLAY_H - (yPx / this.heightPx) * PLAY_H; // screen y grows downwards
    return [clamp(x, 0, PLAY_W), clamp(y, 0, PLAY_H)];
  }

  toPixels(x: number, y: number): [number, number] {
    return [(x / PLAY_W) * this.widthPx, ((PLAY_H - y) / PLAY_H) * this.heightPx];
  }
}

function clamp(v: number, lo: number, hi: number): number {
  return Math.min(Math.max(v, lo), hi);
}

export class TouchSurface {
  offlineBanner = false;
  dropped = 0;
  private nextTouchId = 1;
  private active = new Map<number, { touchId: number; itemId: string | null }>();

  constructor(
    private client: GatewayClient,
    private view: UiGameView,
    private colour: ChildColour,
    private viewport: Viewport
  ) {}

  get source(): string {
    return `child_${this.colour}`;
  }

  async selectTool(tool: "drag" | "draw", colour = 7): Promise<void> {
    this.view.selectedTool = { tool, colour };
    if (!this.sendable()) return;
    await this.client.call("game/tools", {
      source: this.source,
      tool,
      colour,
      stamp: 0,
    });
  }

  private sendable(): boolean {
    if (this.client.status !== "connected") {
      this.offlineBanner = true;
      this.dropped += 1;
      return false;
    }
    this.offlineBanner = false;
    return true;
  }

  private async touch(phase: "down" | "move" | "up", touchId: number, x: number, y: number) {
    await this.client.call("game/touches", {
      touch_id: touchId,
      phase,
      x,
      y,
      source: this.source,
      stamp: 0,
    });
  }

  async pointerDown(pointerId: number, xPx: number, yPx: number): Promise<void> {
    if (!this.sendable()) return;
    const [x, y] = this.viewport.toMetres(xPx, yPx);
    const touchId = this.nextTouchId++;
    const item = this.view.selectedTool.tool === "drag" ? this.view.itemAt(x, y) : null;
    this.active.set(pointerId, { touchId, itemId: item?.id ?? null });
    await this.touch("down", touchId, x, y);
  }

  async pointerMove(pointerId: number, xPx: number, yPx: number): Promise<void> {
    const grab = this.active.get(pointerId);
    if (!grab) return;
    if (!this.sendable()) return;
    const [x, y] = this.viewport.toMetres(xPx, yPx);
    if (grab.itemId) this.view.echoItemMove(grab.itemId, x, y);
    await this.touch("move", grab.touchId, x, y);
  }

  async pointerUp(pointerId: number, xPx: number, yPx: number): Promise<void> {
    const grab = this.active.get(pointerId);
    if (!grab) return;
    this.active.delete(pointerId);
    if (!this.sendable()) return;
    const [x, y] = this.viewport.toMetres(xPx, yPx);
    await this.touch("up", grab.touchId, x, y);
  }
}
