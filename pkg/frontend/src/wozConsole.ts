/**
 * Wizard-of-Oz console: the wizard drags items on a mirror of the game;
 * only the release emits a command (one woz/command per drag). Server
 * rejections (item still scheduled, unreachable goal) surface as toasts.
 * A calibration screen shows fiducial markers at fixed screen positions
 * and a capture button that submits the correspondence set.
 */

import { GatewayClient, GatewayError } from "./client.js";
import { UiGameView } from "./gameView.js";

/** Fiducial marker positions shown on the calibration screen (metres). */
export const FIDUCIAL_MARKERS: Array<[number, number]> = [
  [0.05, 0.05],
  [0.55, 0.05],
  [0.3, 0.28],
];

export interface Toast {
  kind: "error" | "info";
  text: string;
}

export class WozConsole {
  toasts: Toast[] = [];
  calibrated = false;
  private drag: { itemId: string; x: number; y: number } | null = null;

  constructor(
    private client: GatewayClient,
    public view: UiGameView
  ) {}

  beginDrag(itemId: string): void {
    const item = this.view.items.get(itemId);
    if (!item) return;
    this.drag = { itemId, x: item.x, y: item.y };
  }

  /** Ghost motion only; nothing goes on the wire until release. */
  dragTo(x: number, y: number): void {
    if (this.drag) {
      this.drag.x = x;
      this.drag.y = y;
    }
  }

  get dragGhost(): { itemId: string; x: number; y: number } | null {
    return this.drag;
  }

  /** Release: emit exactly one move command for the whole gesture. */
  async release(): Promise<boolean> {
    if (!this.drag) return false;
    const { itemId, x, y } = this.drag;
    this.drag = null;
    return this.command("move_item", { item_id: itemId, x, y, text: "" });
  }

  async say(text: string): Promise<boolean> {
    return this.command("say", { item_id: "", x: 0, y: 0, text });
  }

  async gazeAt(x: number, y: number): Promise<boolean> {
    return this.command("gaze_at", { item_id: "", x, y, text: "" });
  }

  async pointAt(x: number, y: number): Promise<boolean> {
    return this.command("point_at", { item_id: "", x, y, text: "" });
  }

  private async command(kind: string, rest: Record<string, unknown>): Promise<boolean> {
    try {
      await this.client.call("woz/command", { kind, stamp: 0, ...rest });
      return true;
    } catch (err) {
      if (err instanceof GatewayError) {
        this.toasts.push({ kind: "error", text: `${err.code}: ${err.detail}` });
        return false;
      }
      throw err;
    }
  }

  /**
   * Capture the calibration correspondences. The robot-side sample for
   * each on-screen marker comes from the operator's measurement entry;
   * by default the markers map to themselves (robot frame == screen
   * frame), which suits the desk-scale rig.
   */
  async captureCalibration(robotPoints?: Array<[number, number]>): Promise<boolean> {
    const samples = robotPoints ?? FIDUCIAL_MARKERS;
    const pairs = FIDUCIAL_MARKERS.map(
      ([sx, sy], i) => [sx, sy, samples[i][0], samples[i][1]] as [number, number, number, number]
    );
    try {
      await this.client.call("robot/fiducials", { pairs, stamp: 0 });
      this.calibrated = true;
      this.toasts.push({ kind: "info", text: "calibration accepted" });
      return true;
    } catch (err) {
      if (err instanceof GatewayError) {
        this.calibrated = false;
        this.toasts.push({ kind: "error", text: `${err.code}: ${err.detail}` });
        return false;
      }
      throw err;
    }
  }
}
