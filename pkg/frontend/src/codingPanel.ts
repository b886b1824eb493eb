/**
 * Large-button coding panel, two mirrored halves (one per child), three
 * colour-grouped rows (one per axis).
 *
 * Press-to-switch: a press sends one annot/add covering the playhead to
 * the coding horizon (bag end); the server's last-coder-wins truncation
 * closes the previous interval at exactly the press instant. Pressing
 * the value already active on that (child, axis) is a no-op.
 */

import { Axis, CONSTRUCTS, ChildColour } from "./envelopes.js";
import { GatewayClient } from "./client.js";

export class CodingPanel {
  /** current value per (child, axis) as last pressed */
  private current = new Map<string, string>();
  presses = 0;

  constructor(
    private client: GatewayClient,
    public coder: string,
    public horizonUs: number
  ) {}

  buttonRows(child: ChildColour): Array<{ axis: Axis; values: readonly string[] }> {
    return (Object.keys(CONSTRUCTS) as Axis[]).map((axis) => ({
      axis,
      values: CONSTRUCTS[axis],
    }));
  }

  activeValue(child: ChildColour, axis: Axis): string | null {
    return this.current.get(`${child}/${axis}`) ?? null;
  }

  /**
   * Press a construct button at the playhead. Returns true when a
   * message was sent, false for the same-value no-op.
   */
  async press(child: ChildColour, axis: Axis, value: string, playheadUs: number): Promise<boolean> {
    const key = `${child}/${axis}`;
    if (this.current.get(key) === value) {
      return false; // pressing the active value again: no-op
    }
    if (playheadUs >= this.horizonUs) {
      throw new RangeError("playhead at or past the coding horizon");
    }
    await this.client.call("annot/add", {
      coder: this.coder,
      child,
      axis,
      value,
      start: Math.round(playheadUs),
      end: this.horizonUs,
      stamp: 0,
    });
    this.current.set(key, value);
    this.presses += 1;
    return true;
  }

  /** Forget the live press state (e.g. after a seek far backwards). */
  resetPressState(): void {
    this.current.clear();
  }
}
