/**
 * Annotation timeline: one lane per (child, axis), coloured blocks from
 * the server-acknowledged tracks, a playhead clamped to the bag bounds
 * and a zoom window. Lanes are rebuilt wholesale from the server; the
 * client never edits blocks locally, so lanes can never overlap unless
 * the server's exclusivity invariant broke.
 */

import { AXES, Axis, CHILD_COLOURS, ChildColour } from "./envelopes.js";

export interface TrackInterval {
  coder: string;
  child: ChildColour;
  axis: Axis;
  value: string;
  start: number;
  end: number;
}

export interface Block {
  value: string;
  start: number;
  end: number;
}

export type LaneKey = `${ChildColour}/${Axis}`;

export function laneKey(child: ChildColour, axis: Axis): LaneKey {
  return `${child}/${axis}`;
}

export class LaneOverlapError extends Error {}

export class TimelineModel {
  lanes = new Map<LaneKey, Block[]>();
  playhead = 0;
  zoom: { start: number; end: number };

  constructor(
    public bounds: { start: number; end: number },
    public coder: string
  ) {
    this.zoom = { ...bounds };
    this.playhead = bounds.start;
    for (const child of CHILD_COLOURS) {
      for (const axis of AXES) {
        this.lanes.set(laneKey(child, axis), []);
      }
    }
  }

  /** Replace all lanes from the server's track dump (this coder only). */
  setTracks(intervals: TrackInterval[]): void {
    for (const lane of this.lanes.values()) lane.length = 0;
    const mine = intervals.filter((i) => i.coder === this.coder);
    mine.sort((a, b) => a.start - b.start);
    for (const interval of mine) {
      const lane = this.lanes.get(laneKey(interval.child, interval.axis));
      if (!lane) continue;
      const last = lane[lane.length - 1];
      if (last && interval.start < last.end) {
        throw new LaneOverlapError(
          `${interval.child}/${interval.axis}: block at ${interval.start} overlaps ${last.end}`
        );
      }
      lane.push({ value: interval.value, start: interval.start, end: interval.end });
    }
  }

  setPlayhead(t: number): number {
    this.playhead = Math.min(Math.max(t, this.bounds.start), this.bounds.end);
    return this.playhead;
  }

  setZoom(start: number, end: number): void {
    const lo = Math.max(this.bounds.start, Math.min(start, end));
    const hi = Math.min(this.bounds.end, Math.max(start, end));
    this.zoom = { start: lo, end: hi };
  }

  /** Blocks visible in the zoom window for one lane, clipped. */
  visibleBlocks(child: ChildColour, axis: Axis): Block[] {
    const lane = this.lanes.get(laneKey(child, axis)) ?? [];
    return lane
      .filter((b) => b.end > this.zoom.start && b.start < this.zoom.end)
      .map((b) => ({
        value: b.value,
        start: Math.max(b.start, this.zoom.start),
        end: Math.min(b.end, this.zoom.end),
      }));
  }

  valueAtPlayhead(child: ChildColour, axis: Axis): string | null {
    for (const block of this.lanes.get(laneKey(child, axis)) ?? []) {
      if (block.start <= this.playhead && this.playhead < block.end) return block.value;
    }
    return null;
  }
}
