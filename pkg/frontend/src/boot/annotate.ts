/** Annotation tool: seekable replay, timeline lanes, two coding panels. */

import { connectGateway, el, query, renderLoop } from "./common.js";
import { UiGameView } from "../gameView.js";
import { Viewport } from "../touchSurface.js";
import { drawScene, PALETTE } from "../render.js";
import { SeekController, SeekFrame } from "../seek.js";
import { CodingPanel } from "../codingPanel.js";
import { TimelineModel, TrackInterval, laneKey } from "../timeline.js";
import { AXES, Axis, CHILD_COLOURS, ChildColour, CONSTRUCTS } from "../envelopes.js";

const AXIS_COLOURS: Record<Axis, string> = {
  task_engagement: "#7aa6de",
  social_engagement: "#8ed08b",
  social_attitude: "#deb06f",
};

async function main() {
  const coder = query("coder", "coder1");
  const client = await connectGateway();
  const bags = (await client.call("_bags")).payload as {
    bags: Array<{ name: string; start: number; end: number }>;
  };
  if (bags.bags.length === 0) {
    document.body.innerHTML = "<pre class='error'>no recorded bags in the server's bag dir</pre>";
    return;
  }
  const bag = bags.bags[0];
  el<HTMLSpanElement>("bag-label").textContent = `${bag.name} (${((bag.end - bag.start) / 6e7).toFixed(1)} min)`;

  const view = new UiGameView();
  const canvas = el<HTMLCanvasElement>("viewer");
  const ctx = canvas.getContext("2d")!;
  const viewport = new Viewport(canvas.width, canvas.height);
  const seek = new SeekController(client, bag.name);
  const timeline = new TimelineModel({ start: bag.start, end: bag.end }, coder);
  const panel = new CodingPanel(client, coder, bag.end);

  seek.onFrame((frame: SeekFrame) => {
    view.applySnapshot({
      items: frame.items,
      strokes: frame.strokes,
      background: frame.background,
      mode: "freeplay",
      session: null,
    });
  });

  const scrub = el<HTMLInputElement>("scrub");
  scrub.min = String(bag.start);
  scrub.max = String(bag.end);
  scrub.value = String(bag.start);
  scrub.oninput = () => {
    timeline.setPlayhead(Number(scrub.value));
    seek.request(timeline.playhead);
  };
  void seek.seekNow(bag.start);

  async function refreshTracks() {
    const tracks = (await client.call("_annot_tracks")).payload as { tracks: TrackInterval[] };
    timeline.setTracks(tracks.tracks);
  }
  await refreshTracks();

  // two mirrored three-row button panels
  for (const child of CHILD_COLOURS) {
    const host = el<HTMLDivElement>(`panel-${child}`);
    for (const axis of AXES) {
      const row = document.createElement("div");
      row.className = "axis-row";
      row.style.background = AXIS_COLOURS[axis] + "33";
      for (const value of CONSTRUCTS[axis]) {
        const button = document.createElement("button");
        button.textContent = value.replace("_", " ");
        button.dataset.key = `${child}/${axis}/${value}`;
        button.onclick = async () => {
          await panel.press(child as ChildColour, axis, value, timeline.playhead);
          await refreshTracks();
        };
        row.appendChild(button);
      }
      host.appendChild(row);
    }
  }

  el<HTMLButtonElement>("export").onclick = async () => {
    const text = ((await client.call("_annot_export")).payload as { text: string }).text;
    const blob = new Blob([text], { type: "text/tab-separated-values" });
    const a = document.createElement("a");
    a.href = URL.createObjectURL(blob);
    a.download = `${bag.name}.annotations.tsv`;
    a.click();
  };

  const lanesCanvas = el<HTMLCanvasElement>("lanes");
  const lanesCtx = lanesCanvas.getContext("2d")!;
  function drawTimeline() {
    const { width, height } = lanesCanvas;
    lanesCtx.fillStyle = "#181818";
    lanesCtx.fillRect(0, 0, width, height);
    const laneKeys = CHILD_COLOURS.flatMap((child) => AXES.map((axis) => [child, axis] as const));
    const laneH = height / laneKeys.length;
    const span = bag.end - bag.start || 1;
    laneKeys.forEach(([child, axis], i) => {
      lanesCtx.fillStyle = "#222";
      lanesCtx.fillRect(0, i * laneH + 1, width, laneH - 2);
      for (const block of timeline.lanes.get(laneKey(child, axis)) ?? []) {
        const x0 = ((block.start - bag.start) / span) * width;
        const x1 = ((block.end - bag.start) / span) * width;
        lanesCtx.fillStyle = AXIS_COLOURS[axis];
        lanesCtx.fillRect(x0, i * laneH + 3, Math.max(1, x1 - x0), laneH - 6);
      }
      lanesCtx.fillStyle = "#bbb";
      lanesCtx.font = "10px sans-serif";
      lanesCtx.textAlign = "left";
      lanesCtx.textBaseline = "top";
      lanesCtx.fillText(`${child} · ${axis}`, 4, i * laneH + 4);
    });
    const px = ((timeline.playhead - bag.start) / span) * width;
    lanesCtx.fillStyle = "#ff4040";
    lanesCtx.fillRect(px, 0, 2, height);
  }

  renderLoop(() => {
    drawScene(ctx, view, viewport);
    drawTimeline();
    document.querySelectorAll<HTMLButtonElement>("button[data-key]").forEach((b) => {
      const [child, axis, value] = b.dataset.key!.split("/");
      b.classList.toggle(
        "active",
        panel.activeValue(child as ChildColour, axis as Axis) === value
      );
    });
  });
}

main().catch((err) => {
  document.body.innerHTML = `<pre class="error">${String(err)}</pre>`;
});

// palette referenced so bundlers keep the shared colours in one chunk
void PALETTE;
