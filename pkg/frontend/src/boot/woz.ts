/** Wizard console: mirrored game, drag-to-command, action buttons. */

import { connectGateway, el, renderLoop } from "./common.js";
import { UiGameView, snapshotFromEnvelope } from "../gameView.js";
import { Viewport } from "../touchSurface.js";
import { WozConsole } from "../wozConsole.js";
import { drawScene } from "../render.js";

async function main() {
  const client = await connectGateway();
  const view = new UiGameView();
  view.attach(client);
  await client.subscribe(["game/*", "session/*", "robot/*"]);
  view.applySnapshot(snapshotFromEnvelope(await client.call("_snapshot")) as never);

  const woz = new WozConsole(client, view);
  const canvas = el<HTMLCanvasElement>("mirror");
  const ctx = canvas.getContext("2d")!;
  const viewport = new Viewport(canvas.width, canvas.height);

  canvas.addEventListener("pointerdown", (ev) => {
    const r = canvas.getBoundingClientRect();
    const [x, y] = viewport.toMetres(ev.clientX - r.left, ev.clientY - r.top);
    const item = view.itemAt(x, y);
    if (item) woz.beginDrag(item.id);
  });
  canvas.addEventListener("pointermove", (ev) => {
    const r = canvas.getBoundingClientRect();
    const [x, y] = viewport.toMetres(ev.clientX - r.left, ev.clientY - r.top);
    woz.dragTo(x, y);
  });
  canvas.addEventListener("pointerup", () => void woz.release());

  el<HTMLButtonElement>("calibrate").onclick = () => void woz.captureCalibration();
  el<HTMLButtonElement>("say").onclick = () => {
    const text = prompt("robot says:");
    if (text) void woz.say(text);
  };
  el<HTMLButtonElement>("gaze").onclick = () => void woz.gazeAt(0.3, 0.165);

  const toastBox = el<HTMLDivElement>("toasts");
  renderLoop(() => {
    drawScene(ctx, view, viewport);
    // drag ghost
    const ghost = woz.dragGhost;
    if (ghost) {
      const [px, py] = viewport.toPixels(ghost.x, ghost.y);
      ctx.strokeStyle = "#ffcc00";
      ctx.lineWidth = 2;
      ctx.strokeRect(px - 14, py - 14, 28, 28);
    }
    toastBox.innerHTML = woz.toasts
      .slice(-4)
      .map((t) => `<div class="toast ${t.kind}">${t.text}</div>`)
      .join("");
  });
}

main().catch((err) => {
  document.body.innerHTML = `<pre class="error">${String(err)}</pre>`;
});
