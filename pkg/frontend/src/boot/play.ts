/** Child play surface: full-screen canvas, drag or draw with a colour bar. */

import { connectGateway, el, query, renderLoop } from "./common.js";
import { UiGameView, snapshotFromEnvelope } from "../gameView.js";
import { TouchSurface, Viewport } from "../touchSurface.js";
import { drawScene, PALETTE } from "../render.js";
import { ChildColour } from "../envelopes.js";

async function main() {
  const colour = (query("role", "purple") === "yellow" ? "yellow" : "purple") as ChildColour;
  const client = await connectGateway();
  const view = new UiGameView();
  view.attach(client);
  await client.subscribe(["game/*", "session/*"]);
  view.applySnapshot(snapshotFromEnvelope(await client.call("_snapshot")) as never);

  const canvas = el<HTMLCanvasElement>("surface");
  const ctx = canvas.getContext("2d")!;
  let viewport = new Viewport(canvas.width, canvas.height);
  const surface = new TouchSurface(client, view, colour, viewport);

  function resize() {
    // keep the 60:33 play-area aspect inside the window
    const aspect = 0.33 / 0.6;
    const w = Math.min(innerWidth, (innerHeight - 60) / aspect);
    canvas.width = Math.floor(w);
    canvas.height = Math.floor(w * aspect);
    viewport.widthPx = canvas.width;
    viewport.heightPx = canvas.height;
  }
  resize();
  addEventListener("resize", resize);

  canvas.addEventListener("pointerdown", (ev) => {
    canvas.setPointerCapture(ev.pointerId);
    const r = canvas.getBoundingClientRect();
    void surface.pointerDown(ev.pointerId, ev.clientX - r.left, ev.clientY - r.top);
  });
  canvas.addEventListener("pointermove", (ev) => {
    const r = canvas.getBoundingClientRect();
    void surface.pointerMove(ev.pointerId, ev.clientX - r.left, ev.clientY - r.top);
  });
  canvas.addEventListener("pointerup", (ev) => {
    const r = canvas.getBoundingClientRect();
    void surface.pointerUp(ev.pointerId, ev.clientX - r.left, ev.clientY - r.top);
  });

  const toolbar = el<HTMLDivElement>("tools");
  const dragButton = document.createElement("button");
  dragButton.textContent = "✋ drag";
  dragButton.className = "active";
  dragButton.onclick = () => {
    void surface.selectTool("drag");
    setActive(dragButton);
  };
  toolbar.appendChild(dragButton);
  PALETTE.forEach((hex, idx) => {
    const b = document.createElement("button");
    b.style.background = hex;
    b.title = `draw ${idx}`;
    b.textContent = "✏";
    b.onclick = () => {
      void surface.selectTool("draw", idx);
      setActive(b);
    };
    toolbar.appendChild(b);
  });
  function setActive(button: HTMLButtonElement) {
    toolbar.querySelectorAll("button").forEach((b) => b.classList.remove("active"));
    button.classList.add("active");
  }

  el<HTMLSpanElement>("who").textContent = `child ${colour}`;
  renderLoop(() => drawScene(ctx, view, viewport));
}

main().catch((err) => {
  document.body.innerHTML = `<pre class="error">${String(err)}</pre>`;
});
