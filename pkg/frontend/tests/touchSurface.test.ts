import { describe, expect, it } from "vitest";

import { TouchSurface, Viewport } from "../src/touchSurface.js";
import { UiGameView } from "../src/gameView.js";
import { FakeGateway } from "./fakeGateway.js";

function setup() {
  const gw = new FakeGateway();
  const view = new UiGameView();
  view.applySnapshot({
    items: [{ id: "ball", kind: "object", x: 0.3, y: 0.165, w: 0.05, h: 0.05, z: 1 }],
    strokes: [],
    background: Buffer.from(new Uint8Array(120 * 66)).toString("base64"),
    mode: "freeplay",
    session: null,
  });
  const surface = new TouchSurface(gw.client, view, "purple", new Viewport(600, 330));
  return { gw, view, surface };
}

describe("viewport mapping", () => {
  it("maps pixels to metres with a bottom-left origin", () => {
    const vp = new Viewport(600, 330);
    expect(vp.toMetres(0, 330)).toEqual([0, 0]);
    expect(vp.toMetres(600, 0)).toEqual([0.6, 0.33]);
    const [x, y] = vp.toMetres(300, 165);
    expect(x).toBeCloseTo(0.3);
    expect(y).toBeCloseTo(0.165);
  });

  it("round-trips through toPixels", () => {
    const vp = new Viewport(800, 440);
    const [px, py] = vp.toPixels(0.45, 0.1);
    const [x, y] = vp.toMetres(px, py);
    expect(x).toBeCloseTo(0.45);
    expect(y).toBeCloseTo(0.1);
  });
});

describe("touch surface", () => {
  it("emits a down/move/up triplet on game/touches", async () => {
    const { gw, surface } = setup();
    await surface.pointerDown(7, 300, 165);
    await surface.pointerMove(7, 400, 165);
    await surface.pointerUp(7, 400, 165);
    const touches = gw.received.filter((e) => e.topic === "game/touches");
    expect(touches.map((e) => e.payload.phase)).toEqual(["down", "move", "up"]);
    expect(touches[0].payload.source).toBe("child_purple");
    const ids = new Set(touches.map((e) => e.payload.touch_id));
    expect(ids.size).toBe(1);
  });

  it("echoes the dragged item locally before the server confirms", async () => {
    const { view, surface } = setup();
    await surface.pointerDown(1, 300, 165); // on the ball
    await surface.pointerMove(1, 450, 165);
    const ball = view.items.get("ball")!;
    expect(ball.echoed).toBe(true);
    expect(ball.x).toBeCloseTo(0.45);
  });

  it("draw tool emits tool selection then stroke touches", async () => {
    const { gw, surface } = setup();
    await surface.selectTool("draw", 5);
    await surface.pointerDown(1, 100, 100);
    await surface.pointerUp(1, 150, 110);
    const topics = gw.received.map((e) => e.topic);
    expect(topics[0]).toBe("game/tools");
    expect(gw.received[0].payload.colour).toBe(5);
    expect(topics.filter((t) => t === "game/touches")).toHaveLength(2);
  });

  it("drops events and raises the banner while offline", async () => {
    const { gw, surface } = setup();
    gw.disconnect();
    await surface.pointerDown(1, 300, 165);
    await surface.pointerMove(1, 310, 165);
    expect(surface.offlineBanner).toBe(true);
    expect(surface.dropped).toBeGreaterThan(0);
    expect(gw.received.filter((e) => e.topic === "game/touches")).toHaveLength(0);
  });

  it("ignores moves for unknown pointers", async () => {
    const { gw, surface } = setup();
    await surface.pointerMove(99, 300, 165);
    expect(gw.received).toHaveLength(0);
  });
});
