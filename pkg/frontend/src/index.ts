export * from "./envelopes.js";
export * from "./transport.js";
export * from "./client.js";
export * from "./gameView.js";
export * from "./touchSurface.js";
export * from "./wozConsole.js";
export * from "./dashboard.js";
export * from "./timeline.js";
export * from "./codingPanel.js";
export * from "./seek.js";
export * from "./render.js";
