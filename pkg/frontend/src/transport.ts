/**
 * Line transports for the gateway socket.
 *
 * The gateway speaks newline-delimited JSON over a plain TCP socket.
 * Node surfaces (tests, tools) use NodeTcpTransport; a browser build
 * plugs in WebSocketTransport against a WS bridge carrying the same
 * line protocol.
 */

export interface Transport {
  send(line: string): void;
  onLine(cb: (line: string) => void): void;
  onClose(cb: () => void): void;
  close(): void;
}

/** Splits a byte/string stream into newline-terminated lines. */
export class LineBuffer {
  private buffer = "";

  push(chunk: string, emit: (line: string) => void): void {
    this.buffer += chunk;
    for (;;) {
      const idx = this.buffer.indexOf("\n");
      if (idx < 0) break;
      const line = this.buffer.slice(0, idx);
      this.buffer = this.buffer.slice(idx + 1);
      if (line.length > 0) emit(line);
    }
  }
}

export class NodeTcpTransport implements Transport {
  private socket: import("node:net").Socket;
  private lineCbs: Array<(line: string) => void> = [];
  private closeCbs: Array<() => void> = [];
  private lines = new LineBuffer();

  private constructor(socket: import("node:net").Socket) {
    this.socket = socket;
    socket.setEncoding("utf8");
    socket.on("data", (chunk: string) =>
      this.lines.push(chunk, (line) => this.lineCbs.forEach((cb) => cb(line)))
    );
    const closed = () => this.closeCbs.forEach((cb) => cb());
    socket.on("close", closed);
    socket.on("error", () => socket.destroy());
  }

  static async connect(host: string, port: number): Promise<NodeTcpTransport> {
    const net = await import("node:net");
    return new Promise((resolve, reject) => {
      const socket = net.createConnection({ host, port }, () =>
        resolve(new NodeTcpTransport(socket))
      );
      socket.once("error", reject);
    });
  }

  send(line: string): void {
    this.socket.write(line);
  }

  onLine(cb: (line: string) => void): void {
    this.lineCbs.push(cb);
  }

  onClose(cb: () => void): void {
    this.closeCbs.push(cb);
  }

  close(): void {
    this.socket.end();
    this.socket.destroy();
  }
}

/** Browser-side transport over a WebSocket bridge (one line per message). */
export class WebSocketTransport implements Transport {
  private lineCbs: Array<(line: string) => void> = [];
  private closeCbs: Array<() => void> = [];
  private lines = new LineBuffer();

  constructor(private ws: WebSocket) {
    ws.addEventListener("message", (ev) =>
      this.lines.push(String(ev.data), (line) => this.lineCbs.forEach((cb) => cb(line)))
    );
    ws.addEventListener("close", () => this.closeCbs.forEach((cb) => cb()));
  }

  send(line: string): void {
    this.ws.send(line);
  }

  onLine(cb: (line: string) => void): void {
    this.lineCbs.push(cb);
  }

  onClose(cb: () => void): void {
    this.closeCbs.push(cb);
  }

  close(): void {
    this.ws.close();
  }
}

/** In-memory transport pair for unit tests. */
export class LoopbackTransport implements Transport {
  peer!: LoopbackTransport;
  sent: string[] = [];
  private lineCbs: Array<(line: string) => void> = [];
  private closeCbs: Array<() => void> = [];
  closed = false;

  static pair(): [LoopbackTransport, LoopbackTransport] {
    const a = new LoopbackTransport();
    const b = new LoopbackTransport();
    a.peer = b;
    b.peer = a;
    return [a, b];
  }

  send(line: string): void {
    if (this.closed) return;
    this.sent.push(line);
    for (const raw of line.split("\n")) {
      if (raw.length > 0) this.peer.lineCbs.forEach((cb) => cb(raw));
    }
  }

  /** Test hook: deliver a line as if it arrived from the wire. */
  deliver(line: string): void {
    this.lineCbs.forEach((cb) => cb(line));
  }

  onLine(cb: (line: string) => void): void {
    this.lineCbs.push(cb);
  }

  onClose(cb: () => void): void {
    this.closeCbs.push(cb);
  }

  close(): void {
    this.closed = true;
    this.closeCbs.forEach((cb) => cb());
  }
}
