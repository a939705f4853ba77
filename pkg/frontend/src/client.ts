// Websocket session driver. Owns one socket and one projection and keeps
// them consistent: frames are folded in seq order, rejections surface to
// the caller, and a detected gap tears the session down and rejoins (the
// fresh welcome carries full state, so replay lands on the same scene).

import { SequenceGap } from "./errors";
import { RoomProjection } from "./projection";
import type {
  ClientMessage,
  OpDoc,
  RejectedEvent,
  ServerEvent,
  WelcomeEvent,
} from "./protocol";

export type SocketLike = {
  send(data: string): void;
  close(): void;
  onopen: (() => void) | null;
  onmessage: ((event: { data: string }) => void) | null;
  onclose: (() => void) | null;
};

export type RoomClientOptions = {
  url: string;
  room: string;
  name: string;
  /** Socket factory; defaults to the browser WebSocket. */
  connect?: (url: string) => SocketLike;
  onWelcome?: (projection: RoomProjection) => void;
  onEvent?: (event: ServerEvent, projection: RoomProjection) => void;
  onRejected?: (rejected: RejectedEvent) => void;
  onError?: (error: Error) => void;
};

function defaultConnect(url: string): SocketLike {
  return new WebSocket(url) as unknown as SocketLike;
}

export class RoomClient {
  projection: RoomProjection | null = null;

  private readonly opts: RoomClientOptions;
  private socket: SocketLike | null = null;
  private stopped = false;

  constructor(opts: RoomClientOptions) {
    this.opts = opts;
  }

  start(): void {
    this.stopped = false;
    this.openSocket();
  }

  stop(): void {
    this.stopped = true;
    this.socket?.close();
    this.socket = null;
  }

  sendOp(op: OpDoc): void {
    this.sendMessage({ type: "op", op });
  }

  undo(entryId: number): void {
    this.sendMessage({ type: "undo", entryId });
  }

  select(entityId: string | null): void {
    this.sendMessage({ type: "select", entityId });
  }

  private sendMessage(message: ClientMessage): void {
    if (!this.socket) throw new Error("session is not connected");
    this.socket.send(JSON.stringify(message));
  }

  private openSocket(): void {
    const connect = this.opts.connect ?? defaultConnect;
    const socket = connect(this.opts.url);
    this.socket = socket;
    socket.onopen = () => {
      socket.send(JSON.stringify({ type: "join", room: this.opts.room, name: this.opts.name }));
    };
    socket.onmessage = (frame) => this.handleFrame(frame.data);
    socket.onclose = () => {
      if (this.socket === socket) this.socket = null;
    };
  }

  /** Drop the dead session and join again from scratch. */
  private resync(): void {
    this.projection = null;
    this.socket?.close();
    this.socket = null;
    if (!this.stopped) this.openSocket();
  }

  private handleFrame(raw: string): void {
    let event: ServerEvent;
    try {
      event = JSON.parse(raw) as ServerEvent;
    } catch {
      this.opts.onError?.(new Error("server frame is not valid JSON"));
      return;
    }
    if (event.type === "rejected") {
      this.opts.onRejected?.(event);
      return;
    }
    if (event.type === "welcome") {
      this.projection = new RoomProjection(event as WelcomeEvent);
      this.opts.onWelcome?.(this.projection);
      return;
    }
    if (!this.projection) {
      this.opts.onError?.(new Error(`got ${event.type} before the welcome`));
      return;
    }
    try {
      if (this.projection.apply(event)) {
        this.opts.onEvent?.(event, this.projection);
      }
    } catch (error) {
      if (error instanceof SequenceGap) {
        this.resync();
        return;
      }
      this.opts.onError?.(error as Error);
    }
  }
}
