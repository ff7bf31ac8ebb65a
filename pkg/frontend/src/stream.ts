// Session event stream with auto-reconnect. On every (re)connect the server
// sends a snapshot marker; we surface it so the app can refetch state it may
// have missed while disconnected.

import type { StreamEvent } from "./types.js";

export interface EventSourceLike {
  addEventListener(type: string, listener: (event: MessageEvent) => void): void;
  close(): void;
  onerror: ((event: unknown) => void) | null;
}

export type EventSourceFactory = (url: string) => EventSourceLike;

const EVENT_KINDS = ["snapshot", "node_added", "head_changed", "hint", "error"] as const;

export class SessionStream {
  private url: string;
  private factory: EventSourceFactory;
  private source: EventSourceLike | null = null;
  private reconnectDelayMs: number;
  private timer: ReturnType<typeof setTimeout> | null = null;
  private closed = false;

  onEvent: (event: StreamEvent) => void = () => {};
  onReconnect: () => void = () => {};

  constructor(url: string, factory?: EventSourceFactory, reconnectDelayMs = 1000) {
    this.url = url;
    this.factory = factory ?? ((u) => new EventSource(u) as unknown as EventSourceLike);
    this.reconnectDelayMs = reconnectDelayMs;
  }

  connect(): void {
    this.closed = false;
    this.open(false);
  }

  private open(isReconnect: boolean): void {
    const source = this.factory(this.url);
    this.source = source;
    for (const kind of EVENT_KINDS) {
      source.addEventListener(kind, (event) => {
        this.onEvent({ kind, payload: JSON.parse(event.data) } as StreamEvent);
      });
    }
    source.onerror = () => {
      source.close();
      if (this.closed || this.source !== source) {
        return;
      }
      this.source = null;
      this.timer = setTimeout(() => this.open(true), this.reconnectDelayMs);
    };
    if (isReconnect) {
      this.onReconnect();
    }
  }

  close(): void {
    this.closed = true;
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
    this.source?.close();
    this.source = null;
  }
}
