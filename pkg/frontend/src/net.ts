/** WebSocket wrapper with automatic reconnect (no page reload needed). */

import { parseInbound, type Inbound, type Outbound } from "./protocol.js";

export interface SocketHandlers {
  onOpen: () => void;
  onClose: () => void;
  onMessage: (msg: Inbound) => void;
}

export class ReconnectingSocket {
  private ws: WebSocket | null = null;
  private closed = false;
  private retryMs = 500;

  constructor(private url: string, private handlers: SocketHandlers) {}

  connect(): void {
    if (this.closed) return;
    this.ws = new WebSocket(this.url);
    this.ws.onopen = () => {
      this.retryMs = 500;
      this.handlers.onOpen();
    };
    this.ws.onmessage = (ev: MessageEvent) => {
      const msg = parseInbound(String(ev.data));
      if (msg !== null) this.handlers.onMessage(msg);
    };
    this.ws.onclose = () => {
      this.handlers.onClose();
      this.ws = null;
      if (!this.closed) {
        setTimeout(() => this.connect(), this.retryMs);
        this.retryMs = Math.min(this.retryMs * 2, 5000);
      }
    };
    this.ws.onerror = () => {
      this.ws?.close();
    };
  }

  send(msg: Outbound): boolean {
    if (this.ws === null || this.ws.readyState !== WebSocket.OPEN) return false;
    this.ws.send(JSON.stringify(msg));
    return true;
  }

  close(): void {
    this.closed = true;
    this.ws?.close();
  }
}
