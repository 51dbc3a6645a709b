/** Session view-model: connection status, freshest snapshot, staleness.
 *
 * The client never simulates; it renders only what the server sent.
 */

import type { Inbound, Snapshot } from "./protocol.js";

export type ConnectionStatus = "connecting" | "connected" | "disconnected";

export const STALE_AFTER_MS = 1000;

export class SessionView {
  status: ConnectionStatus = "connecting";
  latest: Snapshot | null = null;
  lastError: string | null = null;
  private receivedAt = 0;

  constructor(private now: () => number = () => Date.now()) {}

  onOpen(): void {
    this.status = "connected";
  }

  onClose(): void {
    this.status = "disconnected";
  }

  onMessage(msg: Inbound): void {
    if (msg.type === "snapshot") {
      this.latest = msg;
      this.receivedAt = this.now();
    } else {
      this.lastError = msg.reason;
    }
  }

  /** No snapshot for over a second: show the stale indicator. */
  isStale(): boolean {
    if (this.latest === null) return true;
    return this.now() - this.receivedAt > STALE_AFTER_MS;
  }

  canSend(): boolean {
    return this.status === "connected";
  }
}
