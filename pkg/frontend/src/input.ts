/** Keyboard teleoperation and settings-panel outbound messages.
 *
 * WASD translates the virtual human in world axes, Q/E rotates it. While
 * any movement key is held, user_move commands stream at the snapshot rate
 * (20 Hz); releasing everything sends one final zero move so the human
 * stops immediately instead of waiting for the server-side decay.
 *
 * DOM-free by design: the page adapter feeds key events in, a send
 * callback carries messages out, and the timer is injectable for tests.
 */

import { gesture, setValue, userMove, type Outbound } from "./protocol.js";

export const COMMAND_RATE_HZ = 20;

export interface InputConfig {
  speed: number;       // m/s while held
  turnRate: number;    // rad/s while held
}

export class InputLoop {
  private held = new Set<string>();
  private timer: ReturnType<typeof setInterval> | null = null;
  private wasMoving = false;

  constructor(
    private send: (msg: Outbound) => void,
    public config: InputConfig = { speed: 0.5, turnRate: 1.5 },
    private schedule: typeof setInterval = setInterval,
    private cancel: typeof clearInterval = clearInterval
  ) {}

  start(): void {
    if (this.timer === null) {
      this.timer = this.schedule(() => this.emit(), 1000 / COMMAND_RATE_HZ);
    }
  }

  stop(): void {
    if (this.timer !== null) {
      this.cancel(this.timer);
      this.timer = null;
    }
    this.held.clear();
  }

  keyDown(key: string): void {
    const k = key.toLowerCase();
    if ("wasdqe".includes(k)) this.held.add(k);
  }

  keyUp(key: string): void {
    this.held.delete(key.toLowerCase());
  }

  velocity(): { vx: number; vy: number; vheading: number } {
    const s = this.config.speed;
    let vx = 0;
    let vy = 0;
    let vheading = 0;
    if (this.held.has("w")) vy += s;
    if (this.held.has("s")) vy -= s;
    if (this.held.has("a")) vx -= s;
    if (this.held.has("d")) vx += s;
    if (this.held.has("q")) vheading += this.config.turnRate;
    if (this.held.has("e")) vheading -= this.config.turnRate;
    return { vx, vy, vheading };
  }

  /** One scheduler tick: stream while moving, one zero move on release. */
  emit(): void {
    const v = this.velocity();
    const moving = v.vx !== 0 || v.vy !== 0 || v.vheading !== 0;
    if (moving) {
      this.send(userMove(v.vx, v.vy, v.vheading));
    } else if (this.wasMoving) {
      this.send(userMove(0, 0, 0));
    }
    this.wasMoving = moving;
  }

  pressSummon(): void {
    this.send(gesture("summon"));
  }

  pressRelieve(): void {
    this.send(gesture("relieve"));
  }

  /** Settings panel bindings -> one set message per change. */
  changeSetting(path: string, value: number | boolean): void {
    this.send(setValue(path, value));
  }
}
