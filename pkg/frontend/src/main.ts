/** Page wiring: socket, render loop, keyboard, buttons, settings panel. */

import { InputLoop } from "./input.js";
import { ReconnectingSocket } from "./net.js";
import { apiMove, pause, resume, type Outbound } from "./protocol.js";
import { SessionView } from "./state.js";
import {
  DEFAULT_VIEW,
  badgeFor,
  drawAltitudeGauge,
  drawPlaceholder,
  drawScene,
  formatReadout,
} from "./view.js";

function byId<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
}

const canvas = byId<HTMLCanvasElement>("scene");
canvas.width = DEFAULT_VIEW.width;
canvas.height = DEFAULT_VIEW.height;
const ctx = canvas.getContext("2d")!;

const badge = byId<HTMLSpanElement>("badge");
const readout = byId<HTMLSpanElement>("readout");
const statusEl = byId<HTMLSpanElement>("status");
const errorEl = byId<HTMLSpanElement>("lasterror");

const session = new SessionView();
const wsUrl = `ws://${location.host}/ws`;
const socket = new ReconnectingSocket(wsUrl, {
  onOpen: () => session.onOpen(),
  onClose: () => session.onClose(),
  onMessage: (m) => session.onMessage(m),
});

const send = (msg: Outbound) => {
  if (session.canSend()) socket.send(msg);
};
const input = new InputLoop(send);

let setpointDistance = 0.6;

function render(): void {
  const snap = session.latest;
  if (snap === null || session.status !== "connected") {
    drawPlaceholder(ctx, DEFAULT_VIEW, session.status === "connected" ? "waiting for snapshots..." : "disconnected");
  } else {
    drawScene(ctx, DEFAULT_VIEW, snap, setpointDistance);
    drawAltitudeGauge(ctx, DEFAULT_VIEW, snap.drone.z);
    const b = badgeFor(snap.state);
    badge.textContent = session.isStale() ? `${b.label} (stale)` : b.label;
    badge.style.background = session.isStale() ? "#9e9e9e" : b.color;
    readout.textContent = formatReadout(snap);
  }
  statusEl.textContent = session.status;
  errorEl.textContent = session.lastError ?? "";
  requestAnimationFrame(render);
}

document.addEventListener("keydown", (ev) => {
  if ((ev.target as HTMLElement)?.tagName === "INPUT") return;
  input.keyDown(ev.key);
});
document.addEventListener("keyup", (ev) => input.keyUp(ev.key));

byId<HTMLButtonElement>("summon").addEventListener("click", () => input.pressSummon());
byId<HTMLButtonElement>("relieve").addEventListener("click", () => input.pressRelieve());
byId<HTMLButtonElement>("pause").addEventListener("click", () => send(pause()));
byId<HTMLButtonElement>("resume").addEventListener("click", () => send(resume()));
byId<HTMLButtonElement>("climb").addEventListener("click", () =>
  send(apiMove({ kind: "z_relative", z: 0.2 }))
);
byId<HTMLButtonElement>("descend").addEventListener("click", () =>
  send(apiMove({ kind: "z_relative", z: -0.2 }))
);

function bindSlider(id: string, path: string, transform: (v: number) => number = (v) => v): void {
  const el = byId<HTMLInputElement>(id);
  el.addEventListener("change", () => {
    const v = transform(parseFloat(el.value));
    input.changeSetting(path, v);
    if (path === "gains.setpoint.distance") setpointDistance = v;
  });
}

bindSlider("patience", "behavior.patience");
bindSlider("tau-threshold", "behavior.tau_threshold", (deg) => (deg * Math.PI) / 180);
bindSlider("standoff", "gains.setpoint.distance");
byId<HTMLInputElement>("speed").addEventListener("change", (ev) => {
  input.config.speed = parseFloat((ev.target as HTMLInputElement).value);
});

for (const name of ["following", "stabilizer", "anc"]) {
  const el = byId<HTMLInputElement>(`feature-${name}`);
  el.addEventListener("change", () => input.changeSetting(`features.${name}`, el.checked));
}

socket.connect();
input.start();
requestAnimationFrame(render);
