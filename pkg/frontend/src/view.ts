/** Top-down scene math and drawing.
 *
 * World frame: X east, Y north, meters. Canvas: x right, y down, pixels.
 * The transform and marker placement are pure functions so the geometry is
 * testable without a canvas.
 */

import type { Snapshot, BehaviorStateName } from "./protocol.js";

export interface ViewConfig {
  width: number;
  height: number;
  pxPerMeter: number;
  centerX: number; // world coords at canvas center
  centerY: number;
}

export const DEFAULT_VIEW: ViewConfig = {
  width: 720,
  height: 720,
  pxPerMeter: 120,
  centerX: 1.0,
  centerY: 0.5,
};

// Camera half field of view of the simulated phone: atan((width/2)/f).
export const CAMERA_HALF_FOV = Math.atan2(640, 800);

export function worldToCanvas(view: ViewConfig, x: number, y: number): [number, number] {
  return [
    view.width / 2 + (x - view.centerX) * view.pxPerMeter,
    view.height / 2 - (y - view.centerY) * view.pxPerMeter,
  ];
}

export function setpointRing(
  view: ViewConfig,
  snap: Snapshot,
  setpointDistance: number
): { cx: number; cy: number; radiusPx: number } {
  const [cx, cy] = worldToCanvas(view, snap.human.x, snap.human.y);
  return { cx, cy, radiusPx: setpointDistance * view.pxPerMeter };
}

export function droneMarker(view: ViewConfig, snap: Snapshot): { cx: number; cy: number; yaw: number } {
  const [cx, cy] = worldToCanvas(view, snap.drone.x, snap.drone.y);
  return { cx, cy, yaw: snap.drone.yaw };
}

/** Distance in canvas px between the drone marker and the D* ring. */
export function droneRingGapPx(view: ViewConfig, snap: Snapshot, setpointDistance: number): number {
  const ring = setpointRing(view, snap, setpointDistance);
  const drone = droneMarker(view, snap);
  const radial = Math.hypot(drone.cx - ring.cx, drone.cy - ring.cy);
  return Math.abs(radial - ring.radiusPx);
}

export const BADGE_STYLE: Record<BehaviorStateName, { label: string; color: string }> = {
  home: { label: "Home", color: "#2e7d32" },
  idle: { label: "Idle", color: "#f9a825" },
  await: { label: "Await", color: "#1565c0" },
};

export function badgeFor(state: BehaviorStateName): { label: string; color: string } {
  return BADGE_STYLE[state];
}

export function formatReadout(snap: Snapshot): string {
  const tau = snap.tau_est === null ? "--" : ((snap.tau_est * 180) / Math.PI).toFixed(1);
  const d = snap.D_est === null ? "--" : snap.D_est.toFixed(2);
  return `tau ${tau} deg   D ${d} m`;
}

export function drawScene(
  ctx: CanvasRenderingContext2D,
  view: ViewConfig,
  snap: Snapshot,
  setpointDistance: number
): void {
  ctx.clearRect(0, 0, view.width, view.height);
  ctx.fillStyle = "#fafafa";
  ctx.fillRect(0, 0, view.width, view.height);

  // grid every meter
  ctx.strokeStyle = "#e0e0e0";
  ctx.lineWidth = 1;
  const metersAcross = view.width / view.pxPerMeter;
  for (let gx = Math.floor(view.centerX - metersAcross); gx <= view.centerX + metersAcross; gx++) {
    const [px] = worldToCanvas(view, gx, 0);
    ctx.beginPath();
    ctx.moveTo(px, 0);
    ctx.lineTo(px, view.height);
    ctx.stroke();
  }
  for (let gy = Math.floor(view.centerY - metersAcross); gy <= view.centerY + metersAcross; gy++) {
    const [, py] = worldToCanvas(view, 0, gy);
    ctx.beginPath();
    ctx.moveTo(0, py);
    ctx.lineTo(view.width, py);
    ctx.stroke();
  }

  // setpoint ring around the human
  const ring = setpointRing(view, snap, setpointDistance);
  ctx.strokeStyle = "#9e9e9e";
  ctx.setLineDash([6, 6]);
  ctx.beginPath();
  ctx.arc(ring.cx, ring.cy, ring.radiusPx, 0, 2 * Math.PI);
  ctx.stroke();
  ctx.setLineDash([]);

  // human: disc + heading tick
  const [hx, hy] = worldToCanvas(view, snap.human.x, snap.human.y);
  ctx.fillStyle = "#6a1b9a";
  ctx.beginPath();
  ctx.arc(hx, hy, 10, 0, 2 * Math.PI);
  ctx.fill();
  ctx.strokeStyle = "#6a1b9a";
  ctx.lineWidth = 3;
  ctx.beginPath();
  ctx.moveTo(hx, hy);
  ctx.lineTo(hx + 18 * Math.cos(snap.human.heading), hy - 18 * Math.sin(snap.human.heading));
  ctx.stroke();

  // drone: triangle along yaw + camera frustum
  const d = droneMarker(view, snap);
  ctx.save();
  ctx.translate(d.cx, d.cy);
  ctx.rotate(-d.yaw);
  ctx.fillStyle = badgeFor(snap.state).color;
  ctx.beginPath();
  ctx.moveTo(14, 0);
  ctx.lineTo(-9, 7);
  ctx.lineTo(-9, -7);
  ctx.closePath();
  ctx.fill();
  ctx.strokeStyle = "rgba(21,101,192,0.45)";
  ctx.lineWidth = 1.5;
  const frustum = 1.2 * view.pxPerMeter;
  for (const sign of [-1, 1]) {
    ctx.beginPath();
    ctx.moveTo(0, 0);
    ctx.lineTo(
      frustum * Math.cos(sign * CAMERA_HALF_FOV),
      frustum * Math.sin(sign * CAMERA_HALF_FOV)
    );
    ctx.stroke();
  }
  ctx.restore();
}

export function drawPlaceholder(ctx: CanvasRenderingContext2D, view: ViewConfig, text: string): void {
  ctx.clearRect(0, 0, view.width, view.height);
  ctx.fillStyle = "#eceff1";
  ctx.fillRect(0, 0, view.width, view.height);
  ctx.fillStyle = "#546e7a";
  ctx.font = "20px system-ui, sans-serif";
  ctx.textAlign = "center";
  ctx.fillText(text, view.width / 2, view.height / 2);
}

export function drawAltitudeGauge(
  ctx: CanvasRenderingContext2D,
  view: ViewConfig,
  z: number,
  zMax = 2.5
): void {
  const x = view.width - 26;
  const top = 20;
  const h = view.height - 40;
  ctx.strokeStyle = "#90a4ae";
  ctx.strokeRect(x, top, 12, h);
  const frac = Math.max(0, Math.min(1, z / zMax));
  ctx.fillStyle = "#1565c0";
  ctx.fillRect(x, top + h * (1 - frac), 12, h * frac);
  ctx.fillStyle = "#546e7a";
  ctx.font = "11px system-ui, sans-serif";
  ctx.textAlign = "center";
  ctx.fillText(`${z.toFixed(2)} m`, x + 6, top + h + 14);
}
