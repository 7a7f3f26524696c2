// Rendering: canvas floor plan plus DOM panels, all drawn from the view
// model alone so a replayed stream paints the same pixels.

import type { ViewModel } from "./state.js";
import type { NodeJson, StateSnapshot } from "./types.js";

export interface Viewport {
  scale: number;
  offsetX: number;
  offsetY: number;
  height: number;
}

export function fitViewport(snapshot: StateSnapshot, width: number,
                            height: number, margin = 24): Viewport {
  let minX = Infinity, minY = Infinity, maxX = -Infinity, maxY = -Infinity;
  for (const node of snapshot.graph.nodes) {
    if (!node.pose) continue;
    const [x, y] = node.pose.position;
    minX = Math.min(minX, x); maxX = Math.max(maxX, x);
    minY = Math.min(minY, y); maxY = Math.max(maxY, y);
  }
  if (!isFinite(minX)) { minX = 0; minY = 0; maxX = 10; maxY = 5; }
  const scale = Math.min(
    (width - 2 * margin) / Math.max(maxX - minX, 1),
    (height - 2 * margin) / Math.max(maxY - minY, 1),
  );
  return {
    scale,
    offsetX: margin - minX * scale,
    offsetY: margin - minY * scale,
    height,
  };
}

export function toCanvas(vp: Viewport, x: number, y: number): [number, number] {
  // world y grows up; canvas y grows down
  return [x * vp.scale + vp.offsetX, vp.height - (y * vp.scale + vp.offsetY)];
}

export function toWorld(vp: Viewport, px: number, py: number): [number, number] {
  return [(px - vp.offsetX) / vp.scale,
          (vp.height - py - vp.offsetY) / vp.scale];
}

const KIND_COLORS: Record<NodeJson["kind"], string> = {
  room: "#30363d",
  furniture: "#58a6ff",
  object: "#ffd866",
  human: "#f97583",
  robot: "#3fb950",
};

export function drawFloorplan(canvas: HTMLCanvasElement, vm: ViewModel,
                              debug: boolean,
                              pendingArrow: [number, number, number, number] | null,
                              rooms: Map<string, [number, number][]>): void {
  const ctx = canvas.getContext("2d");
  if (!ctx || !vm.snapshot) return;
  const vp = fitViewport(vm.snapshot, canvas.width, canvas.height);
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.font = "11px sans-serif";

  for (const [name, polygon] of rooms) {
    ctx.beginPath();
    polygon.forEach(([x, y], i) => {
      const [px, py] = toCanvas(vp, x, y);
      i === 0 ? ctx.moveTo(px, py) : ctx.lineTo(px, py);
    });
    ctx.closePath();
    ctx.strokeStyle = KIND_COLORS.room;
    ctx.lineWidth = 2;
    ctx.stroke();
    const [lx, ly] = toCanvas(vp, polygon[0][0], polygon[0][1]);
    ctx.fillStyle = "#8b949e";
    ctx.fillText(name, lx + 6, ly - 6);
  }

  for (const node of vm.snapshot.graph.nodes) {
    if (!node.pose) continue;
    const [x, y] = node.pose.position;
    const [px, py] = toCanvas(vp, x, y);
    if (node.kind === "furniture") {
      ctx.fillStyle = "rgba(88,166,255,0.25)";
      ctx.fillRect(px - 14, py - 8, 28, 16);
      ctx.strokeStyle = KIND_COLORS.furniture;
      ctx.strokeRect(px - 14, py - 8, 28, 16);
      ctx.fillStyle = "#c9d1d9";
      ctx.fillText(node.label, px - 14, py - 12);
    } else if (node.kind === "human") {
      ctx.fillStyle = KIND_COLORS.human;
      ctx.beginPath();
      ctx.arc(px, py, 5, 0, Math.PI * 2);
      ctx.fill();
      ctx.fillStyle = "#c9d1d9";
      ctx.fillText(node.label, px + 7, py + 3);
    } else if (node.kind === "object" && debug) {
      // last observed position: the debug ground-truth-ish overlay
      ctx.strokeStyle = KIND_COLORS.object;
      ctx.strokeRect(px - 4, py - 4, 8, 8);
      ctx.fillStyle = KIND_COLORS.object;
      ctx.fillText(`${node.label} (seen)`, px + 6, py + 3);
    }
  }

  // believed object locations: diamonds on the landmark of the active edge
  const byLabel = new Map(vm.snapshot.graph.nodes.map((n) => [n.label, n]));
  for (const belief of vm.beliefs.values()) {
    const landmark = byLabel.get(belief.landmark);
    if (!landmark?.pose) continue;
    const [px, py] = toCanvas(vp, landmark.pose.position[0],
                              landmark.pose.position[1]);
    ctx.strokeStyle = KIND_COLORS.object;
    ctx.beginPath();
    ctx.moveTo(px, py - 16);
    ctx.lineTo(px + 6, py - 10);
    ctx.lineTo(px, py - 4);
    ctx.lineTo(px - 6, py - 10);
    ctx.closePath();
    ctx.stroke();
    ctx.fillStyle = KIND_COLORS.object;
    ctx.fillText(`${belief.subject}?`, px + 8, py - 10);
  }

  if (vm.robotTrail.length > 1) {
    ctx.strokeStyle = "rgba(63,185,80,0.5)";
    ctx.beginPath();
    vm.robotTrail.forEach(([x, y], i) => {
      const [px, py] = toCanvas(vp, x, y);
      i === 0 ? ctx.moveTo(px, py) : ctx.lineTo(px, py);
    });
    ctx.stroke();
  }
  const [rx, ry] = vm.snapshot.robot_pose;
  const [px, py] = toCanvas(vp, rx, ry);
  ctx.fillStyle = KIND_COLORS.robot;
  ctx.beginPath();
  ctx.arc(px, py, 7, 0, Math.PI * 2);
  ctx.fill();
  ctx.fillStyle = "#c9d1d9";
  ctx.fillText("robot", px + 9, py + 3);

  if (pendingArrow) {
    const [x0, y0, x1, y1] = pendingArrow;
    ctx.strokeStyle = "#d2a8ff";
    ctx.lineWidth = 2;
    ctx.beginPath();
    ctx.moveTo(x0, y0);
    ctx.lineTo(x1, y1);
    ctx.stroke();
  }
}

export function renderPlanPanel(el: HTMLElement, vm: ViewModel): void {
  const current = vm.planRevisions[vm.planRevisions.length - 1];
  const rows = vm.planRevisions
    .map((rev) => {
      const changed = current && rev.revision === current.revision
        ? " class=\"current\"" : "";
      return `<tr${changed}><td>r${rev.revision}</td><td>t${rev.tick}</td>` +
        `<td>${rev.firstTargetLabel ?? "-"}</td>` +
        `<td>${rev.actionSummary.join(" → ")}</td></tr>`;
    })
    .join("");
  el.innerHTML =
    `<table><thead><tr><th>rev</th><th>tick</th><th>first target</th>` +
    `<th>actions</th></tr></thead><tbody>${rows}</tbody></table>`;
}

export function renderGraphPanel(el: HTMLElement, vm: ViewModel): void {
  const rows = [...vm.beliefs.values()]
    .sort((a, b) => a.subject.localeCompare(b.subject))
    .map((b) =>
      `<tr><td>${b.subject}</td><td>${b.relation}</td><td>${b.landmark}</td>` +
      `<td>${b.confidence.toFixed(2)}</td><td>${b.source}</td>` +
      `<td>t${b.assertedAt}</td></tr>`)
    .join("");
  el.innerHTML =
    `<table><thead><tr><th>object</th><th>rel</th><th>landmark</th>` +
    `<th>conf</th><th>source</th><th>when</th></tr></thead>` +
    `<tbody>${rows || "<tr><td colspan=6>no placements yet</td></tr>"}</tbody></table>`;
}

export function renderCuePanel(el: HTMLElement, vm: ViewModel): void {
  const rows = vm.cues
    .map((c) => `<tr><td>t${c.tick}</td><td>${c.kind}</td><td>${c.detail}</td></tr>`)
    .join("");
  el.innerHTML =
    `<table><thead><tr><th>tick</th><th>kind</th><th>cue</th></tr></thead>` +
    `<tbody>${rows || "<tr><td colspan=3>none yet</td></tr>"}</tbody></table>`;
}

export function renderTopbar(el: HTMLElement, vm: ViewModel): void {
  const mode = vm.snapshot?.mode ?? "connecting";
  const dot = vm.connected ? "live" : "dead";
  el.innerHTML =
    `<span class="dot ${dot}"></span>` +
    `<b>tick ${vm.tick}</b> · mode ${mode} · ` +
    `task ${vm.taskObject ?? "(none)"} [${vm.taskStatus}] · ` +
    `cues ${vm.cues.length} · revisions ${vm.planRevisions.length}`;
}
