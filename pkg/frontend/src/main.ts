// Console wiring: snapshot polling + event stream -> view model -> panels.

import { getState, postCommand, postControl, postCue, streamEvents } from "./api.js";
import { arrowToGesture } from "./gesture.js";
import {
  applyEvent,
  applySnapshot,
  initialViewModel,
  setConnected,
  ViewModel,
} from "./state.js";
import {
  drawFloorplan,
  fitViewport,
  renderCuePanel,
  renderGraphPanel,
  renderPlanPanel,
  renderTopbar,
  toWorld,
} from "./render.js";
import type { RunEvent } from "./types.js";

let vm: ViewModel = initialViewModel();
let pendingArrow: [number, number, number, number] | null = null;
let arrowStart: [number, number] | null = null;
let debugOverlay = false;
const rooms = new Map<string, [number, number][]>();

const $ = (id: string) => document.getElementById(id) as HTMLElement;
const canvas = () => document.getElementById("floorplan") as HTMLCanvasElement;

function redraw(): void {
  renderTopbar($("topbar"), vm);
  drawFloorplan(canvas(), vm, debugOverlay, pendingArrow, rooms);
  renderPlanPanel($("plan-panel"), vm);
  renderGraphPanel($("graph-panel"), vm);
  renderCuePanel($("cue-panel"), vm);
  $("banner").style.display = vm.connected ? "none" : "block";
}

function note(msg: string, isError = false): void {
  const el = $("notice");
  el.textContent = msg;
  el.className = isError ? "error" : "info";
  if (msg) setTimeout(() => { el.textContent = ""; }, 4000);
}

async function refreshSnapshot(): Promise<void> {
  const result = await getState();
  if (result.ok && result.value) {
    vm = applySnapshot(vm, result.value);
    redraw();
  }
}

function startStream(from: number): void {
  vm = setConnected(vm, true);
  streamEvents(
    from,
    (event: RunEvent) => {
      vm = applyEvent(vm, event);
      redraw();
    },
    (error) => {
      vm = setConnected(vm, false);
      redraw();
      // finished runs close the stream cleanly; reconnect only on faults
      if (error) setTimeout(() => startStream(vm.cursor), 1000);
      else refreshSnapshot();
    },
  );
}

function wireForms(): void {
  $("command-form").addEventListener("submit", async (ev) => {
    ev.preventDefault();
    const input = $("command-text") as HTMLInputElement;
    const result = await postCommand(input.value);
    result.ok ? note(`command accepted: ${input.value}`)
              : note(result.error ?? "rejected", true);
    if (result.ok) input.value = "";
  });
  $("verbal-form").addEventListener("submit", async (ev) => {
    ev.preventDefault();
    const input = $("verbal-text") as HTMLInputElement;
    const result = await postCue({ type: "verbal", text: input.value });
    result.ok ? note("verbal cue queued") : note(result.error ?? "rejected", true);
    if (result.ok) input.value = "";
  });
  $("written-form").addEventListener("submit", async (ev) => {
    ev.preventDefault();
    const input = $("written-text") as HTMLInputElement;
    const result = await postCue({
      type: "written", text: input.value, seen_at: [0, 0, 0.5],
    });
    result.ok ? note("written cue queued") : note(result.error ?? "rejected", true);
    if (result.ok) input.value = "";
  });
  for (const mode of ["run", "pause", "step"] as const) {
    $(`btn-${mode}`).addEventListener("click", async () => {
      await postControl(mode, 10);
      refreshSnapshot();
    });
  }
  ($("debug-toggle") as HTMLInputElement).addEventListener("change", (ev) => {
    debugOverlay = (ev.target as HTMLInputElement).checked;
    redraw();
  });
}

function wireGestureDrawing(): void {
  const el = canvas();
  el.addEventListener("pointerdown", (ev) => {
    arrowStart = [ev.offsetX, ev.offsetY];
  });
  el.addEventListener("pointermove", (ev) => {
    if (!arrowStart) return;
    pendingArrow = [arrowStart[0], arrowStart[1], ev.offsetX, ev.offsetY];
    redraw();
  });
  el.addEventListener("pointerup", async (ev) => {
    if (!arrowStart || !vm.snapshot) return;
    const vp = fitViewport(vm.snapshot, el.width, el.height);
    const [fromX, fromY] = toWorld(vp, arrowStart[0], arrowStart[1]);
    const [toX, toY] = toWorld(vp, ev.offsetX, ev.offsetY);
    arrowStart = null;
    pendingArrow = null;
    const cue = arrowToGesture({ fromX, fromY, toX, toY });
    if (!cue) {
      redraw();
      return;
    }
    const result = await postCue(cue);
    result.ok ? note("gesture cue queued") : note(result.error ?? "rejected", true);
    redraw();
  });
}

async function boot(): Promise<void> {
  const result = await getState();
  if (!result.ok || !result.value) {
    note("run service unreachable", true);
    setTimeout(boot, 1500);
    return;
  }
  vm = applySnapshot(vm, result.value);
  // room polygons are not part of the snapshot; approximate them from the
  // room nodes' neighborhoods is pointless, so fetch the floor plan once
  // from the bundled metadata the server serves alongside (fallback: none).
  deriveRoomsFromSnapshot();
  wireForms();
  wireGestureDrawing();
  startStream(0);
  setInterval(refreshSnapshot, 500);
  redraw();
}

function deriveRoomsFromSnapshot(): void {
  // Room polygons are not exposed over the API; draw rooms as generous
  // boxes around their furniture so the floor plan stays legible.
  if (!vm.snapshot) return;
  const edges = vm.snapshot.graph.edges.filter((e) => e.relation === "in");
  const nodes = new Map(vm.snapshot.graph.nodes.map((n) => [n.id, n]));
  const perRoom = new Map<string, [number, number][]>();
  for (const edge of edges) {
    const room = nodes.get(edge.object);
    const furniture = nodes.get(edge.subject);
    if (!room || !furniture?.pose || room.kind !== "room") continue;
    const list = perRoom.get(room.label) ?? [];
    list.push([furniture.pose.position[0], furniture.pose.position[1]]);
    perRoom.set(room.label, list);
  }
  rooms.clear();
  for (const [label, points] of perRoom) {
    const xs = points.map((p) => p[0]);
    const ys = points.map((p) => p[1]);
    const minX = Math.min(...xs) - 0.8, maxX = Math.max(...xs) + 0.8;
    const minY = Math.min(...ys) - 0.8, maxY = Math.max(...ys) + 0.8;
    rooms.set(label, [[minX, minY], [maxX, minY], [maxX, maxY], [minX, maxY]]);
  }
}

boot();
