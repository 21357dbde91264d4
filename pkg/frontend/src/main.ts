import { ServiceClient } from "./api";
import { EditBar } from "./editbar";
import { EditorSession, type Axis } from "./session";
import { Viewer } from "./viewer";
import "./style.css";

const api = new ServiceClient("");
let session: EditorSession | null = null;
let playing = false;

// Editing step sizes; adjustable in the settings box.
const settings = { translateStep: 0.01, rotateStepDeg: 15 };

const taskList = document.getElementById("task-list") as HTMLElement;
const instructionEl = document.getElementById("instruction") as HTMLElement;
const statusEl = document.getElementById("status") as HTMLElement;
const viewer = new Viewer(document.getElementById("viewer") as HTMLElement);
const editBar = new EditBar(document.getElementById("editbar") as HTMLElement, {
  onSelectAuthored: (i) => {
    session?.select(i);
    redraw();
  },
  onAddAt: (slot) => run(() => session!.addWaypointAt(slot)),
  onRemoveAuthored: (i) => run(() => session!.removeWaypoint(i)),
  onScrub: (position) => {
    session?.setPlayback(position);
    drawMarker();
  },
});

function setStatus(text: string, kind: "info" | "error" = "info"): void {
  statusEl.textContent = text;
  statusEl.className = kind;
}

function drawMarker(): void {
  if (!session || !session.preview) return;
  const idx = session.playbackIndex();
  viewer.placeMarker(session.preview.waypoints[idx] ?? null);
}

function redraw(): void {
  if (!session) return;
  viewer.showTrajectory(session.working, session.selected);
  viewer.showGhost(session.preview);
  editBar.render(session.preview, session.selected);
  drawMarker();
  const dirty = session.dirty ? " (unsaved edits)" : "";
  instructionEl.textContent = `${session.detail.instruction}${dirty}`;
}

async function run(action: () => Promise<{ ok: boolean; message?: string; id?: string }>) {
  if (!session) return;
  try {
    const result = await action();
    if (!result.ok) {
      setStatus(result.message ?? "blocked", "error");
    } else if (result.id) {
      setStatus(`submitted as ${result.id}`);
    } else {
      setStatus("ok");
    }
  } catch (err) {
    setStatus(err instanceof Error ? err.message : String(err), "error");
  }
  redraw();
}

async function loadTask(taskId: string): Promise<void> {
  setStatus(`loading ${taskId}...`);
  try {
    session = await EditorSession.load(api, taskId);
    session.select(0);
    viewer.showTask(session.detail);
    setStatus(`loaded ${taskId}`);
  } catch (err) {
    setStatus(err instanceof Error ? err.message : String(err), "error");
    return;
  }
  redraw();
}

async function refreshTaskList(): Promise<void> {
  const tasks = await api.listTasks();
  taskList.textContent = "";
  for (const task of tasks) {
    const item = document.createElement("button");
    item.className = "task";
    item.textContent = `${task.task_id}: ${task.instruction} (${task.demo_count} demos)`;
    item.addEventListener("click", () => void loadTask(task.task_id));
    taskList.appendChild(item);
  }
}

function needSelection(): number | null {
  if (!session) return null;
  if (session.selected === null) {
    setStatus("select a waypoint first", "error");
    return null;
  }
  return session.selected;
}

function translate(axis: Axis, direction: 1 | -1): void {
  const index = needSelection();
  if (index === null) return;
  void run(() => session!.translateWaypoint(index, axis, direction * settings.translateStep));
}

function rotate(axis: Axis, direction: 1 | -1): void {
  const index = needSelection();
  if (index === null) return;
  const angle = (direction * settings.rotateStepDeg * Math.PI) / 180;
  void run(() => session!.rotateWaypoint(index, axis, angle));
}

function wireControls(): void {
  const controls = document.getElementById("controls") as HTMLElement;
  const arrowRow = (label: string, axis: Axis) => {
    const row = document.createElement("div");
    row.className = "control-row";
    const minus = document.createElement("button");
    minus.textContent = `-${label}`;
    minus.addEventListener("click", () => translate(axis, -1));
    const plus = document.createElement("button");
    plus.textContent = `+${label}`;
    plus.addEventListener("click", () => translate(axis, 1));
    row.append(minus, plus);
    return row;
  };
  const ringRow = (label: string, axis: Axis) => {
    const row = document.createElement("div");
    row.className = "control-row";
    const ccw = document.createElement("button");
    ccw.textContent = `${label} ccw`;
    ccw.addEventListener("click", () => rotate(axis, 1));
    const cw = document.createElement("button");
    cw.textContent = `${label} cw`;
    cw.addEventListener("click", () => rotate(axis, -1));
    row.append(ccw, cw);
    return row;
  };

  const arrows = document.createElement("div");
  arrows.innerHTML = "<h3>move (arrows)</h3>";
  arrows.append(arrowRow("x", 0), arrowRow("y", 1), arrowRow("z", 2));
  const rings = document.createElement("div");
  rings.innerHTML = "<h3>orient (rings)</h3>";
  rings.append(ringRow("x", 0), ringRow("y", 1), ringRow("z", 2));

  const gripper = document.createElement("button");
  gripper.id = "gripper-toggle";
  gripper.textContent = "toggle gripper";
  gripper.addEventListener("click", () => {
    const index = needSelection();
    if (index !== null) void run(() => session!.toggleGripper(index));
  });

  const play = document.createElement("button");
  play.textContent = "play";
  play.addEventListener("click", () => {
    if (playing || !session) return;
    playing = true;
    const started = performance.now();
    const durationMs = 4000;
    const step = () => {
      if (!playing || !session) return;
      const u = Math.min((performance.now() - started) / durationMs, 1);
      session.setPlayback(u);
      drawMarker();
      if (u < 1) requestAnimationFrame(step);
      else playing = false;
    };
    requestAnimationFrame(step);
  });

  const submit = document.createElement("button");
  submit.id = "submit";
  submit.textContent = "submit demonstration";
  submit.addEventListener("click", () => void run(() => session!.submit()));

  const stepsBox = document.createElement("div");
  stepsBox.innerHTML = "<h3>step sizes</h3>";
  const tStep = document.createElement("input");
  tStep.type = "number";
  tStep.step = "0.005";
  tStep.value = String(settings.translateStep);
  tStep.addEventListener("change", () => (settings.translateStep = Number(tStep.value) || 0.01));
  const rStep = document.createElement("input");
  rStep.type = "number";
  rStep.step = "5";
  rStep.value = String(settings.rotateStepDeg);
  rStep.addEventListener("change", () => (settings.rotateStepDeg = Number(rStep.value) || 15));
  stepsBox.append("translate (m) ", tStep, document.createElement("br"), "rotate (deg) ", rStep);

  const help = document.createElement("pre");
  help.id = "help";
  help.textContent = [
    "keys:  a/d x   s/w y   f/r z  (move)",
    "       shift+same keys rotate",
    "       g toggle gripper, enter submit",
    "mouse: drag orbits, wheel zooms,",
    "       hover edit bar to scrub",
  ].join("\n");

  controls.append(arrows, rings, gripper, play, submit, stepsBox, help);

  const keyAxis: Record<string, [Axis, 1 | -1]> = {
    d: [0, 1],
    a: [0, -1],
    w: [1, 1],
    s: [1, -1],
    r: [2, 1],
    f: [2, -1],
  };
  document.addEventListener("keydown", (event) => {
    if (event.target instanceof HTMLInputElement) return;
    const key = event.key.toLowerCase();
    if (key in keyAxis) {
      const [axis, dir] = keyAxis[key];
      if (event.shiftKey) rotate(axis, dir);
      else translate(axis, dir);
    } else if (key === "g") {
      const index = needSelection();
      if (index !== null) void run(() => session!.toggleGripper(index));
    } else if (key === "enter") {
      void run(() => session!.submit());
    }
  });
}

wireControls();
void refreshTaskList().then(async () => {
  const tasks = await api.listTasks();
  if (tasks.length > 0) await loadTask(tasks[0].task_id);
});
