export type GripperState = "open" | "closed" | "holding";

export interface WaypointJson {
  g: GripperState;
  t: [number, number, number];
  r: [number, number, number, number];
}

export interface TrajectoryJson {
  id: string;
  source: string;
  waypoints: WaypointJson[];
}

export interface TaskSummary {
  task_id: string;
  object_id: string;
  manual_id: string;
  instruction: string;
  demo_count: number;
}

export interface TaskDetail extends TaskSummary {
  part_id: string;
  points: number[][];
  highlight: number[];
  seed_trajectory: TrajectoryJson | null;
  frame: { origin: number[]; basis: number[][] };
}

export interface InterpolationJson {
  waypoints: WaypointJson[];
  authored_indices: number[];
  samples_per_segment: number;
}

export interface SubmitResponse {
  id: string;
  task: string;
  demo_count: number;
  trajectory: TrajectoryJson;
}

export interface FieldError {
  path: (string | number)[];
  message: string;
}

export function cloneWaypoint(w: WaypointJson): WaypointJson {
  return { g: w.g, t: [...w.t], r: [...w.r] };
}

export function cloneWaypoints(ws: WaypointJson[]): WaypointJson[] {
  return ws.map(cloneWaypoint);
}
