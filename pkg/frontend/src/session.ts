import { ApiError, ServiceClient } from "./api";
import { fromAxisAngle, multiply, normalize, type Quat } from "./quat";
import {
  cloneWaypoint,
  cloneWaypoints,
  type FieldError,
  type GripperState,
  type InterpolationJson,
  type TaskDetail,
  type WaypointJson,
} from "./types";

export interface EditResult {
  ok: boolean;
  message?: string;
  id?: string;
}

export type Axis = 0 | 1 | 2;

// Fallback when a task has no seed trajectory to edit.
const DEFAULT_STUB: WaypointJson[] = [
  { g: "open", t: [0, 0, 0.1], r: [0, 0, 0, 1] },
  { g: "open", t: [0, 0, 0.02], r: [0, 0, 0, 1] },
];

/**
 * Client-side editing state for one task.
 *
 * The session owns the working waypoint list and the latest interpolated
 * preview fetched from the service. It never interpolates locally: every
 * edit re-requests the preview so the smoothing shown on screen is
 * byte-for-byte what the engine computes. Edits mutate only local state
 * until submit; a rejected submission leaves the session untouched.
 */
export class EditorSession {
  readonly taskId: string;
  readonly detail: TaskDetail;
  working: WaypointJson[];
  preview: InterpolationJson | null = null;
  selected: number | null = null;
  playback = 0;
  dirty = false;
  submittedId: string | null = null;
  lastError: FieldError[] | null = null;

  private api: ServiceClient;

  private constructor(api: ServiceClient, detail: TaskDetail, working: WaypointJson[]) {
    this.api = api;
    this.taskId = detail.task_id;
    this.detail = detail;
    this.working = working;
  }

  static async load(api: ServiceClient, taskId: string): Promise<EditorSession> {
    const detail = await api.getTask(taskId);
    const seed = detail.seed_trajectory;
    const working = cloneWaypoints(seed ? seed.waypoints : DEFAULT_STUB);
    const session = new EditorSession(api, detail, working);
    await session.refreshPreview();
    return session;
  }

  async refreshPreview(): Promise<void> {
    if (this.working.length >= 2) {
      this.preview = await this.api.interpolate(this.working);
    } else {
      this.preview = {
        waypoints: cloneWaypoints(this.working),
        authored_indices: [0],
        samples_per_segment: 0,
      };
    }
  }

  select(index: number | null): void {
    if (index !== null && (index < 0 || index >= this.working.length)) {
      throw new RangeError(`waypoint index ${index} out of bounds`);
    }
    this.selected = index;
  }

  /** Index into the interpolated preview for a playback position in [0, 1]. */
  playbackIndex(position = this.playback): number {
    if (!this.preview || this.preview.waypoints.length === 0) return 0;
    const clamped = Math.min(Math.max(position, 0), 1);
    return Math.floor(clamped * (this.preview.waypoints.length - 1));
  }

  setPlayback(position: number): void {
    this.playback = Math.min(Math.max(position, 0), 1);
  }

  private async afterEdit(): Promise<EditResult> {
    this.dirty = true;
    this.lastError = null;
    await this.refreshPreview();
    return { ok: true };
  }

  async translateWaypoint(index: number, axis: Axis, amount: number): Promise<EditResult> {
    const wp = this.working[index];
    if (!wp) return { ok: false, message: `no waypoint ${index}` };
    wp.t[axis] += amount;
    return this.afterEdit();
  }

  async rotateWaypoint(index: number, axis: Axis, angle: number): Promise<EditResult> {
    const wp = this.working[index];
    if (!wp) return { ok: false, message: `no waypoint ${index}` };
    const axes: [number, number, number][] = [
      [1, 0, 0],
      [0, 1, 0],
      [0, 0, 1],
    ];
    const delta = fromAxisAngle(axes[axis], angle);
    wp.r = normalize(multiply(delta, wp.r as Quat));
    return this.afterEdit();
  }

  async toggleGripper(index: number): Promise<EditResult> {
    const wp = this.working[index];
    if (!wp) return { ok: false, message: `no waypoint ${index}` };
    const next: Record<GripperState, GripperState> = {
      open: "closed",
      closed: "open",
      holding: "open",
    };
    wp.g = next[wp.g];
    return this.afterEdit();
  }

  async setGripper(index: number, state: GripperState): Promise<EditResult> {
    const wp = this.working[index];
    if (!wp) return { ok: false, message: `no waypoint ${index}` };
    wp.g = state;
    return this.afterEdit();
  }

  /**
   * Insert an authored waypoint at an interpolated (gray) slot of the
   * preview; the new waypoint takes the gray pose exactly.
   */
  async addWaypointAt(slot: number): Promise<EditResult> {
    if (!this.preview) return { ok: false, message: "no preview loaded" };
    if (slot < 0 || slot >= this.preview.waypoints.length) {
      return { ok: false, message: `no interpolated slot ${slot}` };
    }
    if (this.preview.authored_indices.includes(slot)) {
      return { ok: false, message: "slot holds an authored waypoint; pick a gray one" };
    }
    const pose = cloneWaypoint(this.preview.waypoints[slot]);
    const insertAt = this.preview.authored_indices.filter((i) => i < slot).length;
    this.working.splice(insertAt, 0, pose);
    const result = await this.afterEdit();
    this.selected = insertAt;
    return result;
  }

  async removeWaypoint(index: number): Promise<EditResult> {
    if (index < 0 || index >= this.working.length) {
      return { ok: false, message: `no waypoint ${index}` };
    }
    if (this.working.length <= 2) {
      return { ok: false, message: "a demonstration needs at least two waypoints" };
    }
    this.working.splice(index, 1);
    if (this.selected !== null && this.selected >= this.working.length) {
      this.selected = this.working.length - 1;
    }
    return this.afterEdit();
  }

  /**
   * Post the working trajectory. On success the session adopts the
   * server's canonical copy and clears the dirty flag; on a validation
   * failure the field errors are surfaced and every edit is kept.
   */
  async submit(): Promise<EditResult> {
    if (!this.dirty) {
      return { ok: false, message: "nothing to submit; no edits since the last submission" };
    }
    try {
      const response = await this.api.submit(this.taskId, this.working);
      this.working = cloneWaypoints(response.trajectory.waypoints);
      this.submittedId = response.id;
      this.dirty = false;
      this.lastError = null;
      await this.refreshPreview();
      return { ok: true, id: response.id };
    } catch (err) {
      if (err instanceof ApiError) {
        this.lastError = err.fieldErrors.length
          ? err.fieldErrors
          : [{ path: [], message: err.message }];
        return { ok: false, message: err.message };
      }
      throw err;
    }
  }
}
