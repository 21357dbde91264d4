import type {
  FieldError,
  InterpolationJson,
  SubmitResponse,
  TaskDetail,
  TaskSummary,
  TrajectoryJson,
  WaypointJson,
} from "./types";

export class ApiError extends Error {
  status: number;
  fieldErrors: FieldError[];

  constructor(status: number, message: string, fieldErrors: FieldError[] = []) {
    super(message);
    this.status = status;
    this.fieldErrors = fieldErrors;
  }
}

function parseFieldErrors(body: unknown): FieldError[] {
  if (typeof body !== "object" || body === null) return [];
  const detail = (body as { detail?: unknown }).detail;
  if (!Array.isArray(detail)) {
    return typeof detail === "string" ? [{ path: [], message: detail }] : [];
  }
  return detail.map((entry) => ({
    path: Array.isArray(entry.loc) ? entry.loc : [],
    message: typeof entry.msg === "string" ? entry.msg : JSON.stringify(entry),
  }));
}

export class ServiceClient {
  constructor(readonly baseUrl: string) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await fetch(`${this.baseUrl}${path}`, init);
    if (!response.ok) {
      let body: unknown = null;
      try {
        body = await response.json();
      } catch {
        // non-JSON error body; keep the status only
      }
      const fields = parseFieldErrors(body);
      let message = `request failed with status ${response.status}`;
      if (fields.length > 0) {
        const path = fields[0].path.join(".");
        message = path ? `${path}: ${fields[0].message}` : fields[0].message;
      }
      throw new ApiError(response.status, message, fields);
    }
    return (await response.json()) as T;
  }

  health(): Promise<{ status: string; tasks: number; demos: number; model_loaded: boolean }> {
    return this.request("/health");
  }

  listTasks(): Promise<TaskSummary[]> {
    return this.request("/tasks");
  }

  getTask(taskId: string): Promise<TaskDetail> {
    return this.request(`/tasks/${taskId}`);
  }

  getDemos(taskId: string): Promise<{ task_id: string; demos: TrajectoryJson[] }> {
    return this.request(`/tasks/${taskId}/demos`);
  }

  interpolate(waypoints: WaypointJson[], samplesPerSegment?: number): Promise<InterpolationJson> {
    const body: Record<string, unknown> = { waypoints };
    if (samplesPerSegment !== undefined) body.samples_per_segment = samplesPerSegment;
    return this.request("/interpolate", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  submit(taskId: string, waypoints: WaypointJson[]): Promise<SubmitResponse> {
    return this.request(`/tasks/${taskId}/demos`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ waypoints }),
    });
  }

  score(taskId: string, top = 5): Promise<{ ranking: { traj_id: string; probability: number }[] }> {
    return this.request(`/tasks/${taskId}/score?top=${top}`);
  }
}
