// Pure session-logic tests with a fake service; no network.

import { describe, expect, it } from "vitest";
import type { ServiceClient } from "../src/api";
import { EditorSession } from "../src/session";
import type { InterpolationJson, TaskDetail, WaypointJson } from "../src/types";

function waypoint(x: number, g: WaypointJson["g"] = "open"): WaypointJson {
  return { g, t: [x, 0, 0], r: [0, 0, 0, 1] };
}

function fakeDetail(waypoints: WaypointJson[]): TaskDetail {
  return {
    task_id: "task-x",
    object_id: "obj",
    manual_id: "man",
    instruction: "turn the knob",
    demo_count: 1,
    part_id: "p",
    points: [[0, 0, 0, 1, 2, 3]],
    highlight: [0],
    seed_trajectory: { id: "seed", source: "crowd", waypoints },
    frame: { origin: [0, 0, 0], basis: [[1, 0, 0], [0, 1, 0], [0, 0, 1]] },
  };
}

/** Stand-in for the engine: one midpoint per segment. */
function fakeApi(detail: TaskDetail): ServiceClient {
  const fake = {
    async getTask() {
      return detail;
    },
    async interpolate(waypoints: WaypointJson[]): Promise<InterpolationJson> {
      const out: WaypointJson[] = [];
      const authored: number[] = [];
      waypoints.forEach((wp, i) => {
        authored.push(out.length);
        out.push(wp);
        const next = waypoints[i + 1];
        if (next) {
          out.push({
            g: wp.g,
            t: [(wp.t[0] + next.t[0]) / 2, (wp.t[1] + next.t[1]) / 2, (wp.t[2] + next.t[2]) / 2],
            r: [...wp.r],
          });
        }
      });
      return { waypoints: out, authored_indices: authored, samples_per_segment: 1 };
    },
    async submit() {
      throw new Error("not wired in unit tests");
    },
  };
  return fake as unknown as ServiceClient;
}

async function makeSession(xs: number[] = [0, 0.1, 0.2]): Promise<EditorSession> {
  const detail = fakeDetail(xs.map((x) => waypoint(x)));
  return EditorSession.load(fakeApi(detail), "task-x");
}

describe("playback", () => {
  it("maps position monotonically onto the interpolated path", async () => {
    const session = await makeSession();
    let previous = -1;
    for (let u = 0; u <= 1.0001; u += 0.05) {
      const idx = session.playbackIndex(Math.min(u, 1));
      expect(idx).toBeGreaterThanOrEqual(previous);
      previous = idx;
    }
    expect(session.playbackIndex(0)).toBe(0);
    expect(session.playbackIndex(1)).toBe(session.preview!.waypoints.length - 1);
  });
});

describe("add and remove mapping", () => {
  it("inserts the gray pose at the right working position", async () => {
    const session = await makeSession([0, 0.1, 0.2]);
    // preview: [a0, gray, a1, gray, a2]; slot 3 sits between a1 and a2.
    const result = await session.addWaypointAt(3);
    expect(result.ok).toBe(true);
    expect(session.working.map((w) => w.t[0])).toEqual([0, 0.1, (0.1 + 0.2) / 2, 0.2]);
    expect(session.selected).toBe(2);
    expect(session.dirty).toBe(true);
  });

  it("rejects authored slots", async () => {
    const session = await makeSession();
    const result = await session.addWaypointAt(2);
    expect(result.ok).toBe(false);
    expect(result.message).toMatch(/authored/);
    expect(session.working).toHaveLength(3);
  });

  it("add then remove the same slot restores the list", async () => {
    const session = await makeSession([0, 0.1]);
    const before = JSON.parse(JSON.stringify(session.working));
    await session.addWaypointAt(1);
    expect(session.working).toHaveLength(3);
    await session.removeWaypoint(1);
    expect(session.working).toEqual(before);
  });

  it("blocks removal below two waypoints", async () => {
    const session = await makeSession([0, 0.1]);
    const result = await session.removeWaypoint(0);
    expect(result.ok).toBe(false);
    expect(result.message).toMatch(/at least two/);
    expect(session.working).toHaveLength(2);
  });
});

describe("gripper and submit guards", () => {
  it("toggle flips open and closed, and holding opens", async () => {
    const session = await makeSession();
    await session.toggleGripper(0);
    expect(session.working[0].g).toBe("closed");
    await session.toggleGripper(0);
    expect(session.working[0].g).toBe("open");
    await session.setGripper(0, "holding");
    await session.toggleGripper(0);
    expect(session.working[0].g).toBe("open");
  });

  it("clean sessions refuse to submit", async () => {
    const session = await makeSession();
    const result = await session.submit();
    expect(result.ok).toBe(false);
    expect(result.message).toMatch(/nothing to submit/);
  });

  it("selection bounds are enforced", async () => {
    const session = await makeSession();
    expect(() => session.select(7)).toThrowError(RangeError);
    session.select(1);
    expect(session.selected).toBe(1);
    session.select(null);
    expect(session.selected).toBeNull();
  });
});
