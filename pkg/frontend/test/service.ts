import { spawn, spawnSync, type ChildProcess } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

export interface RunningService {
  url: string;
  dir: string;
  stop: () => void;
}

/**
 * Generate a small synthetic dataset and serve it with the real engine
 * CLI. Requires the `trajtransfer` package to be installed (pip install
 * -e .. from the repository root).
 */
export async function startService(seed = 3): Promise<RunningService> {
  const dir = mkdtempSync(join(tmpdir(), "editor-test-"));
  const datasetDir = join(dir, "ds");
  const synth = spawnSync(
    "trajtransfer",
    [
      "synth",
      "--out", datasetDir,
      "--seed", String(seed),
      "--n-tasks", "6",
      "--demos-per-task", "3",
    ],
    { encoding: "utf-8" }
  );
  if (synth.status !== 0) {
    throw new Error(`synth failed: ${synth.stderr || synth.stdout}`);
  }

  const port = 21000 + Math.floor(Math.random() * 20000);
  const child: ChildProcess = spawn(
    "trajtransfer",
    ["serve", "--dataset", datasetDir, "--port", String(port)],
    { stdio: ["ignore", "pipe", "pipe"] }
  );
  let stderr = "";
  child.stderr?.on("data", (chunk) => (stderr += String(chunk)));

  const url = `http://127.0.0.1:${port}`;
  const deadline = Date.now() + 60_000;
  for (;;) {
    if (child.exitCode !== null) {
      throw new Error(`service exited early (${child.exitCode}): ${stderr}`);
    }
    try {
      const response = await fetch(`${url}/health`);
      if (response.ok) break;
    } catch {
      // not up yet
    }
    if (Date.now() > deadline) {
      child.kill();
      throw new Error(`service did not come up: ${stderr}`);
    }
    await new Promise((resolve) => setTimeout(resolve, 250));
  }

  return {
    url,
    dir: datasetDir,
    stop: () => {
      child.kill();
      rmSync(dir, { recursive: true, force: true });
    },
  };
}
