// Boots the real Python validation service with a seeded store so the
// component tests exercise the actual API, not a mock.

import { spawn, ChildProcess } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

export const PORT = 8931;
const BASE = `http://127.0.0.1:${PORT}`;

let server: ChildProcess | null = null;
let dataDir: string | null = null;

async function waitForHealth(timeoutMs: number): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    try {
      const resp = await fetch(`${BASE}/health`);
      if (resp.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((r) => setTimeout(r, 150));
  }
  throw new Error(`validation service did not come up on ${BASE}`);
}

export async function setup(): Promise<void> {
  dataDir = mkdtempSync(join(tmpdir(), "validation-ui-"));
  server = spawn("python3", ["tests/serve_fixture.py", dataDir, String(PORT)], {
    cwd: new URL(".", import.meta.url).pathname + "..",
    stdio: ["ignore", "inherit", "inherit"],
  });
  await waitForHealth(30000);
}

export async function teardown(): Promise<void> {
  if (server) server.kill();
  if (dataDir) rmSync(dataDir, { recursive: true, force: true });
}
