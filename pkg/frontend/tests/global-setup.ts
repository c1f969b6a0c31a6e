// Builds a collision table (once) and spawns the real planner service so
// the integration tests exercise the documented wire format end to end.

import { execFileSync, spawn, type ChildProcess } from "node:child_process";
import { existsSync, mkdirSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

const here = dirname(fileURLToPath(import.meta.url));
const cache = join(here, "..", ".cache");
const tablePath = join(cache, "table_4deg.coltab");
const PORT = 58731;

let server: ChildProcess | null = null;

async function waitForService(url: string, timeoutMs = 30_000): Promise<void> {
  const t0 = Date.now();
  while (Date.now() - t0 < timeoutMs) {
    try {
      const res = await fetch(url + "/capabilities");
      if (res.ok) return;
    } catch {
      /* not up yet */
    }
    await new Promise((r) => setTimeout(r, 200));
  }
  throw new Error("service did not come up");
}

export async function setup(): Promise<void> {
  mkdirSync(cache, { recursive: true });
  if (!existsSync(tablePath)) {
    execFileSync(
      "python3",
      ["-m", "birange.cli", "table", "build", "--step", "4", "--out", tablePath],
      { stdio: "inherit" },
    );
  }
  server = spawn(
    "python3",
    [
      "-m", "birange.cli", "serve",
      "--table", tablePath,
      "--host", "127.0.0.1",
      "--port", String(PORT),
    ],
    { stdio: "ignore" },
  );
  process.env.BIRANGE_TEST_URL = `http://127.0.0.1:${PORT}`;
  await waitForService(process.env.BIRANGE_TEST_URL);
}

export async function teardown(): Promise<void> {
  server?.kill("SIGTERM");
}
