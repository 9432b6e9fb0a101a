/** Acceptance tests against a live label server (spawned Python process).
 *
 * Covers the two release-gate UI criteria:
 *  - round trip: image shown, label posted, blocked oracle unblocks, status
 *    advances, double submission lands exactly one answer;
 *  - idle/error states: 204 renders idle, a server restart mid-session
 *    recovers without losing the pending query.
 */

import { spawn, ChildProcessWithoutNullStreams } from "node:child_process";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it, vi } from "vitest";

import { ApiClient } from "../src/api.js";
import { LabelerApp } from "../src/app.js";

// happy-dom rewrites import.meta.url to an http URL, so resolve from the
// package root (vitest runs with cwd = frontend/)
const HARNESS = join(process.cwd(), "test", "live_server.py");

class Harness {
  proc!: ChildProcessWithoutNullStreams;
  events: string[] = [];
  port = 0;

  async start(): Promise<void> {
    this.proc = spawn("python3", [HARNESS], { stdio: "pipe" });
    this.proc.stdout.setEncoding("utf8");
    this.proc.stdout.on("data", (chunk: string) => {
      for (const line of chunk.split("\n")) {
        if (line.trim()) this.events.push(line.trim());
      }
    });
    this.proc.stderr.setEncoding("utf8");
    this.proc.stderr.on("data", (chunk: string) => console.error(chunk));
    await this.waitFor(/^READY$/);
    const portLine = this.events.find((e) => e.startsWith("PORT "));
    this.port = Number(portLine!.split(" ")[1]);
  }

  send(command: string): void {
    this.proc.stdin.write(`${command}\n`);
  }

  async waitFor(pattern: RegExp, timeoutMs = 20_000): Promise<string> {
    const deadline = Date.now() + timeoutMs;
    for (;;) {
      const hit = this.events.find((e) => pattern.test(e));
      if (hit !== undefined) return hit;
      if (Date.now() > deadline) {
        throw new Error(`timed out waiting for ${pattern}; saw: ${this.events.join(" | ")}`);
      }
      await new Promise((resolve) => setTimeout(resolve, 50));
    }
  }

  stop(): void {
    this.send("exit");
    this.proc.kill();
  }
}

const harness = new Harness();
let api: ApiClient;

beforeAll(async () => {
  await harness.start();
  api = new ApiClient(`http://127.0.0.1:${harness.port}`);
});

afterAll(() => {
  harness.stop();
});

function makeApp(): LabelerApp {
  const root = document.createElement("div");
  document.body.replaceChildren(root);
  return new LabelerApp(root, api, { pollIntervalMs: 200 });
}

describe("against a live label server", () => {
  it("renders idle with run status while no query is pending", async () => {
    const app = makeApp();
    await app.tick();
    app.stop();

    expect(app.root.querySelector(".idle-panel")).not.toBeNull();
    expect(app.root.querySelector(".idle-progress")?.textContent).toBe(
      "Labels collected: 5 / 30",
    );
    expect(app.root.querySelector(".status-accuracy")?.textContent).toBe(
      "test accuracy 89.24%",
    );
  });

  it("round-trips a label: render, post, trainer unblocks, status advances", async () => {
    const app = makeApp();
    app.start();

    harness.send("push 1");
    await harness.waitFor(/^PUSHED 1$/);
    await vi.waitFor(() => expect(app.shownQuery?.query_id).toBe(1), { timeout: 10_000 });

    // the queried image is actually served
    const img = app.root.querySelector<HTMLImageElement>(".query-image");
    expect(img).not.toBeNull();
    const imgRes = await fetch(img!.src);
    expect(imgRes.status).toBe(200);
    expect(imgRes.headers.get("content-type")).toBe("image/png");

    const buttons = app.root.querySelectorAll<HTMLButtonElement>(".class-button");
    expect(buttons).toHaveLength(4);
    buttons[2]!.click();

    const answered = await harness.waitFor(/^ANSWERED 1 /);
    expect(answered).toBe("ANSWERED 1 2"); // the blocked oracle thread unblocked
    await vi.waitFor(async () => {
      const status = await api.status();
      expect(status.labels_collected).toBe(6); // labels + 1
      expect(status.queue_depth).toBe(0);
    });
    app.stop();
  });

  it("double submission yields exactly one accepted answer", async () => {
    harness.send("push 2");
    await harness.waitFor(/^PUSHED 2$/);

    const [first, second] = await Promise.all([
      api.submitLabel(2, 1),
      api.submitLabel(2, 3),
    ]);
    await harness.waitFor(/^ANSWERED 2 /);

    const results = [first, second].sort();
    expect(results).toEqual(["accepted", "already-answered"]);
    const answers = harness.events.filter((e) => e.startsWith("ANSWERED 2"));
    expect(answers).toHaveLength(1);
  });

  it("recovers from a server restart without losing the pending query", async () => {
    harness.send("push 3");
    await harness.waitFor(/^PUSHED 3$/);

    const app = makeApp();
    app.start();
    await vi.waitFor(() => expect(app.shownQuery?.query_id).toBe(3), { timeout: 10_000 });

    harness.send("restart");
    await harness.waitFor(/^RESTARTED$/);
    // polls during the outage error out, but the query is still shown
    expect(app.shownQuery?.query_id).toBe(3);

    await vi.waitFor(() => expect(app.shownError).toBeNull(), { timeout: 10_000 });
    expect(app.shownQuery?.query_id).toBe(3);

    app.root.querySelectorAll<HTMLButtonElement>(".class-button")[0]!.click();
    const answered = await harness.waitFor(/^ANSWERED 3 /);
    expect(answered).toBe("ANSWERED 3 0");
    app.stop();
  });
});
