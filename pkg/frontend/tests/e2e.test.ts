/** Scripted session against a real server process.
 *
 * Joins as the remote, walks steps 0 through 13 with next, turns the
 * mirror on, asks for support once, then leaves.  The server's event
 * log must match the frozen transcript line for line, the final report
 * must count one penalty, and the displayed step must equal the last
 * STEP broadcast at every point in between.
 */

import { ChildProcess, spawn } from "node:child_process";
import { mkdtempSync, readFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import WebSocket from "ws";
import { afterAll, beforeAll, describe, expect, it } from "vitest";
import { Console, Transport } from "../src/console.js";
import { ConsoleState, INITIAL } from "../src/state.js";

const HERE = dirname(fileURLToPath(import.meta.url));
const ROOT = join(HERE, "..", "..");
const GOLDEN = join(HERE, "golden_transcript.txt");
const STEPS = 13;

interface LogRecord {
  dir: string;
  line?: string;
  [key: string]: unknown;
}

function startServer(log: string): Promise<{ proc: ChildProcess; port: number }> {
  const proc = spawn(
    "python3",
    [
      "-m",
      "maintrain",
      "serve",
      "--model",
      "corpus/xppu.plant",
      "--lesson",
      "corpus/replace_pickalpha.lesson",
      "--listen",
      "none",
      "--http",
      "127.0.0.1:0",
      "--time-limit",
      "120",
      "--session-id",
      "s1",
      "--log",
      log,
    ],
    { cwd: ROOT, stdio: ["ignore", "ignore", "pipe"] },
  );
  return new Promise((resolve, reject) => {
    let chatter = "";
    proc.stderr?.on("data", (chunk: Buffer) => {
      chatter += chunk.toString();
      const listen = /LISTEN http [\d.]+:(\d+)/.exec(chatter);
      if (listen) resolve({ proc, port: Number(listen[1]) });
    });
    proc.on("exit", (code) => reject(new Error(`server died early (${code}): ${chatter}`)));
  });
}

function wsTransport(socket: WebSocket, sawLine: (line: string) => void): Transport {
  let lineHandler: (line: string) => void = () => undefined;
  let closeHandler: (reason: string | null) => void = () => undefined;
  socket.on("message", (data) => {
    const line = data.toString();
    lineHandler(line);
    sawLine(line);
  });
  socket.on("close", () => closeHandler(null));
  return {
    send: (line) => socket.send(line.replace(/\n$/, "")),
    close: () => socket.close(),
    onLine: (handler) => {
      lineHandler = handler;
    },
    onClose: (handler) => {
      closeHandler = handler;
    },
  };
}

describe("scripted session", () => {
  let proc: ChildProcess;
  let exitCode: number | null = null;
  let state: ConsoleState = INITIAL;
  let records: LogRecord[] = [];
  let confirmsShown = 0;
  const stepMismatches: string[] = [];
  const logPath = join(mkdtempSync(join(tmpdir(), "console-e2e-")), "session.log.jsonl");

  async function until(check: () => boolean, what: string): Promise<void> {
    const deadline = Date.now() + 20000;
    while (!check()) {
      if (Date.now() > deadline) throw new Error(`timed out waiting for ${what}`);
      await new Promise((tick) => setTimeout(tick, 10));
    }
  }

  beforeAll(async () => {
    const started = await startServer(logPath);
    proc = started.proc;
    const exited = new Promise<void>((resolve) => {
      proc.on("exit", (code) => {
        exitCode = code;
        resolve();
      });
    });

    const console_ = new Console({
      fetchStepSvg: async (step) => {
        const reply = await fetch(`http://127.0.0.1:${started.port}/step/${step}.svg`);
        if (!reply.ok) throw new Error(`svg fetch: ${reply.status}`);
        return reply.text();
      },
      confirmSupport: async () => {
        confirmsShown += 1;
        return true;
      },
      onChange: (fresh) => {
        state = fresh;
      },
    });

    let lastBroadcastStep = 0;
    const socket = new WebSocket(`ws://127.0.0.1:${started.port}/ws`);
    await new Promise<void>((resolve, reject) => {
      socket.once("open", () => resolve());
      socket.once("error", reject);
    });
    const transport = wsTransport(socket, (line) => {
      // the console handles each line synchronously, so right after any
      // server line the displayed step must match the newest broadcast
      const step = /^STEP (\d+) /.exec(line);
      if (step) lastBroadcastStep = Number(step[1]);
      if (console_.snapshot().currentStep !== lastBroadcastStep) {
        stepMismatches.push(
          `after ${line.trim()}: shows ${console_.snapshot().currentStep}, ` +
            `last broadcast ${lastBroadcastStep}`,
        );
      }
    });
    console_.connect(transport);

    await until(() => state.connection.phase === "joined", "WELCOME");
    for (let step = 1; step <= STEPS; step += 1) {
      await console_.act({ kind: "next" });
      await until(() => state.currentStep === step, `STEP ${step}`);
    }
    await console_.act({ kind: "mirror-toggle" });
    await until(() => state.mirrorOn && state.svg.includes("<svg"), "the mirrored diagram");
    await console_.act({ kind: "support" });
    await until(() => state.penaltiesAcknowledged === 1, "the support acknowledgment");
    console_.leave();
    await exited;

    records = readFileSync(logPath, "utf-8")
      .trim()
      .split("\n")
      .map((line) => JSON.parse(line) as LogRecord);
  }, 60000);

  afterAll(() => {
    if (exitCode === null) proc?.kill();
  });

  it("the server exits cleanly once the console leaves", () => {
    expect(exitCode).toBe(0);
  });

  it("the event log matches the golden transcript", () => {
    const traffic = records
      .filter((record) => record.dir === "in" || record.dir === "out")
      .map((record) => `${record.dir} ${record.line}`);
    const golden = readFileSync(GOLDEN, "utf-8").trim().split("\n");
    expect(traffic).toEqual(golden);
  });

  it("the report counts one penalty and a full walk", () => {
    const report = records[records.length - 1];
    expect(report?.dir).toBe("report");
    expect(report?.["penalties"]).toBe(1);
    expect(report?.["steps_visited"]).toEqual([...Array(STEPS + 1).keys()]);
    expect(report?.["ended_early"]).toBe(true);
  });

  it("the displayed step always equalled the last STEP broadcast", () => {
    expect(stepMismatches).toEqual([]);
  });

  it("support asked for confirmation exactly once", () => {
    expect(confirmsShown).toBe(1);
  });

  it("the console ends disconnected with the walk complete", () => {
    expect(state.connection.phase).toBe("disconnected");
    expect(state.currentStep).toBe(0); // reset on drop
  });
});
