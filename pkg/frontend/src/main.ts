/** Browser entry point: wires the console core to the real page.
 *
 * Everything interesting lives in state.ts and console.ts; this file
 * only adapts WebSocket, fetch, confirm(), and the DOM.
 */

import { Console, Transport } from "./console.js";
import { ConsoleState } from "./state.js";

function webSocketTransport(url: string): Transport {
  const socket = new WebSocket(url);
  let lineHandler: (line: string) => void = () => undefined;
  let closeHandler: (reason: string | null) => void = () => undefined;
  const outbox: string[] = [];
  socket.addEventListener("open", () => {
    for (const line of outbox.splice(0)) socket.send(line);
  });
  socket.addEventListener("message", (event) => {
    if (typeof event.data === "string") lineHandler(event.data);
  });
  socket.addEventListener("close", (event) => {
    closeHandler(event.reason || (event.wasClean ? null : "connection lost"));
  });
  socket.addEventListener("error", () => {
    closeHandler("connection failed");
  });
  return {
    send(line: string): void {
      const bare = line.replace(/\n$/, "");
      if (socket.readyState === WebSocket.OPEN) socket.send(bare);
      else if (socket.readyState === WebSocket.CONNECTING) outbox.push(bare);
    },
    close(): void {
      socket.close();
    },
    onLine(handler): void {
      lineHandler = handler;
    },
    onClose(handler): void {
      closeHandler = handler;
    },
  };
}

/** ws://host:port/ws -> http://host:port/step/<k>.svg */
function svgUrl(wsUrl: string, step: number): string {
  const url = new URL(wsUrl);
  url.protocol = url.protocol === "wss:" ? "https:" : "http:";
  url.pathname = `/step/${step}.svg`;
  return url.toString();
}

function byId<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function render(state: ConsoleState): void {
  const banner = byId<HTMLDivElement>("banner");
  switch (state.connection.phase) {
    case "disconnected":
      banner.textContent = state.connection.banner ?? "not connected";
      banner.hidden = false;
      break;
    case "connecting":
      banner.textContent = "joining…";
      banner.hidden = false;
      break;
    case "joined":
      banner.hidden = true;
      break;
  }
  const joined = state.connection.phase === "joined";
  for (const control of document.querySelectorAll<HTMLButtonElement>("button.ctl")) {
    if (control.id !== "connect") control.disabled = !joined;
  }
  byId<HTMLButtonElement>("connect").disabled = state.connection.phase === "connecting";

  byId<HTMLSpanElement>("step-header").textContent = joined
    ? `Step ${state.currentStep} of ${state.stepCount}`
    : "";
  byId<HTMLParagraphElement>("instruction").textContent = state.instruction;
  byId<HTMLSpanElement>("target").textContent = state.target ?? "";
  byId<HTMLSpanElement>("observation").textContent = state.observation
    ? `${state.observation.name} = ${state.observation.value}`
    : "";
  byId<HTMLSpanElement>("penalties").textContent = String(state.penaltiesAcknowledged);
  byId<HTMLDivElement>("notice").textContent = state.notice ?? "";
  byId<HTMLButtonElement>("mirror").textContent = state.mirrorOn ? "Mirror off" : "Mirror on";

  const stage = byId<HTMLDivElement>("stage");
  // the document comes from our own session server, not from user input
  if (stage.dataset["svg"] !== state.svg) {
    stage.innerHTML = state.svg;
    stage.dataset["svg"] = state.svg;
  }
  const { x, y, scale } = state.viewport;
  stage.style.transform = `translate(${x}px, ${y}px) scale(${scale})`;
}

function start(): void {
  let wsUrl = "";
  const console_ = new Console({
    fetchStepSvg: async (step) => {
      const reply = await fetch(svgUrl(wsUrl, step));
      if (!reply.ok) throw new Error(`svg fetch failed: ${reply.status}`);
      return reply.text();
    },
    confirmSupport: async () =>
      window.confirm("Request support?  The session records this as a penalty."),
    onChange: render,
  });

  byId<HTMLButtonElement>("connect").addEventListener("click", () => {
    wsUrl = byId<HTMLInputElement>("server-url").value.trim();
    if (wsUrl) console_.connect(webSocketTransport(wsUrl));
  });
  byId<HTMLButtonElement>("leave").addEventListener("click", () => console_.leave());

  const gestures: [string, () => void][] = [
    ["prev", () => void console_.act({ kind: "prev" })],
    ["next", () => void console_.act({ kind: "next" })],
    ["goto", () => {
      const step = Number(byId<HTMLInputElement>("goto-step").value);
      if (Number.isInteger(step) && step >= 0) void console_.act({ kind: "goto", step });
    }],
    ["pan-left", () => void console_.act({ kind: "pan", dx: -40, dy: 0 })],
    ["pan-right", () => void console_.act({ kind: "pan", dx: 40, dy: 0 })],
    ["pan-up", () => void console_.act({ kind: "pan", dx: 0, dy: -40 })],
    ["pan-down", () => void console_.act({ kind: "pan", dx: 0, dy: 40 })],
    ["zoom-in", () => void console_.act({ kind: "zoom", factor: 1.25 })],
    ["zoom-out", () => void console_.act({ kind: "zoom", factor: 0.8 })],
    ["rotate", () => void console_.act({ kind: "rotate", degrees: 90 })],
    ["mirror", () => void console_.act({ kind: "mirror-toggle" })],
    ["support", () => void console_.act({ kind: "support" })],
  ];
  for (const [id, run] of gestures) byId<HTMLButtonElement>(id).addEventListener("click", run);

  render(console_.snapshot());
}

document.addEventListener("DOMContentLoaded", start);
