/** Pure state for the trainee console.
 *
 * The server owns the session: the displayed step, the mirror flag, and
 * the penalty count change only when a broadcast or an OK acknowledgment
 * arrives.  User gestures merely produce outgoing lines (exactly one per
 * gesture); the local exceptions are pan and zoom, which move the SVG
 * viewport immediately while still being relayed for a display client.
 */

import { encode, Message } from "./protocol.js";

export type Connection =
  | { phase: "disconnected"; banner: string | null }
  | { phase: "connecting" }
  | { phase: "joined"; role: string };

export interface Viewport {
  x: number;
  y: number;
  scale: number;
}

/** What an OK from the server would acknowledge, oldest first. */
export type PendingAck = "mirror-on" | "mirror-off" | "support";

export interface ConsoleState {
  connection: Connection;
  currentStep: number;
  stepCount: number;
  instruction: string;
  target: string | null;
  highlights: readonly [string, "remove" | "establish"][];
  observation: { name: string; value: number } | null;
  svg: string; // non-empty only while mirrorOn
  mirrorOn: boolean;
  penaltiesAcknowledged: number;
  pending: readonly PendingAck[];
  notice: string | null; // last transient server error
  viewport: Viewport;
}

export const INITIAL: ConsoleState = {
  connection: { phase: "disconnected", banner: null },
  currentStep: 0,
  stepCount: 0,
  instruction: "",
  target: null,
  highlights: [],
  observation: null,
  svg: "",
  mirrorOn: false,
  penaltiesAcknowledged: 0,
  pending: [],
  notice: null,
  viewport: { x: 0, y: 0, scale: 1 },
};

export type Action =
  | { kind: "next" }
  | { kind: "prev" }
  | { kind: "goto"; step: number }
  | { kind: "pan"; dx: number; dy: number }
  | { kind: "zoom"; factor: number }
  | { kind: "rotate"; degrees: number }
  | { kind: "mirror-toggle" }
  | { kind: "support" };

export interface Prepared {
  state: ConsoleState;
  line: string;
}

/** Map a user gesture to its one outgoing line plus local effects.
 *
 * Returns null while not joined: the controls are disabled then.  The
 * support confirmation dialog happens before this is called.
 */
export function prepare(state: ConsoleState, action: Action): Prepared | null {
  if (state.connection.phase !== "joined") return null;
  switch (action.kind) {
    case "next":
      return { state, line: encode({ kind: "next" }) };
    case "prev":
      return { state, line: encode({ kind: "prev" }) };
    case "goto":
      return { state, line: encode({ kind: "goto", step: action.step }) };
    case "pan": {
      const viewport = {
        ...state.viewport,
        x: state.viewport.x + action.dx,
        y: state.viewport.y + action.dy,
      };
      return {
        state: { ...state, viewport },
        line: encode({ kind: "view", verb: "pan", args: [action.dx, action.dy] }),
      };
    }
    case "zoom": {
      const viewport = { ...state.viewport, scale: state.viewport.scale * action.factor };
      return {
        state: { ...state, viewport },
        line: encode({ kind: "view", verb: "zoom", args: [action.factor] }),
      };
    }
    case "rotate":
      // relayed for the display; a flat diagram has nothing to rotate
      return { state, line: encode({ kind: "view", verb: "rotate", args: [action.degrees] }) };
    case "mirror-toggle": {
      const want = !state.mirrorOn;
      return {
        state: { ...state, pending: [...state.pending, want ? "mirror-on" : "mirror-off"] },
        line: encode({ kind: "mirror", on: want }),
      };
    }
    case "support":
      return {
        state: { ...state, pending: [...state.pending, "support"] },
        line: encode({ kind: "support" }),
      };
  }
}

/** Fold one server message into the state. */
export function reduce(state: ConsoleState, message: Message): ConsoleState {
  switch (message.kind) {
    case "welcome":
      return {
        ...state,
        connection: { phase: "joined", role: "remote" },
        stepCount: message.stepCount,
        notice: null,
      };
    case "step":
      return {
        ...state,
        currentStep: message.index,
        instruction: message.instruction,
        target: null,
        highlights: [],
        observation: null,
        notice: null,
        // the mirrored document shows the previous step until the fetch
        // for this one lands; clearing it here would flash white
      };
    case "target":
      return { ...state, target: message.blockId };
    case "hilite":
      return { ...state, highlights: [...state.highlights, [message.connId, message.mark]] };
    case "obs":
      return { ...state, observation: { name: message.name, value: message.value } };
    case "ok": {
      const [acked, ...pending] = state.pending;
      switch (acked) {
        case "support":
          return { ...state, pending, penaltiesAcknowledged: state.penaltiesAcknowledged + 1 };
        case "mirror-on":
          return { ...state, pending, mirrorOn: true };
        case "mirror-off":
          return { ...state, pending, mirrorOn: false, svg: "" };
        default:
          return { ...state, notice: "unexpected OK" };
      }
    }
    case "err":
      if (message.code === 409 && state.connection.phase !== "joined") {
        return {
          ...state,
          connection: { phase: "disconnected", banner: message.text },
        };
      }
      // transient refusal (unknown step, time limit); display unchanged
      return { ...state, notice: `${message.code} ${message.text}` };
    case "view": // relevant to display clients only
      return state;
    default:
      return { ...state, notice: `unexpected ${message.kind} from server` };
  }
}

/** Attach a freshly fetched diagram; stale fetches must be dropped. */
export function attachSvg(state: ConsoleState, step: number, svg: string): ConsoleState {
  if (!state.mirrorOn || step !== state.currentStep) return state;
  return { ...state, svg };
}

export function connectionLost(state: ConsoleState, reason: string | null): ConsoleState {
  if (state.connection.phase === "disconnected") return state;
  return { ...INITIAL, connection: { phase: "disconnected", banner: reason } };
}

export function connecting(state: ConsoleState): ConsoleState {
  return { ...INITIAL, connection: { phase: "connecting" } };
}
