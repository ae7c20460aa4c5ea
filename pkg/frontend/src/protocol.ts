/** Wire codec for the session protocol: one line per message.
 *
 * A line is a verb plus space-separated fields; a message's one free-text
 * field is introduced by ":" and runs verbatim to the end of the line, so
 * instructions may contain spaces and colons.  Lines end with "\n".
 */

export const ROLES = ["display", "remote", "support"] as const;
export const VIEW_VERBS = ["pan", "zoom", "rotate"] as const;
export const HILITE_MARKS = ["remove", "establish"] as const;

export type Role = (typeof ROLES)[number];
export type ViewVerb = (typeof VIEW_VERBS)[number];
export type HiliteMark = (typeof HILITE_MARKS)[number];

export type Message =
  | { kind: "hello"; role: Role }
  | { kind: "next" }
  | { kind: "prev" }
  | { kind: "goto"; step: number }
  | { kind: "view"; verb: ViewVerb; args: number[] }
  | { kind: "mirror"; on: boolean }
  | { kind: "support" }
  | { kind: "bye" }
  | { kind: "welcome"; sessionId: string; stepCount: number }
  | { kind: "step"; index: number; instruction: string }
  | { kind: "target"; blockId: string }
  | { kind: "hilite"; connId: string; mark: HiliteMark }
  | { kind: "obs"; name: string; value: number }
  | { kind: "err"; code: number; text: string }
  | { kind: "ok" };

export class ProtocolError extends Error {}

/** Matches the server's float formatting: integers keep one decimal. */
export function formatNumber(value: number): string {
  if (!Number.isFinite(value)) throw new ProtocolError(`not a finite number: ${value}`);
  return Number.isInteger(value) ? value.toFixed(1) : String(value);
}

export function encode(message: Message): string {
  switch (message.kind) {
    case "hello":
      return `HELLO ${message.role}\n`;
    case "next":
      return "NEXT\n";
    case "prev":
      return "PREV\n";
    case "goto":
      return `GOTO ${message.step}\n`;
    case "view":
      return `VIEW ${message.verb} ${message.args.map(formatNumber).join(" ")}\n`;
    case "mirror":
      return `MIRROR ${message.on ? "on" : "off"}\n`;
    case "support":
      return "SUPPORT\n";
    case "bye":
      return "BYE\n";
    case "welcome":
      return `WELCOME ${message.sessionId} ${message.stepCount}\n`;
    case "step":
      return `STEP ${message.index} :${message.instruction}\n`;
    case "target":
      return `TARGET ${message.blockId}\n`;
    case "hilite":
      return `HILITE ${message.connId} ${message.mark}\n`;
    case "obs":
      return `OBS ${message.name} ${formatNumber(message.value)}\n`;
    case "err":
      return `ERR ${message.code} :${message.text}\n`;
    case "ok":
      return "OK\n";
  }
}

interface SplitLine {
  head: string[];
  text: string | null;
}

/** Space-separated fields up to an optional ":<verbatim text>" tail. */
function split(line: string): SplitLine {
  const head: string[] = [];
  let at = 0;
  while (at < line.length) {
    if (line[at] === ":") return { head, text: line.slice(at + 1) };
    const gap = line.indexOf(" ", at);
    if (gap === -1) {
      head.push(line.slice(at));
      return { head, text: null };
    }
    head.push(line.slice(at, gap));
    at = gap + 1;
  }
  return { head, text: null };
}

const NUMBER = /^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$/;

function integer(token: string | undefined, what: string): number {
  if (token === undefined || !/^[+-]?\d+$/.test(token)) {
    throw new ProtocolError(`${what} must be an integer, got '${token ?? ""}'`);
  }
  return parseInt(token, 10);
}

function decimal(token: string | undefined, what: string): number {
  if (token === undefined || !NUMBER.test(token)) {
    throw new ProtocolError(`${what} must be a decimal, got '${token ?? ""}'`);
  }
  return Number(token);
}

function arity(found: SplitLine, fields: number, text: boolean, verb: string): void {
  if (found.head.length - 1 !== fields || (found.text !== null) !== text) {
    throw new ProtocolError(`malformed ${verb} line`);
  }
}

function oneOf<T extends string>(
  token: string | undefined,
  allowed: readonly T[],
  what: string,
): T {
  if (token !== undefined && (allowed as readonly string[]).includes(token)) {
    return token as T;
  }
  throw new ProtocolError(`unknown ${what} '${token ?? ""}'`);
}

export function decode(line: string): Message {
  const bare = line.replace(/\r?\n$/, "");
  if (bare.length === 0) throw new ProtocolError("empty line");
  const found = split(bare);
  const verb = found.head[0] ?? "";
  switch (verb) {
    case "HELLO":
      arity(found, 1, false, verb);
      return { kind: "hello", role: oneOf(found.head[1], ROLES, "role") };
    case "NEXT":
      arity(found, 0, false, verb);
      return { kind: "next" };
    case "PREV":
      arity(found, 0, false, verb);
      return { kind: "prev" };
    case "GOTO":
      arity(found, 1, false, verb);
      return { kind: "goto", step: integer(found.head[1], "step") };
    case "VIEW": {
      if (found.head.length < 3 || found.head.length > 4 || found.text !== null) {
        throw new ProtocolError("malformed VIEW line");
      }
      const args = found.head.slice(2).map((t) => decimal(t, "view argument"));
      return { kind: "view", verb: oneOf(found.head[1], VIEW_VERBS, "view verb"), args };
    }
    case "MIRROR":
      arity(found, 1, false, verb);
      if (found.head[1] !== "on" && found.head[1] !== "off") {
        throw new ProtocolError("MIRROR takes on or off");
      }
      return { kind: "mirror", on: found.head[1] === "on" };
    case "SUPPORT":
      arity(found, 0, false, verb);
      return { kind: "support" };
    case "BYE":
      arity(found, 0, false, verb);
      return { kind: "bye" };
    case "WELCOME":
      arity(found, 2, false, verb);
      return {
        kind: "welcome",
        sessionId: found.head[1] ?? "",
        stepCount: integer(found.head[2], "step count"),
      };
    case "STEP":
      arity(found, 1, true, verb);
      return {
        kind: "step",
        index: integer(found.head[1], "step index"),
        instruction: found.text ?? "",
      };
    case "TARGET":
      arity(found, 1, false, verb);
      return { kind: "target", blockId: found.head[1] ?? "" };
    case "HILITE":
      arity(found, 2, false, verb);
      return {
        kind: "hilite",
        connId: found.head[1] ?? "",
        mark: oneOf(found.head[2], HILITE_MARKS, "highlight kind"),
      };
    case "OBS":
      arity(found, 2, false, verb);
      return {
        kind: "obs",
        name: found.head[1] ?? "",
        value: decimal(found.head[2], "observable value"),
      };
    case "ERR":
      arity(found, 1, true, verb);
      return { kind: "err", code: integer(found.head[1], "code"), text: found.text ?? "" };
    case "OK":
      arity(found, 0, false, verb);
      return { kind: "ok" };
    default:
      throw new ProtocolError(`unknown verb '${verb}'`);
  }
}
