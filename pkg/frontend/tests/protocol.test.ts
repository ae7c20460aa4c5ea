import { describe, expect, it } from "vitest";
import { decode, encode, Message, ProtocolError } from "../src/protocol.js";

// wire lines exactly as the session server writes them
const WIRE: [string, Message][] = [
  ["HELLO remote\n", { kind: "hello", role: "remote" }],
  ["HELLO display\n", { kind: "hello", role: "display" }],
  ["NEXT\n", { kind: "next" }],
  ["PREV\n", { kind: "prev" }],
  ["GOTO 7\n", { kind: "goto", step: 7 }],
  ["VIEW pan -40.0 12.5\n", { kind: "view", verb: "pan", args: [-40, 12.5] }],
  ["VIEW zoom 1.25\n", { kind: "view", verb: "zoom", args: [1.25] }],
  ["VIEW rotate 90.0\n", { kind: "view", verb: "rotate", args: [90] }],
  ["MIRROR on\n", { kind: "mirror", on: true }],
  ["MIRROR off\n", { kind: "mirror", on: false }],
  ["SUPPORT\n", { kind: "support" }],
  ["BYE\n", { kind: "bye" }],
  ["WELCOME s1 13\n", { kind: "welcome", sessionId: "s1", stepCount: 13 }],
  ["STEP 0 :\n", { kind: "step", index: 0, instruction: "" }],
  [
    "STEP 3 :Disconnect the compressed air supply.\n",
    { kind: "step", index: 3, instruction: "Disconnect the compressed air supply." },
  ],
  ["TARGET Valve\n", { kind: "target", blockId: "Valve" }],
  ["HILITE c_air remove\n", { kind: "hilite", connId: "c_air", mark: "remove" }],
  ["HILITE c_crane_air establish\n", { kind: "hilite", connId: "c_crane_air", mark: "establish" }],
  ["OBS pressure_pickalpha 0.0\n", { kind: "obs", name: "pressure_pickalpha", value: 0 }],
  ["ERR 404 :unknown step\n", { kind: "err", code: 404, text: "unknown step" }],
  ["OK\n", { kind: "ok" }],
];

describe("wire pairs", () => {
  it.each(WIRE)("%j", (line, message) => {
    expect(encode(message)).toBe(line);
    expect(decode(line)).toEqual(message);
  });

  it("accepts bare frames without the newline", () => {
    expect(decode("WELCOME s1 13")).toEqual({ kind: "welcome", sessionId: "s1", stepCount: 13 });
  });

  it("keeps free text verbatim, colons and all", () => {
    const line = "ERR 409 :display role already taken: ask c1\n";
    const message = decode(line);
    expect(message).toEqual({
      kind: "err",
      code: 409,
      text: "display role already taken: ask c1",
    });
    expect(encode(message)).toBe(line);
  });

  it("writes integral view numbers with one decimal, like the server", () => {
    expect(encode({ kind: "view", verb: "zoom", args: [2] })).toBe("VIEW zoom 2.0\n");
    expect(encode({ kind: "obs", name: "p", value: -3 })).toBe("OBS p -3.0\n");
  });
});

describe("malformed lines", () => {
  const BAD: [string, RegExp][] = [
    ["FROB nonsense\n", /unknown verb 'FROB'/],
    ["\n", /empty line/],
    ["GOTO\n", /GOTO/],
    ["GOTO x\n", /must be an integer/],
    ["GOTO 1 2\n", /GOTO/],
    ["MIRROR maybe\n", /on or off/],
    ["HELLO pilot\n", /unknown role 'pilot'/],
    ["VIEW pan\n", /VIEW/],
    ["VIEW zoom a\n", /must be a decimal/],
    ["VIEW tilt 1.0\n", /unknown view verb 'tilt'/],
    ["WELCOME s1\n", /WELCOME/],
    ["STEP one :text\n", /must be an integer/],
    ["HILITE c_air paint\n", /unknown highlight kind 'paint'/],
    ["OBS p\n", /OBS/],
    ["ERR abc :x\n", /must be an integer/],
    ["ERR 404\n", /ERR/],
    ["OK trailing\n", /OK/],
  ];

  it.each(BAD)("%j", (line, complaint) => {
    expect(() => decode(line)).toThrow(ProtocolError);
    expect(() => decode(line)).toThrow(complaint);
  });

  it("refuses non-finite numbers on encode", () => {
    expect(() => encode({ kind: "view", verb: "zoom", args: [Number.NaN] })).toThrow(
      ProtocolError,
    );
    expect(() => encode({ kind: "obs", name: "p", value: Infinity })).toThrow(ProtocolError);
  });
});

describe("round trips", () => {
  it("survives decode(encode(m)) for every message shape", () => {
    for (const [, message] of WIRE) {
      expect(decode(encode(message))).toEqual(message);
    }
  });
});
