/** Glue between the pure state module and the outside world.
 *
 * All UI work happens on the one JavaScript thread; ordering is kept
 * honest by funnelling every outgoing line through a single queue that
 * drains in FIFO order, so two quick taps can never overtake each other.
 */

import { decode, encode, ProtocolError } from "./protocol.js";
import {
  Action,
  ConsoleState,
  INITIAL,
  attachSvg,
  connecting,
  connectionLost,
  prepare,
  reduce,
} from "./state.js";

/** A framed line transport (WebSocket in the browser, ws in tests). */
export interface Transport {
  send(line: string): void;
  close(): void;
  onLine(handler: (line: string) => void): void;
  onClose(handler: (reason: string | null) => void): void;
}

export interface Hooks {
  /** GET /step/<k>.svg against the session server. */
  fetchStepSvg(step: number): Promise<string>;
  /** Ask before admitting a penalty; resolve false to cancel. */
  confirmSupport(): Promise<boolean>;
  onChange(state: ConsoleState): void;
}

export class Console {
  private state: ConsoleState = INITIAL;
  private transport: Transport | null = null;
  private queue: string[] = [];
  private draining = false;

  constructor(private hooks: Hooks) {}

  snapshot(): ConsoleState {
    return this.state;
  }

  /** Join the session as the remote controller. */
  connect(transport: Transport): void {
    if (this.transport) this.transport.close();
    this.transport = transport;
    this.queue = [];
    this.setState(connecting(this.state));
    transport.onLine((line) => this.onLine(line));
    transport.onClose((reason) => {
      this.transport = null;
      this.setState(connectionLost(this.state, reason));
    });
    this.enqueue(encode({ kind: "hello", role: "remote" }));
  }

  leave(): void {
    if (this.state.connection.phase !== "joined") return;
    this.enqueue(encode({ kind: "bye" }));
  }

  /** Handle one user gesture.  Async only for the support confirm. */
  async act(action: Action): Promise<void> {
    if (action.kind === "support") {
      if (!(await this.hooks.confirmSupport())) return;
      // the dialog yielded; the session may have dropped meanwhile
    }
    const prepared = prepare(this.state, action);
    if (prepared === null) return;
    this.setState(prepared.state);
    this.enqueue(prepared.line);
  }

  private onLine(line: string): void {
    let message;
    try {
      message = decode(line);
    } catch (fault) {
      if (fault instanceof ProtocolError) {
        this.setState({ ...this.state, notice: `garbled line from server: ${fault.message}` });
        return;
      }
      throw fault;
    }
    const before = this.state;
    const after = reduce(before, message);
    this.setState(after);
    const stepChanged = message.kind === "step" && after.currentStep !== before.currentStep;
    const mirrorCameOn = after.mirrorOn && !before.mirrorOn;
    if (after.mirrorOn && (stepChanged || mirrorCameOn)) {
      void this.refreshSvg(after.currentStep);
    }
  }

  private async refreshSvg(step: number): Promise<void> {
    let svg: string;
    try {
      svg = await this.hooks.fetchStepSvg(step);
    } catch {
      return; // the next broadcast will retry; the old diagram stays up
    }
    this.setState(attachSvg(this.state, step, svg));
  }

  private enqueue(line: string): void {
    this.queue.push(line);
    if (this.draining) return;
    this.draining = true;
    try {
      while (this.queue.length > 0) {
        const next = this.queue.shift();
        if (next !== undefined && this.transport) this.transport.send(next);
      }
    } finally {
      this.draining = false;
    }
  }

  private setState(state: ConsoleState): void {
    if (state === this.state) return;
    this.state = state;
    this.hooks.onChange(state);
  }
}
