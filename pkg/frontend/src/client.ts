/**
 * Transport for the session service: REST for commands, WebSocket for
 * live pushes, reconnect with capped exponential backoff, and a full
 * resync on every (re)connect via the server's snapshot-on-connect.
 *
 * The transport is injectable so tests can drive the client against a
 * scripted fake server.
 */

import type { QuizSheet, ServerMessage, SessionReport, StateUpdate } from "./protocol.js";
import { SessionStore } from "./store.js";

export interface HttpResult {
  status: number;
  body: any;
}

export interface SocketLike {
  onMessage(handler: (data: any) => void): void;
  onClose(handler: () => void): void;
  send(data: any): void;
  close(): void;
}

export interface Transport {
  http(method: string, path: string, body?: unknown): Promise<HttpResult>;
  openSocket(path: string): Promise<SocketLike>;
}

export class ServerError extends Error {
  constructor(public code: string, message: string) {
    super(message);
  }
}

export function browserTransport(baseUrl: string): Transport {
  const wsBase = baseUrl.replace(/^http/, "ws");
  return {
    async http(method: string, path: string, body?: unknown): Promise<HttpResult> {
      const response = await fetch(baseUrl + path, {
        method,
        headers: { "content-type": "application/json" },
        body: body === undefined ? undefined : JSON.stringify(body),
      });
      return { status: response.status, body: await response.json() };
    },
    openSocket(path: string): Promise<SocketLike> {
      return new Promise((resolve, reject) => {
        const socket = new WebSocket(wsBase + path);
        socket.onopen = () =>
          resolve({
            onMessage: (handler) =>
              (socket.onmessage = (event) => handler(JSON.parse(event.data))),
            onClose: (handler) => (socket.onclose = () => handler()),
            send: (data) => socket.send(JSON.stringify(data)),
            close: () => socket.close(),
          });
        socket.onerror = () => reject(new Error("websocket failed to open"));
      });
    },
  };
}

export interface ClientOptions {
  transport: Transport;
  store: SessionStore;
  /** existing session token to attach to; a new session is created when absent */
  sessionId?: string;
  mode?: string;
  reconnectBaseMs?: number;
  reconnectCapMs?: number;
  sleep?: (ms: number) => Promise<void>;
}

export class SessionClient {
  readonly store: SessionStore;
  private transport: Transport;
  private sessionId: string | null;
  private mode: string | undefined;
  private socket: SocketLike | null = null;
  private closed = false;
  private reconnectBaseMs: number;
  private reconnectCapMs: number;
  private attempts = 0;
  private sleep: (ms: number) => Promise<void>;

  constructor(options: ClientOptions) {
    this.transport = options.transport;
    this.store = options.store;
    this.sessionId = options.sessionId ?? null;
    this.mode = options.mode;
    this.reconnectBaseMs = options.reconnectBaseMs ?? 500;
    this.reconnectCapMs = options.reconnectCapMs ?? 8000;
    this.sleep = options.sleep ?? ((ms) => new Promise((r) => setTimeout(r, ms)));
  }

  private async request(method: string, path: string, body?: unknown): Promise<any> {
    let result: HttpResult;
    try {
      result = await this.transport.http(method, path, body);
    } catch (error: any) {
      this.store.connectionFailed(String(error?.message ?? error));
      throw error;
    }
    if (result.status >= 400) {
      const payload = result.body?.error ?? { code: "HTTP_" + result.status, message: "" };
      this.store.applyError(payload);
      throw new ServerError(payload.code, payload.message);
    }
    return result.body;
  }

  async open(): Promise<void> {
    if (this.sessionId === null) {
      const created = await this.request("POST", "/sessions", this.mode ? { mode: this.mode } : {});
      this.sessionId = created.session_id;
    }
    await this.connectSocket();
  }

  id(): string {
    if (this.sessionId === null) throw new Error("session not opened yet");
    return this.sessionId;
  }

  private async connectSocket(): Promise<void> {
    if (this.closed) return;
    try {
      const socket = await this.transport.openSocket(`/sessions/${this.id()}/ws`);
      this.socket = socket;
      this.attempts = 0;
      this.store.connectionUp();
      socket.onMessage((message: ServerMessage) => this.store.handleServerMessage(message));
      socket.onClose(() => {
        this.socket = null;
        if (!this.closed) void this.scheduleReconnect();
      });
      // belt and braces: the socket snapshot can race commands sent over
      // REST, so pull a fresh state too (stale ones are discarded anyway)
      const snapshot = await this.request("GET", `/sessions/${this.id()}/state`);
      this.store.applyStateUpdate(snapshot as StateUpdate);
    } catch (error: any) {
      if (!this.closed) await this.scheduleReconnect();
    }
  }

  private async scheduleReconnect(): Promise<void> {
    this.attempts += 1;
    const delay = Math.min(this.reconnectCapMs, this.reconnectBaseMs * 2 ** (this.attempts - 1));
    this.store.connectionLost(delay / 1000);
    await this.sleep(delay);
    await this.connectSocket();
  }

  close(): void {
    this.closed = true;
    this.socket?.close();
  }

  // -- commands ---------------------------------------------------------------

  async start(): Promise<void> {
    const update = await this.request("POST", `/sessions/${this.id()}/start`);
    this.store.applyStateUpdate(update as StateUpdate);
  }

  async submitAction(actionName: string, label: string): Promise<void> {
    if (!this.store.canAct()) return;
    this.store.noteUserAction(label);
    try {
      const update = await this.request("POST", `/sessions/${this.id()}/action`, {
        action: actionName,
      });
      this.store.actionAcknowledged();
      this.store.applyStateUpdate(update as StateUpdate);
    } catch (error) {
      if (!(error instanceof ServerError)) throw error;
    }
  }

  async askWhat(): Promise<void> {
    if (!this.store.canAskWhat()) return;
    this.store.noteWhatAsked();
    try {
      const body = await this.request("POST", `/sessions/${this.id()}/what`);
      this.store.applySuggestion(body.suggestion);
    } catch (error) {
      if (!(error instanceof ServerError)) throw error;
    }
  }

  async askWhy(): Promise<void> {
    if (!this.store.canAskWhy()) return;
    this.store.noteWhyAsked();
    try {
      const body = await this.request("POST", `/sessions/${this.id()}/why`);
      this.store.applyExplanation(body.explanation);
    } catch (error) {
      if (!(error instanceof ServerError)) throw error;
    }
  }

  async fetchQuiz(): Promise<QuizSheet> {
    const sheet = (await this.request("GET", `/sessions/${this.id()}/quiz`)) as QuizSheet;
    this.store.setQuiz(sheet);
    return sheet;
  }

  async submitQuiz(
    answers: Record<string, number>,
    questionnaire: Record<string, number> = {},
  ): Promise<void> {
    await this.request("POST", `/sessions/${this.id()}/quiz`, { answers, questionnaire });
  }

  async fetchReport(): Promise<SessionReport> {
    const report = (await this.request("GET", `/sessions/${this.id()}/report`)) as SessionReport;
    this.store.setReport(report);
    return report;
  }
}
