/**
 * Single ordered view-state store for the control panel.
 *
 * All server messages and UI intents funnel through here; the DOM layer
 * only ever renders what this store holds. Stale state updates (older
 * step index) are discarded so a late packet can never roll the panel
 * back.
 */

import type {
  Explanation,
  LastAction,
  Phase,
  PlantSnapshot,
  ProtocolErrorPayload,
  QuizSheet,
  ServerMessage,
  SessionReport,
  StateUpdate,
  Suggestion,
} from "./protocol.js";

export interface TranscriptEntry {
  who: "you" | "robot" | "system";
  text: string;
}

export interface SessionViewState {
  connected: boolean;
  banner: string | null; // blocking connection banner, null when healthy
  notice: string | null; // inline protocol error, cleared on next success
  sessionId: string | null;
  phase: Phase | null;
  step: number;
  totalSteps: number;
  stepSeconds: number;
  countdownSeconds: number | null;
  plant: PlantSnapshot | null;
  score: number;
  lastAction: LastAction | null;
  transcript: TranscriptEntry[];
  pendingAction: boolean;
  pendingWhat: boolean;
  pendingWhy: boolean;
  whatAnsweredThisStep: boolean;
  quiz: QuizSheet | null;
  report: SessionReport | null;
}

export type Listener = (state: SessionViewState) => void;

export function suggestionLine(suggestion: Suggestion): string {
  return `Robot: ${suggestion.text}`;
}

export function explanationLine(explanation: Explanation): string {
  return `Robot: ${explanation.text}`;
}

export function autoSkipLine(): string {
  return "the step timer ran out; skip was applied for you";
}

export class SessionStore {
  state: SessionViewState = {
    connected: false,
    banner: "connecting…",
    notice: null,
    sessionId: null,
    phase: null,
    step: -1,
    totalSteps: 0,
    stepSeconds: 0,
    countdownSeconds: null,
    plant: null,
    score: 0,
    lastAction: null,
    transcript: [],
    pendingAction: false,
    pendingWhat: false,
    pendingWhy: false,
    whatAnsweredThisStep: false,
    quiz: null,
    report: null,
  };

  private listeners: Listener[] = [];
  private seenActionSeq = new Set<string>();

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    listener(this.state);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private emit(): void {
    for (const listener of this.listeners) listener(this.state);
  }

  // -- connection ----------------------------------------------------------

  connectionUp(): void {
    this.state.connected = true;
    this.state.banner = null;
    this.emit();
  }

  connectionLost(retrySeconds: number): void {
    this.state.connected = false;
    this.state.banner = `connection lost, retrying in ${retrySeconds.toFixed(1)}s`;
    this.emit();
  }

  connectionFailed(message: string): void {
    this.state.connected = false;
    this.state.banner = `cannot reach the server: ${message}`;
    this.emit();
  }

  // -- server messages -------------------------------------------------------

  handleServerMessage(message: ServerMessage): void {
    if (message.type === "state_update") {
      this.applyStateUpdate(message);
    } else if (message.type === "suggestion") {
      this.applySuggestion(message.suggestion);
    } else if (message.type === "explanation") {
      this.applyExplanation(message.explanation);
    } else if (message.type === "error") {
      this.applyError(message.error);
    }
  }

  applyStateUpdate(update: StateUpdate): void {
    if (update.step < this.state.step) {
      return; // stale: an older step must never overwrite a newer one
    }
    const stepAdvanced = update.step > this.state.step;
    this.state.sessionId = update.session_id;
    this.state.phase = update.phase;
    this.state.step = update.step;
    this.state.totalSteps = update.total_steps;
    this.state.stepSeconds = update.step_seconds;
    this.state.countdownSeconds = update.deadline_seconds;
    this.state.plant = update.state;
    this.state.score = update.score;
    this.state.lastAction = update.last_action;
    if (stepAdvanced) {
      this.state.whatAnsweredThisStep = false;
      this.state.pendingAction = false;
    }
    if (update.last_action && update.last_action.source === "timer") {
      const key = `${update.step}:${update.last_action.action}`;
      if (!this.seenActionSeq.has(key)) {
        this.seenActionSeq.add(key);
        this.state.transcript.push({ who: "system", text: autoSkipLine() });
      }
    }
    this.emit();
  }

  applySuggestion(suggestion: Suggestion): void {
    this.state.transcript.push({ who: "robot", text: suggestionLine(suggestion) });
    this.state.pendingWhat = false;
    this.state.whatAnsweredThisStep = true;
    this.state.notice = null;
    this.emit();
  }

  applyExplanation(explanation: Explanation): void {
    this.state.transcript.push({ who: "robot", text: explanationLine(explanation) });
    this.state.pendingWhy = false;
    this.state.notice = null;
    this.emit();
  }

  applyError(error: ProtocolErrorPayload): void {
    this.state.notice = `${error.code}: ${error.message}`;
    this.state.pendingAction = false;
    this.state.pendingWhat = false;
    this.state.pendingWhy = false;
    this.emit();
  }

  // -- UI intents -------------------------------------------------------------

  canAct(): boolean {
    return this.state.phase === "running" && !this.state.pendingAction && this.state.connected;
  }

  canAskWhat(): boolean {
    return this.canAct() && !this.state.pendingWhat;
  }

  /** The why button stays dark until a what-response landed this step. */
  canAskWhy(): boolean {
    return this.canAct() && this.state.whatAnsweredThisStep && !this.state.pendingWhy;
  }

  noteUserAction(label: string): void {
    this.state.transcript.push({ who: "you", text: label });
    this.state.pendingAction = true;
    this.emit();
  }

  noteWhatAsked(): void {
    this.state.transcript.push({ who: "you", text: "What would you do?" });
    this.state.pendingWhat = true;
    this.emit();
  }

  noteWhyAsked(): void {
    this.state.transcript.push({ who: "you", text: "Why?" });
    this.state.pendingWhy = true;
    this.emit();
  }

  actionAcknowledged(): void {
    this.state.pendingAction = false;
    this.state.notice = null;
    this.emit();
  }

  setQuiz(sheet: QuizSheet): void {
    this.state.quiz = sheet;
    this.emit();
  }

  setReport(report: SessionReport): void {
    this.state.report = report;
    this.emit();
  }

  /** Local countdown tick; rendering only, the server owns the deadline. */
  tick(dtSeconds: number): void {
    if (this.state.countdownSeconds !== null && this.state.phase === "running") {
      this.state.countdownSeconds = Math.max(0, this.state.countdownSeconds - dtSeconds);
      this.emit();
    }
  }
}
