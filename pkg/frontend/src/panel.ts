/**
 * DOM layer: renders the store, forwards clicks to the client.
 *
 * Everything shown comes from server payloads held in the store; the
 * panel adds no plant logic of its own.
 */

import { SessionClient } from "./client.js";
import { ACTIONS, type QuizSheetItem } from "./protocol.js";
import type { SessionViewState } from "./store.js";

const GAUGES: Array<{ key: "temperature" | "pressure" | "water_level" | "power"; label: string; unit: string; max: number }> = [
  { key: "temperature", label: "Core temperature", unit: "°C", max: 1000 },
  { key: "pressure", label: "Core pressure", unit: "bar", max: 500 },
  { key: "water_level", label: "Steam-generator water", unit: "", max: 100 },
  { key: "power", label: "Reactor power", unit: "MW", max: 1000 },
];

function el(tag: string, className?: string, text?: string): HTMLElement {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export class ControlPanel {
  private root: HTMLElement;
  private client: SessionClient;
  private quizChoices = new Map<string, number>();

  constructor(root: HTMLElement, client: SessionClient) {
    this.root = root;
    this.client = client;
    client.store.subscribe((state) => this.render(state));
    setInterval(() => client.store.tick(0.2), 200);
  }

  private render(state: SessionViewState): void {
    this.root.textContent = "";
    if (state.banner) {
      this.root.appendChild(el("div", "banner", state.banner));
      if (!state.connected) return;
    }
    switch (state.phase) {
      case null:
      case "briefing":
        this.renderBriefing();
        break;
      case "running":
        this.renderRunning(state);
        break;
      case "quiz":
        this.renderQuiz(state);
        break;
      case "done":
        this.renderReport(state);
        break;
    }
  }

  private renderBriefing(): void {
    const pane = el("div", "briefing");
    pane.appendChild(el("h1", undefined, "Reactor duty"));
    pane.appendChild(
      el(
        "p",
        undefined,
        "You are in charge of the plant. Act with the controls, or ask the robot " +
          "advisor what it would do and why. Each step lasts a fixed time; if you " +
          "do nothing, the step is skipped for you.",
      ),
    );
    const start = el("button", "start", "Start the session") as HTMLButtonElement;
    start.onclick = () => void this.client.start();
    pane.appendChild(start);
    this.root.appendChild(pane);
  }

  private renderRunning(state: SessionViewState): void {
    const layout = el("div", "layout");
    layout.appendChild(this.renderPlant(state));
    layout.appendChild(this.renderControls(state));
    layout.appendChild(this.renderChat(state));
    this.root.appendChild(layout);
  }

  private renderPlant(state: SessionViewState): HTMLElement {
    const pane = el("div", "plant");
    const head = el("div", "statusline");
    head.appendChild(el("span", undefined, `step ${state.step} / ${state.totalSteps}`));
    head.appendChild(el("span", "score", `energy ${state.score.toFixed(2)}`));
    const countdown =
      state.countdownSeconds === null ? "—" : `${state.countdownSeconds.toFixed(1)}s`;
    head.appendChild(el("span", "countdown", countdown));
    pane.appendChild(head);
    if (state.plant) {
      for (const gauge of GAUGES) {
        const value = state.plant[gauge.key];
        const row = el("div", "gauge");
        row.appendChild(el("span", "gauge-label", gauge.label));
        const bar = el("div", "bar");
        const fill = el("div", "fill");
        fill.style.width = `${Math.min(100, (100 * value) / gauge.max)}%`;
        bar.appendChild(fill);
        row.appendChild(bar);
        row.appendChild(el("span", "gauge-value", `${value.toFixed(1)} ${gauge.unit}`));
        pane.appendChild(row);
      }
      const rods = el("div", "rods");
      for (const [name, position] of Object.entries(state.plant.rods)) {
        rods.appendChild(el("span", `rod rod-${position}`, `${name}: ${position}`));
      }
      pane.appendChild(rods);
      if (state.plant.damaged) pane.appendChild(el("div", "damaged", "PLANT DAMAGED"));
    }
    return pane;
  }

  private renderControls(state: SessionViewState): HTMLElement {
    const pane = el("div", "controls");
    let group = "";
    for (const action of ACTIONS) {
      if (action.group !== group) {
        group = action.group;
        pane.appendChild(el("div", "group-label", group));
      }
      const button = el("button", "action", action.label) as HTMLButtonElement;
      button.dataset.actionId = String(action.id);
      button.disabled = !this.client.store.canAct();
      button.onclick = () => void this.client.submitAction(action.name, action.label);
      pane.appendChild(button);
    }
    if (state.notice) pane.appendChild(el("div", "notice", state.notice));
    return pane;
  }

  private renderChat(state: SessionViewState): HTMLElement {
    const pane = el("div", "chat");
    const log = el("div", "transcript");
    for (const entry of state.transcript) {
      log.appendChild(el("div", `line ${entry.who}`, `${entry.who}: ${entry.text}`));
    }
    pane.appendChild(log);
    const what = el("button", "ask", "What would you do?") as HTMLButtonElement;
    what.disabled = !this.client.store.canAskWhat();
    what.onclick = () => void this.client.askWhat();
    const why = el("button", "ask", "Why?") as HTMLButtonElement;
    why.disabled = !this.client.store.canAskWhy();
    why.onclick = () => void this.client.askWhy();
    pane.appendChild(what);
    pane.appendChild(why);
    log.scrollTop = log.scrollHeight;
    return pane;
  }

  private renderQuiz(state: SessionViewState): void {
    const pane = el("div", "quiz");
    pane.appendChild(el("h1", undefined, "What did you learn?"));
    if (!state.quiz) {
      void this.client.fetchQuiz();
      pane.appendChild(el("p", undefined, "loading the quiz…"));
      this.root.appendChild(pane);
      return;
    }
    const renderItem = (item: QuizSheetItem) => {
      const block = el("div", "quiz-item");
      block.appendChild(el("p", "prompt", item.prompt));
      item.choices.forEach((choice, index) => {
        const label = el("label");
        const radio = document.createElement("input");
        radio.type = "radio";
        radio.name = item.item_id;
        radio.onchange = () => this.quizChoices.set(item.item_id, index);
        label.appendChild(radio);
        label.appendChild(document.createTextNode(" " + choice));
        block.appendChild(label);
      });
      pane.appendChild(block);
    };
    state.quiz.items.forEach(renderItem);
    pane.appendChild(el("h2", undefined, "And what would the robot do…"));
    state.quiz.what_if.forEach(renderItem);
    const submit = el("button", "start", "Submit answers") as HTMLButtonElement;
    submit.onclick = async () => {
      await this.client.submitQuiz(Object.fromEntries(this.quizChoices));
      await this.client.fetchReport();
    };
    pane.appendChild(submit);
    this.root.appendChild(pane);
  }

  private renderReport(state: SessionViewState): void {
    const pane = el("div", "report");
    pane.appendChild(el("h1", undefined, "Session complete"));
    if (!state.report) {
      void this.client.fetchReport();
      pane.appendChild(el("p", undefined, "fetching your report…"));
      this.root.appendChild(pane);
      return;
    }
    const report = state.report;
    const rows: Array<[string, string]> = [
      ["Final score (energy)", report.m1_final_score.toFixed(2)],
      ["Rules learned", String(report.m2_learned_per_feature.reduce((a, b) => a + b, 0))],
      ["What questions", String(report.m2_what_count)],
      ["Why questions", String(report.m2_why_count)],
      ["What-if correct", String(report.m3_what_if_correct)],
      ["Information power (you)", report.ip_user.toFixed(4)],
    ];
    for (const [label, value] of rows) {
      const row = el("div", "report-row");
      row.appendChild(el("span", "report-label", label));
      row.appendChild(el("span", "report-value", value));
      pane.appendChild(row);
    }
    this.root.appendChild(pane);
  }
}
