import { describe, expect, it } from "vitest";

import { SessionClient } from "../src/client.js";
import { ACTIONS } from "../src/protocol.js";
import { explanationLine, SessionStore, suggestionLine } from "../src/store.js";
import { FakeServer } from "./fakeServer.js";

function makeClient(server: FakeServer) {
  const store = new SessionStore();
  const client = new SessionClient({
    transport: server.transport(),
    store,
    reconnectBaseMs: 1,
    sleep: () => Promise.resolve(),
  });
  return { client, store };
}

async function settle(): Promise<void> {
  await new Promise((resolve) => setTimeout(resolve, 0));
}

describe("session bootstrap", () => {
  it("creates a session, connects, and syncs the snapshot", async () => {
    const server = new FakeServer();
    const { client, store } = makeClient(server);
    await client.open();
    await settle();
    expect(store.state.sessionId).toBe("s1");
    expect(store.state.connected).toBe(true);
    expect(store.state.banner).toBeNull();
    expect(store.state.phase).toBe("briefing");
  });

  it("raises a blocking banner when the server is unreachable", async () => {
    const store = new SessionStore();
    const client = new SessionClient({
      transport: {
        http: async () => {
          throw new Error("connection refused");
        },
        openSocket: async () => {
          throw new Error("connection refused");
        },
      },
      store,
    });
    await expect(client.open()).rejects.toThrow();
    expect(store.state.banner).toContain("cannot reach the server");
  });
});

describe("the 12 action buttons", () => {
  it("each round-trips to the matching journaled action id", async () => {
    const server = new FakeServer();
    const { client } = makeClient(server);
    await client.open();
    await client.start();
    for (const action of ACTIONS) {
      await client.submitAction(action.name, action.label);
    }
    expect(server.actionLog.map((entry) => entry.action)).toEqual(
      ACTIONS.map((action) => action.id),
    );
    expect(server.actionLog.every((entry) => entry.source === "user")).toBe(true);
  });

  it("does not send while an action is pending or out of phase", async () => {
    const server = new FakeServer();
    const { client } = makeClient(server);
    await client.open();
    // still briefing: the guard swallows the click
    await client.submitAction("skip", "Skip");
    expect(server.actionLog).toHaveLength(0);
  });
});

describe("advisor chat", () => {
  it("renders suggestion and explanation verbatim from the payloads", async () => {
    const server = new FakeServer();
    const { client, store } = makeClient(server);
    await client.open();
    await client.start();
    await client.askWhat();
    await client.askWhy();
    const texts = store.state.transcript.map((t) => t.text);
    expect(texts).toContain(suggestionLine(server.suggestionPayload));
    expect(texts).toContain(explanationLine(server.explanationPayload));
    expect(texts.find((t) => t.includes("≤ 25"))).toBe(
      "Robot: " + server.explanationPayload.text,
    );
  });

  it("never sends why before a what-response (mirrors WHY_BEFORE_WHAT)", async () => {
    const server = new FakeServer();
    const { client } = makeClient(server);
    await client.open();
    await client.start();
    await client.askWhy();
    expect(server.requests.filter((r) => r.endsWith("/why"))).toHaveLength(0);
    await client.askWhat();
    await client.askWhy();
    expect(server.requests.filter((r) => r.endsWith("/why"))).toHaveLength(1);
  });
});

describe("server pushes", () => {
  it("shows the timer's auto-skip within the same update", async () => {
    const server = new FakeServer();
    const { client, store } = makeClient(server);
    await client.open();
    await client.start();
    const stepBefore = store.state.step;
    server.fireTimerSkip();
    expect(store.state.step).toBe(stepBefore + 1);
    expect(store.state.lastAction?.source).toBe("timer");
    expect(store.state.transcript.some((t) => t.who === "system")).toBe(true);
  });

  it("applies broadcast state updates from other inputs", async () => {
    const server = new FakeServer();
    const { client, store } = makeClient(server);
    await client.open();
    await client.start();
    server.applyAction(3, "user");
    server.broadcast(server.stateUpdate());
    expect(store.state.step).toBe(1);
    expect(store.state.lastAction?.action_name).toBe("fuel_down");
  });
});

describe("reconnect", () => {
  it("reconnects with backoff and resyncs to the fresh snapshot", async () => {
    const server = new FakeServer();
    const { client, store } = makeClient(server);
    await client.open();
    await client.start();
    expect(server.sockets).toHaveLength(1);

    // the connection drops; meanwhile the plant moves on
    server.sockets[0].drop();
    server.applyAction(11, "timer");
    await settle();
    await settle();
    expect(server.sockets.length).toBeGreaterThan(1);
    expect(store.state.connected).toBe(true);
    expect(store.state.step).toBe(server.step);
    expect(store.state.plant?.step_index).toBe(server.step);
  });
});

describe("quiz and report", () => {
  it("walks briefing -> running -> quiz -> done against the fake server", async () => {
    const server = new FakeServer();
    server.totalSteps = 2;
    const { client, store } = makeClient(server);
    await client.open();
    await client.start();
    await client.submitAction("fuel_down", "Fuel rods down");
    await client.submitAction("skip", "Skip");
    expect(store.state.phase).toBe("quiz");

    const sheet = await client.fetchQuiz();
    expect(sheet.items.every((item) => !("answer" in item))).toBe(true);
    await client.submitQuiz({ "Q-1": 0, "Q-2": 2, "W-1": 1 }, { satisfaction: 5 });
    expect(server.quizSubmission?.questionnaire).toEqual({ satisfaction: 5 });

    const report = await client.fetchReport();
    expect(report.ip_user).toBeCloseTo(0.0625, 10);
    expect(store.state.report?.m2_what_count).toBe(1);
  });
});
