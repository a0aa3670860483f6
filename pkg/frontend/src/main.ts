/** Bootstrap: read server/token from the URL, open the session, render. */

import { browserTransport, SessionClient } from "./client.js";
import { ControlPanel } from "./panel.js";
import { SessionStore } from "./store.js";

const params = new URLSearchParams(window.location.search);
const server = params.get("server") ?? "http://127.0.0.1:8000";
const token = params.get("token") ?? undefined;
const mode = params.get("mode") ?? undefined;

const store = new SessionStore();
const client = new SessionClient({
  transport: browserTransport(server),
  store,
  sessionId: token,
  mode,
});

const root = document.getElementById("app");
if (!root) throw new Error("missing #app mount point");
new ControlPanel(root, client);
void client.open();
