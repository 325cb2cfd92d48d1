/**
 * Entry point. The session id lives in the URL fragment
 * (index.html#<session-id>); with no fragment, a small panel lets you
 * paste net and scenario documents to start a session against the
 * service at ?service=<base-url> (default same origin).
 */

import { SessionClient } from "./api.js";
import { SessionLoop, SessionView } from "./loop.js";

function serviceBase(): string {
  const params = new URLSearchParams(window.location.search);
  return params.get("service") ?? "";
}

async function startLoop(root: HTMLElement, sessionId: string): Promise<void> {
  const client = new SessionClient(serviceBase());
  const view = new SessionView(root);
  const loop = new SessionLoop(client, sessionId, view);
  await loop.run();
}

function renderCreatePanel(root: HTMLElement): void {
  const panel = document.createElement("section");
  panel.className = "create-panel";
  panel.innerHTML = `
    <h2>Start a session</h2>
    <label>Net document <textarea id="net-doc" rows="8"></textarea></label>
    <label>Scenario document <textarea id="scenario-doc" rows="8"></textarea></label>
    <label>Regret threshold <input id="tau" type="number" value="0.5" step="0.1"></label>
    <button id="create">Create session</button>
    <p class="create-error" hidden></p>
  `;
  root.appendChild(panel);
  const button = panel.querySelector<HTMLButtonElement>("#create")!;
  button.addEventListener("click", async () => {
    const errorLine = panel.querySelector<HTMLElement>(".create-error")!;
    errorLine.hidden = true;
    try {
      const net = JSON.parse(panel.querySelector<HTMLTextAreaElement>("#net-doc")!.value);
      const scenario = JSON.parse(
        panel.querySelector<HTMLTextAreaElement>("#scenario-doc")!.value,
      );
      const tau = Number(panel.querySelector<HTMLInputElement>("#tau")!.value);
      const client = new SessionClient(serviceBase());
      const record = await client.createSession(net, scenario, { tau });
      window.location.hash = record.id;
      panel.remove();
      await startLoop(root, record.id);
    } catch (error) {
      errorLine.textContent = error instanceof Error ? error.message : String(error);
      errorLine.hidden = false;
    }
  });
}

export function boot(root: HTMLElement): void {
  const sessionId = window.location.hash.replace(/^#/, "");
  if (sessionId) {
    void startLoop(root, sessionId);
  } else {
    renderCreatePanel(root);
  }
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  boot(document.getElementById("app")!);
}
