// Browser bootstrap: wires the gateway client, the view model, and the
// renderers together. Default mode opens a live chat; replay mode loads an
// uploaded trace log.

import { GatewayClient, GatewayError } from "./gatewayClient.js";
import { layoutGraph } from "./layout.js";
import { renderConversation, renderGraph, renderInfoPane } from "./svg.js";
import { recordToTraceStep, TraceStep } from "./types.js";
import { GraphView } from "./viewmodel.js";

interface AppState {
  client: GatewayClient;
  agentId: string;
  view: GraphView;
  sessionId: string | null;
  mode: "live" | "replay";
  prompt: string | null;
  done: boolean;
  banner: string | null;
}

function $(id: string): HTMLElement {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el;
}

function render(app: AppState): void {
  const layout = layoutGraph(app.view.graph);
  $("graph").innerHTML = renderGraph(app.view, layout);
  $("conversation").innerHTML = renderConversation(
    app.view.messages(),
    app.view.highlights().messages,
  );
  $("info").textContent = renderInfoPane(app.view);
  const slider = $("slider") as HTMLInputElement;
  slider.max = String(app.view.maxStep);
  slider.value = String(app.view.slider);
  $("slider-label").textContent = `step ${app.view.slider} / ${app.view.maxStep}`;
  $("prompt").textContent = app.prompt ?? "";
  ($("say") as HTMLInputElement).disabled = app.mode !== "live" || app.done;
  $("banner").textContent = app.banner ?? "";
  $("banner").className = app.banner ? "banner visible" : "banner";
  const actual = $("actual-path") as HTMLButtonElement;
  actual.classList.toggle("active", app.view.actualPathOnly);
}

function bindGraphEvents(app: AppState): void {
  const graph = $("graph");
  graph.addEventListener("mouseover", (event) => {
    const target = (event.target as Element).closest("[data-node], [data-edge]");
    if (!target) return;
    if (target.hasAttribute("data-node")) {
      app.view.setHover({ kind: "node", id: Number(target.getAttribute("data-node")) });
    } else {
      const [from, key] = String(target.getAttribute("data-edge")).split("|");
      app.view.setHover({ kind: "edge", from: Number(from), key });
    }
    render(app);
  });
  graph.addEventListener("mouseout", () => {
    app.view.setHover(null);
    render(app);
  });
  graph.addEventListener("click", (event) => {
    const target = (event.target as Element).closest("[data-node]");
    if (!target) return;
    app.view.toggleNode(Number(target.getAttribute("data-node")));
    render(app);
  });

  const conversation = $("conversation");
  conversation.addEventListener("mouseover", (event) => {
    const target = (event.target as Element).closest("[data-message]");
    if (!target) return;
    app.view.setHover({ kind: "message", index: Number(target.getAttribute("data-message")) });
    render(app);
  });
  conversation.addEventListener("mouseout", () => {
    app.view.setHover(null);
    render(app);
  });
}

function bindControls(app: AppState): void {
  $("expand-all").onclick = () => { app.view.expandAll(); render(app); };
  $("collapse-all").onclick = () => { app.view.collapseAll(); render(app); };
  $("undo").onclick = () => { app.view.undo(); render(app); };
  $("redo").onclick = () => { app.view.redo(); render(app); };
  $("reset").onclick = () => { app.view.reset(); render(app); };
  $("actual-path").onclick = () => {
    if (app.view.actualPathOnly) app.view.exitActualPath();
    else app.view.showActualPath();
    render(app);
  };
  ($("slider") as HTMLInputElement).oninput = (event) => {
    app.view.setSlider(Number((event.target as HTMLInputElement).value));
    render(app);
  };

  const input = $("say") as HTMLInputElement;
  input.addEventListener("keydown", async (event) => {
    if (event.key !== "Enter" || !app.sessionId || app.mode !== "live") return;
    const text = input.value;
    input.value = "";
    try {
      const response = await app.client.postUtterance(app.sessionId, text);
      for (const record of response.records) {
        app.view.appendStep(recordToTraceStep(record));
      }
      app.prompt = response.prompt;
      app.done = response.done;
      app.banner = null;
    } catch (error) {
      app.banner = error instanceof GatewayError
        ? `gateway error: ${error.message} — retry your message`
        : "gateway unreachable — check the server and retry";
    }
    render(app);
  });

  const upload = $("trace-file") as HTMLInputElement;
  upload.onchange = async () => {
    const file = upload.files?.[0];
    if (!file) return;
    try {
      await openReplay(app, await file.text());
    } catch (error) {
      app.banner = error instanceof GatewayError
        ? `replay rejected: ${error.message}`
        : "gateway unreachable — check the server and retry";
      render(app);
    }
  };
}

async function openReplay(app: AppState, traceText: string): Promise<void> {
  const session = await app.client.createReplaySession(app.agentId, traceText);
  const trace = await app.client.fetchTrace(session.session_id);
  app.sessionId = session.session_id;
  app.mode = "replay";
  app.prompt = null;
  app.done = true;
  app.banner = null;
  app.view = new GraphView(app.view.graph, trace.path as TraceStep[]);
  render(app);
}

async function boot(): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const base = params.get("gateway") ?? "http://127.0.0.1:8470";
  const client = new GatewayClient(base);
  const agents = await client.listAgents();
  if (!agents.length) throw new Error("gateway has no agents");
  const agentId = params.get("agent") ?? agents[0].id;
  const graph = await client.fetchGraph(agentId);
  const app: AppState = {
    client,
    agentId,
    view: new GraphView(graph, []),
    sessionId: null,
    mode: "live",
    prompt: null,
    done: false,
    banner: null,
  };
  $("agent-name").textContent = graph.agent;
  bindGraphEvents(app);
  bindControls(app);

  const session = await client.createLiveSession(agentId);
  app.sessionId = session.session_id;
  const info = await client.fetchSession(session.session_id);
  app.prompt = info.prompt ?? null;
  app.done = Boolean(info.done);
  client.connectEvents(session.session_id, () => {
    // records already arrive with utterance responses; the socket keeps the
    // session warm and lets other tabs observe steps
  });
  render(app);
}

boot().catch((error) => {
  const banner = document.getElementById("banner");
  if (banner) {
    banner.textContent = `failed to start: ${error}`;
    banner.className = "banner visible";
  }
});
