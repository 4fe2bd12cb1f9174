// The secondary acceptance checks, run against a fixture gateway: the
// rendered trace path equals the gateway payload with multiplicity, the
// slider shows exactly the length-k prefix, and hovering a twice-traversed
// edge lights up both matching conversation messages.

import { readFileSync } from "node:fs";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { GatewayClient } from "../src/gatewayClient.js";
import { layoutGraph } from "../src/layout.js";
import { renderGraph } from "../src/svg.js";
import {
  GraphPayload,
  SnapshotDoc,
  TraceStep,
  recordToTraceStep,
  stepEdgeId,
} from "../src/types.js";
import { GraphView } from "../src/viewmodel.js";
import { FixtureGateway, startFixtureGateway } from "./fixture_gateway.js";

const FIXTURES = join(__dirname, "fixtures");

let gateway: FixtureGateway;
let client: GatewayClient;

beforeAll(async () => {
  gateway = await startFixtureGateway(FIXTURES);
  client = new GatewayClient(gateway.url);
});

afterAll(async () => {
  await gateway.close();
});

async function loadReplay(): Promise<{
  graph: GraphPayload;
  view: GraphView;
  path: TraceStep[];
  sessionId: string;
}> {
  const agents = await client.listAgents();
  const graph = await client.fetchGraph(agents[0].id);
  const traceText = readFileSync(join(FIXTURES, "trace.jsonl"), "utf-8");
  const session = await client.createReplaySession(agents[0].id, traceText);
  const trace = await client.fetchTrace(session.session_id);
  return {
    graph,
    view: new GraphView(graph, trace.path),
    path: trace.path,
    sessionId: session.session_id,
  };
}

describe("replay acceptance", () => {
  it("renders a trace path equal to the gateway payload, multiplicity included", async () => {
    const { graph, view, path } = await loadReplay();
    expect(view.tracePath().map((s) => [s.from, s.edge, s.to])).toEqual(
      path.map((s) => [s.from, s.edge, s.to]),
    );
    // the repeated edge appears twice in the path and once in the drawing
    const ids = path.map(stepEdgeId);
    const repeated = ids.filter((id, i) => ids.indexOf(id) !== i);
    expect(repeated.length).toBe(1);
    const svg = renderGraph(view, layoutGraph(graph));
    const marker = `data-edge="${repeated[0]}"`;
    expect(svg.indexOf(marker)).toBe(svg.lastIndexOf(marker));
    expect(svg.slice(svg.indexOf(marker) - 200, svg.indexOf(marker))).toContain("trace");
  });

  it("slider position k shows exactly the length-k prefix", async () => {
    const { view, path, sessionId } = await loadReplay();
    for (let k = 0; k <= path.length; k += 1) {
      view.setSlider(k);
      expect(view.tracePrefix()).toEqual(path.slice(0, k));
      // the gateway agrees about where the prefix ends up
      const { snapshot } = await client.fetchStepSnapshot(sessionId, k);
      const expectedNode = k === 0 ? view.graph.n0 : path[k - 1].to;
      expect((snapshot as SnapshotDoc).node).toBe(expectedNode);
      expect((snapshot as SnapshotDoc).step).toBe(k);
    }
  });

  it("hovering a twice-traversed edge highlights two conversation messages", async () => {
    const { view, path } = await loadReplay();
    const ids = path.map(stepEdgeId);
    const repeatedId = ids.find((id, i) => ids.indexOf(id) !== i)!;
    const [from, key] = repeatedId.split("|");
    view.setHover({ kind: "edge", from: Number(from), key });
    const highlights = view.highlights();
    const matched = view.messages().filter((m) => highlights.messages.has(m.index));
    const steps = new Set(matched.map((m) => m.step));
    expect(steps.size).toBe(2);
    expect(matched.filter((m) => m.speaker === "user").length).toBe(2);
  });

  it("rejects posting an utterance into a replay session", async () => {
    const { sessionId } = await loadReplay();
    await expect(client.postUtterance(sessionId, "hi")).rejects.toMatchObject({
      status: 409,
    });
  });
});

describe("live acceptance", () => {
  it("typing an utterance makes the new trace edge appear", async () => {
    const agents = await client.listAgents();
    const graph = await client.fetchGraph(agents[0].id);
    const session = await client.createLiveSession(agents[0].id);
    const view = new GraphView(graph, []);
    expect(view.tracePath().length).toBe(0);

    const response = await client.postUtterance(session.session_id, "check the oil");
    for (const record of response.records) view.appendStep(recordToTraceStep(record));
    expect(view.tracePath().length).toBeGreaterThan(0);
    const newEdge = stepEdgeId(view.tracePath()[0]);
    expect(view.traceEdgeIds().has(newEdge)).toBe(true);
    const svg = renderGraph(view, layoutGraph(graph));
    const at = svg.indexOf(`data-edge="${newEdge}"`);
    expect(at).toBeGreaterThan(-1);
    expect(svg.slice(at - 200, at)).toContain("trace");

    // the gateway's live trace agrees with the view
    const trace = await client.fetchTrace(session.session_id);
    expect(trace.path.map((s) => [s.from, s.edge, s.to])).toEqual(
      view.tracePath().map((s) => [s.from, s.edge, s.to]),
    );
  });
});
