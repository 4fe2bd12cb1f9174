// A fixture gateway: a tiny HTTP server that serves payloads recorded from
// the real backend, plus enough session behavior for live-mode tests
// (scripted utterance responses, 409 on replay sessions).

import { readFileSync } from "node:fs";
import { createServer, IncomingMessage, Server, ServerResponse } from "node:http";
import { AddressInfo } from "node:net";
import { join } from "node:path";

interface FixtureSet {
  agents: unknown;
  graph: unknown;
  trace: unknown;
  steps: Array<unknown>;
  liveSteps: Array<{ text: string; response: Record<string, unknown> }>;
}

export interface FixtureGateway {
  url: string;
  port: number;
  close(): Promise<void>;
}

function loadFixtures(dir: string): FixtureSet {
  const read = (name: string) => JSON.parse(readFileSync(join(dir, name), "utf-8"));
  return {
    agents: read("agents.json"),
    graph: read("graph.json"),
    trace: read("trace.json"),
    steps: read("steps.json"),
    liveSteps: read("live_steps.json"),
  };
}

async function readBody(request: IncomingMessage): Promise<string> {
  const chunks: Buffer[] = [];
  for await (const chunk of request) chunks.push(chunk as Buffer);
  return Buffer.concat(chunks).toString("utf-8");
}

export async function startFixtureGateway(fixtureDir: string): Promise<FixtureGateway> {
  const fixtures = loadFixtures(fixtureDir);
  let sessionCounter = 0;
  // session id -> {mode, cursor into liveSteps, records}
  const sessions = new Map<string, { mode: string; cursor: number; records: unknown[] }>();

  const send = (response: ServerResponse, status: number, body: unknown) => {
    const text = JSON.stringify(body);
    response.writeHead(status, {
      "content-type": "application/json",
      "access-control-allow-origin": "*",
    });
    response.end(text);
  };

  const server: Server = createServer(async (request, response) => {
    const url = new URL(request.url ?? "/", "http://fixture");
    const path = url.pathname;
    try {
      if (request.method === "GET" && path === "/agents") {
        return send(response, 200, fixtures.agents);
      }
      let match = path.match(/^\/agents\/([^/]+)\/graph$/);
      if (request.method === "GET" && match) {
        return send(response, 200, fixtures.graph);
      }
      match = path.match(/^\/agents\/([^/]+)\/sessions$/);
      if (request.method === "POST" && match) {
        const body = JSON.parse((await readBody(request)) || "{}");
        sessionCounter += 1;
        const sessionId = `fx${sessionCounter}`;
        if (body.mode === "replay") {
          if (!body.trace || !String(body.trace).trim()) {
            return send(response, 422, { detail: "replay sessions need a trace" });
          }
          const lines = String(body.trace).split("\n").filter((l: string) => l.trim());
          if (lines.some((line: string) => !line.startsWith("{"))) {
            return send(response, 400, { detail: "trace diverges" });
          }
          sessions.set(sessionId, { mode: "replay", cursor: 0, records: [] });
          const first = fixtures.steps[0] as { snapshot: unknown };
          return send(response, 200, {
            session_id: sessionId,
            mode: "replay",
            snapshot: first.snapshot,
            steps: lines.length,
          });
        }
        sessions.set(sessionId, { mode: "live", cursor: 0, records: [] });
        const first = fixtures.steps[0] as { snapshot: unknown };
        return send(response, 200, {
          session_id: sessionId,
          mode: "live",
          snapshot: first.snapshot,
          steps: 0,
        });
      }
      match = path.match(/^\/sessions\/([^/]+)$/);
      if (request.method === "GET" && match) {
        const session = sessions.get(match[1]);
        if (!session) return send(response, 404, { detail: "unknown session" });
        const at = fixtures.steps[Math.min(session.records.length, fixtures.steps.length - 1)];
        return send(response, 200, {
          session_id: match[1],
          agent: "car",
          mode: session.mode,
          steps: session.mode === "replay"
            ? (fixtures.trace as { path: unknown[] }).path.length
            : session.records.length,
          snapshot: (at as { snapshot: unknown }).snapshot,
          done: false,
          awaiting_input: session.mode === "live",
          prompt: session.mode === "live" ? "Hello! I can help inspect the car." : null,
        });
      }
      match = path.match(/^\/sessions\/([^/]+)\/trace$/);
      if (request.method === "GET" && match) {
        const session = sessions.get(match[1]);
        if (!session) return send(response, 404, { detail: "unknown session" });
        if (session.mode === "replay") return send(response, 200, fixtures.trace);
        const path_ = session.records.map((r) => {
          const record = r as Record<string, unknown>;
          return {
            step: record.step,
            from: record.node,
            edge: record.edge,
            to: record.next_node,
            action: record.action,
            utterances: record.utterances,
          };
        });
        return send(response, 200, { path: path_ });
      }
      match = path.match(/^\/sessions\/([^/]+)\/steps\/(\d+)$/);
      if (request.method === "GET" && match) {
        if (!sessions.has(match[1])) return send(response, 404, { detail: "unknown session" });
        const k = Number(match[2]);
        if (k >= fixtures.steps.length) {
          return send(response, 422, { detail: `step ${k} outside trace` });
        }
        return send(response, 200, fixtures.steps[k]);
      }
      match = path.match(/^\/sessions\/([^/]+)\/utterance$/);
      if (request.method === "POST" && match) {
        const session = sessions.get(match[1]);
        if (!session) return send(response, 404, { detail: "unknown session" });
        if (session.mode !== "live") {
          return send(response, 409, { detail: "replay sessions are read-only" });
        }
        await readBody(request);
        if (session.cursor >= fixtures.liveSteps.length) {
          return send(response, 409, { detail: "conversation complete" });
        }
        const scripted = fixtures.liveSteps[session.cursor];
        session.cursor += 1;
        for (const record of scripted.response.records as unknown[]) {
          session.records.push(record);
        }
        return send(response, 200, scripted.response);
      }
      send(response, 404, { detail: `no route for ${request.method} ${path}` });
    } catch (error) {
      send(response, 500, { detail: String(error) });
    }
  });

  await new Promise<void>((resolve) => server.listen(0, "127.0.0.1", resolve));
  const port = (server.address() as AddressInfo).port;
  return {
    url: `http://127.0.0.1:${port}`,
    port,
    close: () =>
      new Promise<void>((resolve, reject) =>
        server.close((err) => (err ? reject(err) : resolve())),
      ),
  };
}
