// Thin client over the gateway's documented HTTP/WebSocket schemas. The
// frontend has no other channel to the backend.

import {
  AgentInfo,
  GraphPayload,
  SessionDoc,
  SessionInfo,
  SnapshotDoc,
  TracePayload,
  UtteranceResponse,
} from "./types.js";

export class GatewayError extends Error {
  constructor(message: string, readonly status: number) {
    super(message);
  }
}

async function expectJson<T>(response: Response): Promise<T> {
  if (!response.ok) {
    let detail = response.statusText;
    try {
      const body = await response.json();
      detail = typeof body.detail === "string" ? body.detail : JSON.stringify(body.detail);
    } catch {
      // keep the status text
    }
    throw new GatewayError(detail, response.status);
  }
  return (await response.json()) as T;
}

export class GatewayClient {
  constructor(readonly base: string) {}

  private url(path: string): string {
    return `${this.base.replace(/\/$/, "")}${path}`;
  }

  listAgents(): Promise<AgentInfo[]> {
    return fetch(this.url("/agents")).then((r) => expectJson<AgentInfo[]>(r));
  }

  fetchGraph(agentId: string): Promise<GraphPayload> {
    return fetch(this.url(`/agents/${agentId}/graph`)).then((r) =>
      expectJson<GraphPayload>(r),
    );
  }

  createLiveSession(agentId: string): Promise<SessionDoc> {
    return fetch(this.url(`/agents/${agentId}/sessions`), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ mode: "live" }),
    }).then((r) => expectJson<SessionDoc>(r));
  }

  createReplaySession(agentId: string, traceText: string): Promise<SessionDoc> {
    return fetch(this.url(`/agents/${agentId}/sessions`), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ mode: "replay", trace: traceText }),
    }).then((r) => expectJson<SessionDoc>(r));
  }

  fetchSession(sessionId: string): Promise<SessionInfo> {
    return fetch(this.url(`/sessions/${sessionId}`)).then((r) =>
      expectJson<SessionInfo>(r),
    );
  }

  fetchTrace(sessionId: string): Promise<TracePayload> {
    return fetch(this.url(`/sessions/${sessionId}/trace`)).then((r) =>
      expectJson<TracePayload>(r),
    );
  }

  fetchStepSnapshot(sessionId: string, k: number): Promise<{ step: number; snapshot: SnapshotDoc }> {
    return fetch(this.url(`/sessions/${sessionId}/steps/${k}`)).then((r) =>
      expectJson<{ step: number; snapshot: SnapshotDoc }>(r),
    );
  }

  postUtterance(sessionId: string, text: string): Promise<UtteranceResponse> {
    return fetch(this.url(`/sessions/${sessionId}/utterance`), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ text }),
    }).then((r) => expectJson<UtteranceResponse>(r));
  }

  /** Live step events; falls back silently when WebSocket is unavailable
   * (the HTTP responses carry the same records). */
  connectEvents(sessionId: string, onMessage: (event: unknown) => void): WebSocket | null {
    if (typeof WebSocket === "undefined") return null;
    const wsBase = this.base.replace(/^http/, "ws");
    const socket = new WebSocket(`${wsBase}/sessions/${sessionId}/events`);
    socket.onmessage = (event) => {
      try {
        onMessage(JSON.parse(String(event.data)));
      } catch {
        // ignore malformed frames
      }
    };
    return socket;
  }
}
