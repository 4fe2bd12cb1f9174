// Gateway wire types (see docs/wire-formats.md in the repository root).

export type NodeScope = "dialogue" | "system" | "web";
export type NodeType = "root" | "goal" | "regular";

export interface GraphNode {
  id: number;
  action: string | null;
  short_name: string | null;
  utterance: string | null;
  scope: NodeScope;
  type: NodeType;
  is_root: boolean;
  is_goal: boolean;
}

export interface GraphEdge {
  from: number;
  key: string;
  labels: string[];
  to: number;
}

export interface GraphPayload {
  agent: string;
  n0: number;
  goal_nodes: number[];
  nodes: GraphNode[];
  edges: GraphEdge[];
}

export interface TraceStep {
  step: number;
  from: number;
  edge: string;
  to: number;
  action: string;
  utterances: string[];
}

export interface TracePayload {
  path: TraceStep[];
}

export interface SnapshotDoc {
  state: string[];
  context: Record<string, unknown>;
  node: number;
  step: number;
}

export interface StepRecordDoc {
  step: number;
  node: number;
  action: string;
  prior_state_hash: string;
  edge: string;
  new_state: string[];
  context_delta: Record<string, unknown>;
  utterances: string[];
  next_node: number;
}

export interface SessionDoc {
  session_id: string;
  mode: "live" | "replay";
  snapshot: SnapshotDoc;
  steps: number;
}

export interface SessionInfo {
  session_id: string;
  agent: string;
  mode: "live" | "replay";
  steps: number;
  snapshot: SnapshotDoc;
  done?: boolean;
  awaiting_input?: boolean;
  prompt?: string | null;
}

export interface UtteranceResponse {
  records: StepRecordDoc[];
  snapshot: SnapshotDoc;
  done: boolean;
  prompt: string | null;
  awaiting_input: boolean;
}

export interface AgentInfo {
  id: string;
  name: string;
  actions: number;
  nodes: number;
}

/** Identity of one edge element in the visual: target is implied by the
 * controller but kept for readability. */
export function edgeId(from: number, key: string): string {
  return `${from}|${key}`;
}

export function stepEdgeId(step: TraceStep): string {
  return edgeId(step.from, step.edge);
}

export function recordToTraceStep(record: StepRecordDoc): TraceStep {
  return {
    step: record.step,
    from: record.node,
    edge: record.edge,
    to: record.next_node,
    action: record.action,
    utterances: record.utterances,
  };
}
