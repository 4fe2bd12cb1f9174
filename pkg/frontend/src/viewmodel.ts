// Pure view state for the diagnostic interface: everything the renderer
// shows is a function of (graph payload, trace prefix, interaction state),
// so replaying the same event sequence reproduces the same highlights.

import {
  GraphEdge,
  GraphPayload,
  TraceStep,
  edgeId,
  stepEdgeId,
} from "./types.js";

export type Hover =
  | { kind: "node"; id: number }
  | { kind: "edge"; from: number; key: string }
  | { kind: "message"; index: number }
  | null;

export interface Message {
  index: number;
  step: number; // 1-based step number this line belongs to
  speaker: "agent" | "user" | "web" | "system";
  text: string;
}

export interface Highlights {
  nodes: Set<number>;
  edges: Set<string>;
  messages: Set<number>;
}

interface ViewState {
  expanded: Set<number>;
  slider: number;
  actualPathOnly: boolean;
  panX: number;
  panY: number;
  zoom: number;
}

function cloneState(s: ViewState): ViewState {
  return { ...s, expanded: new Set(s.expanded) };
}

function parseMessage(line: string): { speaker: Message["speaker"]; text: string } {
  for (const speaker of ["agent", "user", "web", "system"] as const) {
    if (line.startsWith(`${speaker}: `)) {
      return { speaker, text: line.slice(speaker.length + 2) };
    }
  }
  return { speaker: "system", text: line };
}

export class GraphView {
  readonly graph: GraphPayload;
  private trace: TraceStep[];
  private state: ViewState;
  private undoStack: ViewState[] = [];
  private redoStack: ViewState[] = [];
  hover: Hover = null;

  private outgoing = new Map<number, GraphEdge[]>();

  constructor(graph: GraphPayload, trace: TraceStep[] = []) {
    this.graph = graph;
    this.trace = [...trace];
    for (const edge of graph.edges) {
      const bucket = this.outgoing.get(edge.from) ?? [];
      bucket.push(edge);
      this.outgoing.set(edge.from, bucket);
    }
    this.state = {
      expanded: new Set(),
      slider: this.trace.length,
      actualPathOnly: false,
      panX: 0,
      panY: 0,
      zoom: 1,
    };
  }

  // ── undoable state transitions ─────────────────────────────────────

  private commit(mutate: (s: ViewState) => void): void {
    this.undoStack.push(cloneState(this.state));
    this.redoStack = [];
    mutate(this.state);
  }

  undo(): boolean {
    const prev = this.undoStack.pop();
    if (!prev) return false;
    this.redoStack.push(cloneState(this.state));
    this.state = prev;
    return true;
  }

  redo(): boolean {
    const next = this.redoStack.pop();
    if (!next) return false;
    this.undoStack.push(cloneState(this.state));
    this.state = next;
    return true;
  }

  toggleNode(id: number): void {
    this.commit((s) => {
      if (s.expanded.has(id)) s.expanded.delete(id);
      else s.expanded.add(id);
    });
  }

  expandAll(): void {
    this.commit((s) => {
      s.expanded = new Set(this.graph.nodes.map((n) => n.id));
    });
  }

  collapseAll(): void {
    this.commit((s) => {
      s.expanded = new Set();
    });
  }

  setSlider(k: number): void {
    const clamped = Math.max(0, Math.min(this.trace.length, Math.floor(k)));
    this.commit((s) => {
      s.slider = clamped;
    });
  }

  /** Show only trace elements (plus greyed children) and jump to the end. */
  showActualPath(): void {
    this.commit((s) => {
      s.actualPathOnly = true;
      s.slider = this.trace.length;
    });
  }

  exitActualPath(): void {
    this.commit((s) => {
      s.actualPathOnly = false;
    });
  }

  pan(dx: number, dy: number): void {
    this.commit((s) => {
      s.panX += dx;
      s.panY += dy;
    });
  }

  setZoom(zoom: number): void {
    this.commit((s) => {
      s.zoom = Math.max(0.2, Math.min(4, zoom));
    });
  }

  /** Re-center after manual panning/zooming. */
  reset(): void {
    this.commit((s) => {
      s.panX = 0;
      s.panY = 0;
      s.zoom = 1;
    });
  }

  setHover(hover: Hover): void {
    this.hover = hover; // ephemeral, not undoable
  }

  // ── live mode ──────────────────────────────────────────────────────

  /** Append a freshly executed step; the slider follows the live head when
   * it was already there. */
  appendStep(step: TraceStep): void {
    const followed = this.state.slider === this.trace.length;
    this.trace.push(step);
    if (followed) this.state.slider = this.trace.length;
  }

  // ── derivations ────────────────────────────────────────────────────

  get slider(): number {
    return this.state.slider;
  }

  get maxStep(): number {
    return this.trace.length;
  }

  get actualPathOnly(): boolean {
    return this.state.actualPathOnly;
  }

  get viewTransform(): { panX: number; panY: number; zoom: number } {
    const { panX, panY, zoom } = this.state;
    return { panX, panY, zoom };
  }

  isExpanded(id: number): boolean {
    return this.state.expanded.has(id);
  }

  /** The full (node, edge) sequence of the loaded log, multiplicity kept. */
  tracePath(): TraceStep[] {
    return [...this.trace];
  }

  /** The slider-selected prefix of the trace. */
  tracePrefix(): TraceStep[] {
    return this.trace.slice(0, this.state.slider);
  }

  /** Nodes visited by the prefix, in first-visit order; the root is always
   * part of the trace, even at slider 0. */
  traceNodes(): number[] {
    const seen = new Set<number>([this.graph.n0]);
    const order = [this.graph.n0];
    for (const step of this.tracePrefix()) {
      for (const node of [step.from, step.to]) {
        if (!seen.has(node)) {
          seen.add(node);
          order.push(node);
        }
      }
    }
    return order;
  }

  traceEdgeIds(): Set<string> {
    return new Set(this.tracePrefix().map(stepEdgeId));
  }

  /** Conversation panel content for the current prefix. */
  messages(): Message[] {
    const out: Message[] = [];
    for (const step of this.tracePrefix()) {
      for (const line of step.utterances) {
        const { speaker, text } = parseMessage(line);
        out.push({ index: out.length, step: step.step, speaker, text });
      }
    }
    return out;
  }

  /** Graph elements currently shown. In the default mode the root is shown
   * and expanding a node reveals its children; in actual-path mode the
   * trace is shown with children of trace nodes greyed out. */
  visibleNodes(): { shown: Set<number>; greyed: Set<number> } {
    if (this.state.actualPathOnly) {
      const traced = new Set(this.traceNodes());
      const shown = new Set(traced);
      const greyed = new Set<number>();
      for (const node of traced) {
        for (const edge of this.outgoing.get(node) ?? []) {
          if (!traced.has(edge.to)) {
            shown.add(edge.to);
            greyed.add(edge.to);
          }
        }
      }
      return { shown, greyed };
    }
    const shown = new Set<number>([this.graph.n0]);
    const queue = [this.graph.n0];
    while (queue.length) {
      const node = queue.shift()!;
      if (!this.state.expanded.has(node)) continue;
      for (const edge of this.outgoing.get(node) ?? []) {
        if (!shown.has(edge.to)) {
          shown.add(edge.to);
          queue.push(edge.to);
        }
      }
    }
    // nodes already reached by the conversation are always visible
    for (const node of this.traceNodes()) shown.add(node);
    return { shown, greyed: new Set() };
  }

  visibleEdges(): { shown: GraphEdge[]; greyed: Set<string> } {
    const { shown: nodes, greyed: greyNodes } = this.visibleNodes();
    const traceIds = this.traceEdgeIds();
    const shown: GraphEdge[] = [];
    const greyed = new Set<string>();
    for (const edge of this.graph.edges) {
      if (!nodes.has(edge.from) || !nodes.has(edge.to)) continue;
      const id = edgeId(edge.from, edge.key);
      shown.push(edge);
      // in actual-path mode, anything not on the traversed path is greyed
      if (this.state.actualPathOnly && !traceIds.has(id)) greyed.add(id);
    }
    void greyNodes;
    return { shown, greyed };
  }

  /** Steps of the current prefix that traverse the given edge element. */
  stepsOnEdge(from: number, key: string): TraceStep[] {
    const id = edgeId(from, key);
    return this.tracePrefix().filter((step) => stepEdgeId(step) === id);
  }

  private messageIndexesForSteps(steps: Set<number>): Set<number> {
    return new Set(
      this.messages()
        .filter((m) => steps.has(m.step))
        .map((m) => m.index),
    );
  }

  /** Everything the hover interaction lights up, on top of the trace. */
  highlights(): Highlights {
    const nodes = new Set<number>();
    const edges = new Set<string>();
    const messages = new Set<number>();
    const hover = this.hover;
    if (!hover) return { nodes, edges, messages };
    if (hover.kind === "node") {
      nodes.add(hover.id);
      for (const edge of this.outgoing.get(hover.id) ?? []) {
        edges.add(edgeId(edge.from, edge.key));
      }
      const steps = new Set(
        this.tracePrefix()
          .filter((s) => s.from === hover.id)
          .map((s) => s.step),
      );
      for (const index of this.messageIndexesForSteps(steps)) messages.add(index);
    } else if (hover.kind === "edge") {
      edges.add(edgeId(hover.from, hover.key));
      const steps = new Set(this.stepsOnEdge(hover.from, hover.key).map((s) => s.step));
      for (const index of this.messageIndexesForSteps(steps)) messages.add(index);
    } else {
      messages.add(hover.index);
      const message = this.messages()[hover.index];
      if (message) {
        const step = this.tracePrefix().find((s) => s.step === message.step);
        if (step) edges.add(stepEdgeId(step));
      }
    }
    return { nodes, edges, messages };
  }
}
