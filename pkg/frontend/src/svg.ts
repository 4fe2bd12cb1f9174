// String renderers: the dialogue plan visual (SVG) and the conversation
// panel (HTML). Pure functions of the view model, so they are testable
// without a DOM; the app binds events through data- attributes.

import { LayoutResult } from "./layout.js";
import { GraphEdge, GraphNode, edgeId } from "./types.js";
import { GraphView, Message } from "./viewmodel.js";

const NODE_RADIUS = 16;

function escapeXml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function nodeShape(node: GraphNode, x: number, y: number): string {
  const r = NODE_RADIUS;
  // scope decides the shape, type decides the styling class
  if (node.scope === "system") {
    return `<rect x="${x - r}" y="${y - r}" width="${2 * r}" height="${2 * r}" rx="3"/>`;
  }
  if (node.scope === "web") {
    const points = `${x},${y - r} ${x + r},${y} ${x},${y + r} ${x - r},${y}`;
    return `<polygon points="${points}"/>`;
  }
  return `<circle cx="${x}" cy="${y}" r="${r}"/>`;
}

function edgePath(x1: number, y1: number, x2: number, y2: number): string {
  if (x1 === x2 && y1 === y2) {
    // self loop
    const r = NODE_RADIUS;
    return `M ${x1 + r} ${y1} a ${r} ${r} 0 1 1 ${-2 * r} 0 `;
  }
  const mx = (x1 + x2) / 2;
  return `M ${x1} ${y1} C ${mx} ${y1}, ${mx} ${y2}, ${x2} ${y2}`;
}

export function renderGraph(view: GraphView, layout: LayoutResult): string {
  const { shown: visible, greyed: greyNodes } = view.visibleNodes();
  const { shown: edges, greyed: greyEdges } = view.visibleEdges();
  const traceNodes = new Set(view.traceNodes());
  const traceEdges = view.traceEdgeIds();
  const extra = view.highlights();
  const { panX, panY, zoom } = view.viewTransform;

  const parts: string[] = [];
  for (const edge of edges) {
    const from = layout.positions.get(edge.from);
    const to = layout.positions.get(edge.to);
    if (!from || !to) continue;
    const id = edgeId(edge.from, edge.key);
    const classes = ["edge"];
    if (traceEdges.has(id)) classes.push("trace");
    if (greyEdges.has(id)) classes.push("greyed");
    if (extra.edges.has(id)) classes.push("highlight");
    parts.push(
      `<path class="${classes.join(" ")}" data-edge="${escapeXml(id)}" ` +
        `data-from="${edge.from}" data-to="${edge.to}" ` +
        `d="${edgePath(from.x, from.y, to.x, to.y)}" marker-end="url(#arrow)">` +
        `<title>${escapeXml(edge.labels.join("; ") || edge.key)}</title></path>`,
    );
  }
  for (const node of view.graph.nodes) {
    if (!visible.has(node.id)) continue;
    const at = layout.positions.get(node.id);
    if (!at) continue;
    const classes = ["node", `scope-${node.scope}`, `type-${node.type}`];
    if (traceNodes.has(node.id)) classes.push("trace");
    if (greyNodes.has(node.id)) classes.push("greyed");
    if (extra.nodes.has(node.id)) classes.push("highlight");
    if (view.isExpanded(node.id)) classes.push("expanded");
    const label = node.short_name ?? (node.is_goal ? "goal" : `n${node.id}`);
    parts.push(
      `<g class="${classes.join(" ")}" data-node="${node.id}">` +
        nodeShape(node, at.x, at.y) +
        `<text x="${at.x}" y="${at.y + NODE_RADIUS + 14}">${escapeXml(label)}</text>` +
        `<title>node ${node.id}: ${escapeXml(node.action ?? "goal")}</title></g>`,
    );
  }
  const transform = `translate(${panX} ${panY}) scale(${zoom})`;
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" ` +
    `viewBox="0 0 ${layout.width} ${layout.height}" ` +
    `width="${layout.width}" height="${layout.height}">` +
    `<defs><marker id="arrow" viewBox="0 0 10 10" refX="9" refY="5" ` +
    `markerWidth="7" markerHeight="7" orient="auto-start-reverse">` +
    `<path d="M 0 0 L 10 5 L 0 10 z"/></marker></defs>` +
    `<g class="viewport" transform="${transform}">${parts.join("")}</g></svg>`
  );
}

export function renderConversation(messages: Message[], highlighted: Set<number>): string {
  if (!messages.length) {
    return `<div class="empty">No conversation yet.</div>`;
  }
  return messages
    .map((message) => {
      const classes = ["msg", message.speaker];
      if (highlighted.has(message.index)) classes.push("highlight");
      return (
        `<div class="${classes.join(" ")}" data-message="${message.index}" ` +
        `data-step="${message.step}">` +
        `<span class="who">${message.speaker}</span>` +
        `<span class="text">${escapeXml(message.text)}</span></div>`
      );
    })
    .join("");
}

/** The info pane under the graph describing the hovered element. */
export function renderInfoPane(view: GraphView): string {
  const hover = view.hover;
  if (!hover) return "Hover a node, an edge, or a message.";
  if (hover.kind === "node") {
    const node = view.graph.nodes.find((n) => n.id === hover.id);
    if (!node) return "";
    const out = view.graph.edges.filter((e) => e.from === node.id).length;
    return `node ${node.id} [${node.scope}/${node.type}] ${node.action ?? "goal"} — ${out} outgoing edges`;
  }
  if (hover.kind === "edge") {
    const steps = view.stepsOnEdge(hover.from, hover.key);
    const times = steps.length
      ? ` — traversed ${steps.length}x at step${steps.length > 1 ? "s" : ""} ${steps
          .map((s) => s.step)
          .join(", ")}`
      : "";
    return `edge from node ${hover.from}: ${hover.key}${times}`;
  }
  const message = view.messages()[hover.index];
  return message ? `step ${message.step} — ${message.speaker}` : "";
}
