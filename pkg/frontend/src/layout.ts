// Layered graph layout: breadth-first layers from the root, nodes ordered
// by id within a layer. Deterministic, no physics.

import { GraphPayload } from "./types.js";

export interface Point {
  x: number;
  y: number;
}

export interface LayoutResult {
  positions: Map<number, Point>;
  width: number;
  height: number;
  layers: number[][];
}

export const COLUMN_WIDTH = 170;
export const ROW_HEIGHT = 64;
export const MARGIN = 60;

export function layoutGraph(graph: GraphPayload): LayoutResult {
  const adjacency = new Map<number, number[]>();
  for (const edge of graph.edges) {
    const bucket = adjacency.get(edge.from) ?? [];
    if (!bucket.includes(edge.to)) bucket.push(edge.to);
    adjacency.set(edge.from, bucket);
  }

  const layerOf = new Map<number, number>([[graph.n0, 0]]);
  let frontier = [graph.n0];
  let depth = 0;
  while (frontier.length) {
    depth += 1;
    const next: number[] = [];
    for (const node of frontier) {
      for (const succ of adjacency.get(node) ?? []) {
        if (!layerOf.has(succ)) {
          layerOf.set(succ, depth);
          next.push(succ);
        }
      }
    }
    frontier = next;
  }
  // disconnected nodes (none are expected) park in a trailing layer
  for (const node of graph.nodes) {
    if (!layerOf.has(node.id)) layerOf.set(node.id, depth);
  }

  const layers: number[][] = [];
  for (const [node, layer] of layerOf) {
    (layers[layer] ??= []).push(node);
  }
  for (const layer of layers) layer?.sort((a, b) => a - b);

  const positions = new Map<number, Point>();
  let tallest = 1;
  layers.forEach((nodes, layer) => {
    if (!nodes) return;
    tallest = Math.max(tallest, nodes.length);
    nodes.forEach((node, row) => {
      positions.set(node, {
        x: MARGIN + layer * COLUMN_WIDTH,
        y: MARGIN + row * ROW_HEIGHT,
      });
    });
  });
  return {
    positions,
    width: MARGIN * 2 + Math.max(0, layers.length - 1) * COLUMN_WIDTH,
    height: MARGIN * 2 + (tallest - 1) * ROW_HEIGHT,
    layers: layers.map((l) => l ?? []),
  };
}
