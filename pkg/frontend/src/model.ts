// Pure view-model helpers over the documents the service returns. Everything
// here is a plain function so panel behavior is testable without a DOM.

import type { CharacterDoc, NodeDoc, ScenarioDoc } from "./types.js";

export function nodesById(nodes: NodeDoc[]): Map<string, NodeDoc> {
  return new Map(nodes.map((node) => [node.id, node]));
}

export function pathToRoot(byId: Map<string, NodeDoc>, nodeId: string): NodeDoc[] {
  const path: NodeDoc[] = [];
  let current: string | null = nodeId;
  while (current !== null) {
    const node = byId.get(current);
    if (!node) break;
    path.push(node);
    current = node.parent;
  }
  return path.reverse();
}

export function isNestedPair(byId: Map<string, NodeDoc>, a: string, b: string): boolean {
  if (a === b) return true;
  const idsA = new Set(pathToRoot(byId, a).map((n) => n.id));
  const idsB = new Set(pathToRoot(byId, b).map((n) => n.id));
  return idsA.has(b) || idsB.has(a);
}

/** Leaf heads in creation order: the choices offered by the path selector. */
export function leafHeads(nodes: NodeDoc[]): NodeDoc[] {
  const hasChild = new Set(nodes.map((n) => n.parent).filter((p) => p !== null));
  return nodes
    .filter((n) => !hasChild.has(n.id))
    .sort((x, y) => x.created_at - y.created_at);
}

export interface TimelineRow {
  node: NodeDoc;
  depth: number;
  row: number;
}

/** Depth-first layout: one row per node, depth = indent, branches grouped
 * under their fork point. */
export function timelineRows(nodes: NodeDoc[]): TimelineRow[] {
  const children = new Map<string | null, NodeDoc[]>();
  for (const node of [...nodes].sort((a, b) => a.created_at - b.created_at)) {
    const siblings = children.get(node.parent) ?? [];
    siblings.push(node);
    children.set(node.parent, siblings);
  }
  const rows: TimelineRow[] = [];
  const visit = (node: NodeDoc, depth: number) => {
    rows.push({ node, depth, row: rows.length });
    for (const child of children.get(node.id) ?? []) {
      visit(child, depth + 1);
    }
  };
  for (const root of children.get(null) ?? []) {
    visit(root, 0);
  }
  return rows;
}

export function glyphFor(kind: NodeDoc["kind"]): string {
  switch (kind) {
    case "scene_setup":
      return "◉"; // fisheye: the origin
    case "dialogue":
      return "●"; // filled circle: a story turn
    case "stage_direction":
      return "★"; // star: an author intervention
    case "reshape":
      return "▲"; // triangle: conditions changed
  }
}

export interface RenderedEvent {
  nodeId: string;
  kind: NodeDoc["kind"];
  text: string;
  action: string | null;
  thought: string | null;
  italic: boolean;
}

/** Render one timeline node the way the conversation view shows it.
 * Names resolve through the effective cast; reshape nodes render nothing. */
export function renderNode(node: NodeDoc, cast: CharacterDoc[]): RenderedEvent | null {
  if (node.kind === "dialogue") {
    const speaker = String(node.payload.speaker ?? "");
    const name = cast.find((c) => c.id === speaker)?.name ?? speaker;
    return {
      nodeId: node.id,
      kind: node.kind,
      text: `${name}: ${String(node.payload.speech ?? "")}`,
      action: (node.payload.action as string | null) ?? null,
      thought: (node.payload.thought as string | null) ?? null,
      italic: false,
    };
  }
  if (node.kind === "stage_direction") {
    return {
      nodeId: node.id,
      kind: node.kind,
      text: String(node.payload.text ?? ""),
      action: null,
      thought: null,
      italic: true,
    };
  }
  return null;
}

export function cloneScenario(scenario: ScenarioDoc): ScenarioDoc {
  return JSON.parse(JSON.stringify(scenario)) as ScenarioDoc;
}

/** Client-side no-change detection: the shape submit stays disabled while
 * the edit buffer matches the effective scenario. */
export function scenariosEqual(a: ScenarioDoc, b: ScenarioDoc): boolean {
  return JSON.stringify(normalize(a)) === JSON.stringify(normalize(b));
}

function normalize(scenario: ScenarioDoc): unknown {
  return {
    world: scenario.world,
    characters: scenario.characters.map((c) => ({
      id: c.id,
      name: c.name,
      personality: c.personality,
      goals: c.goals,
      flaws: c.flaws,
      relationships: Object.fromEntries(Object.entries(c.relationships).sort()),
      secrets: c.secrets,
    })),
    params: scenario.params,
  };
}

/** Split "a, b; c" style textarea input into a clean string list. */
export function parseList(raw: string): string[] {
  return raw
    .split("\n")
    .map((part) => part.trim())
    .filter((part) => part.length > 0);
}

export function formatList(items: string[]): string {
  return items.join("\n");
}
