import { describe, expect, it } from "vitest";

import {
  glyphFor,
  isNestedPair,
  leafHeads,
  nodesById,
  parseList,
  pathToRoot,
  renderNode,
  scenariosEqual,
  timelineRows,
} from "../src/model.js";
import { starterScenario } from "../src/app.js";
import type { NodeDoc } from "../src/types.js";

function node(id: string, parent: string | null, kind: NodeDoc["kind"] = "dialogue",
              payload: Record<string, unknown> = {}): NodeDoc {
  return { id, parent, kind, created_at: Number(id.slice(1)), payload };
}

const TREE: NodeDoc[] = [
  node("n0", null, "scene_setup"),
  node("n1", "n0", "dialogue", { speaker: "ada", speech: "hello" }),
  node("n2", "n1", "stage_direction", { text: "the lights dim" }),
  node("n3", "n1", "dialogue", { speaker: "ben", speech: "who's there" }),
  node("n4", "n3", "dialogue", { speaker: "ada", speech: "me" }),
];

describe("paths", () => {
  it("walks to the root in order", () => {
    const ids = pathToRoot(nodesById(TREE), "n4").map((n) => n.id);
    expect(ids).toEqual(["n0", "n1", "n3", "n4"]);
  });

  it("detects nested pairs including equality", () => {
    const byId = nodesById(TREE);
    expect(isNestedPair(byId, "n1", "n4")).toBe(true);
    expect(isNestedPair(byId, "n4", "n1")).toBe(true);
    expect(isNestedPair(byId, "n2", "n2")).toBe(true);
    expect(isNestedPair(byId, "n2", "n4")).toBe(false);
  });

  it("finds leaf heads in creation order", () => {
    expect(leafHeads(TREE).map((n) => n.id)).toEqual(["n2", "n4"]);
  });
});

describe("timeline layout", () => {
  it("indents branches under their fork point", () => {
    const rows = timelineRows(TREE);
    expect(rows.map((r) => r.node.id)).toEqual(["n0", "n1", "n2", "n3", "n4"]);
    const depth = Object.fromEntries(rows.map((r) => [r.node.id, r.depth]));
    expect(depth.n0).toBe(0);
    expect(depth.n2).toBe(2);
    expect(depth.n3).toBe(2);
    expect(depth.n4).toBe(3);
  });

  it("assigns one glyph per node kind", () => {
    const glyphs = new Set(["scene_setup", "dialogue", "stage_direction", "reshape"]
      .map((kind) => glyphFor(kind as NodeDoc["kind"])));
    expect(glyphs.size).toBe(4);
  });
});

describe("event rendering", () => {
  const cast = starterScenario().characters;

  it("renders dialogue with the display name", () => {
    const rendered = renderNode(node("n9", "n0", "dialogue",
      { speaker: "ada", speech: "hi", action: "waves", thought: "hm" }), cast)!;
    expect(rendered.text).toBe("Ada: hi");
    expect(rendered.action).toBe("waves");
    expect(rendered.thought).toBe("hm");
    expect(rendered.italic).toBe(false);
  });

  it("renders stage directions as italic text", () => {
    const rendered = renderNode(node("n9", "n0", "stage_direction",
      { text: "the power goes out" }), cast)!;
    expect(rendered.italic).toBe(true);
    expect(rendered.text).toBe("the power goes out");
  });

  it("renders nothing for reshape and scene_setup", () => {
    expect(renderNode(node("n9", "n0", "reshape"), cast)).toBeNull();
    expect(renderNode(node("n9", null, "scene_setup"), cast)).toBeNull();
  });
});

describe("scenario diffing for the submit gate", () => {
  it("treats structurally equal scenarios as no change", () => {
    const a = starterScenario();
    const b = starterScenario();
    expect(scenariosEqual(a, b)).toBe(true);
    b.characters[0].flaws.push("jealousy");
    expect(scenariosEqual(a, b)).toBe(false);
  });

  it("ignores relationship key order", () => {
    const a = starterScenario();
    const b = starterScenario();
    b.characters[0].relationships = Object.fromEntries(
      Object.entries(b.characters[0].relationships).reverse());
    expect(scenariosEqual(a, b)).toBe(true);
  });
});

describe("list parsing", () => {
  it("splits, trims, and drops empties", () => {
    expect(parseList(" escape town \n\n protect mira ")).toEqual(
      ["escape town", "protect mira"]);
  });
});
