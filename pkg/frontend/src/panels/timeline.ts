// Branch timeline: one glyph per story turn, indented by branch depth.
// Clicking a glyph selects that node; marking two nodes arms the compare
// action (disabled with a tooltip when one is an ancestor of the other).
// The compare view replays the shared context once and shows the two
// divergent suffixes side by side, each with a "develop this path" action.

import { clear, el } from "../dom.js";
import { glyphFor, isNestedPair, nodesById, renderNode, timelineRows } from "../model.js";
import type { CharacterDoc, CompareDoc, NodeDoc } from "../types.js";

export interface TimelineDeps {
  selectNode(nodeId: string): void;
  compare(a: string, b: string): Promise<CompareDoc>;
  develop(nodeId: string): Promise<void>;
}

export class TimelinePanel {
  readonly root: HTMLElement;
  private deps: TimelineDeps;
  private nodes: NodeDoc[] = [];
  private cast: CharacterDoc[] = [];
  private activeHead: string | null = null;
  private selected: string | null = null;
  private marked: string[] = [];
  private compareView: CompareDoc | null = null;

  constructor(deps: TimelineDeps) {
    this.deps = deps;
    this.root = el("aside", { id: "timeline", class: "panel" });
    this.render();
  }

  setData(nodes: NodeDoc[], cast: CharacterDoc[], activeHead: string | null,
          selected: string | null): void {
    this.nodes = nodes;
    this.cast = cast;
    this.activeHead = activeHead;
    this.selected = selected;
    this.marked = this.marked.filter((id) => nodes.some((n) => n.id === id));
    this.render();
  }

  private toggleMark(nodeId: string): void {
    if (this.marked.includes(nodeId)) {
      this.marked = this.marked.filter((id) => id !== nodeId);
    } else {
      this.marked = [...this.marked, nodeId].slice(-2);
    }
    this.render();
  }

  private async openCompare(): Promise<void> {
    const [a, b] = this.marked;
    this.compareView = await this.deps.compare(a, b);
    this.render();
  }

  private async develop(nodeId: string): Promise<void> {
    await this.deps.develop(nodeId);
    this.compareView = null;
    this.marked = [];
    this.render();
  }

  private eventLine(node: NodeDoc): HTMLElement {
    const rendered = renderNode(node, this.cast);
    if (!rendered) {
      return el("div", { class: "compare-event muted" }, `(${node.kind})`);
    }
    return el("div", { class: "compare-event" },
      rendered.italic ? el("em", {}, rendered.text) : rendered.text);
  }

  private compareSection(view: CompareDoc): HTMLElement {
    const shared = el("div", { id: "compare-shared", class: "compare-shared" },
      el("h3", {}, "Shared context"));
    for (const node of view.shared_prefix) {
      shared.append(this.eventLine(node));
    }
    const columns = el("div", { class: "compare-columns" });
    for (const [label, suffix] of [["a", view.suffix_a], ["b", view.suffix_b]] as const) {
      const head = suffix[suffix.length - 1];
      const column = el("div", { class: "compare-column", "data-column": label });
      for (const node of suffix) {
        column.append(this.eventLine(node));
      }
      column.append(
        el("button", {
          class: "develop",
          "data-develop": head.id,
          onclick: () => void this.develop(head.id),
        }, "Develop this path"),
      );
      columns.append(column);
    }
    return el("section", { id: "compare-view" },
      el("h2", {}, "Compare"),
      shared,
      columns,
      el("button", { class: "close", onclick: () => { this.compareView = null; this.render(); } }, "Close"),
    );
  }

  render(): void {
    clear(this.root);
    this.root.append(el("h2", {}, "Select"));

    const list = el("div", { id: "timeline-rows" });
    for (const { node, depth } of timelineRows(this.nodes)) {
      const classes = ["timeline-row"];
      if (node.id === this.activeHead) classes.push("head");
      if (node.id === this.selected) classes.push("selected");
      if (this.marked.includes(node.id)) classes.push("marked");
      const row = el("div", { class: classes.join(" "), "data-node": node.id });
      row.style.paddingLeft = `${depth * 14}px`;
      row.append(
        el("button", {
          class: "glyph",
          title: `${node.kind} ${node.id}`,
          onclick: () => this.deps.selectNode(node.id),
        }, glyphFor(node.kind)),
        el("button", {
          class: "mark",
          title: "mark for compare",
          onclick: () => this.toggleMark(node.id),
        }, this.marked.includes(node.id) ? "⦿" : "⦾"),
      );
      if (node.id === this.activeHead) {
        row.append(el("span", { class: "head-marker", title: "active head" }, "▸"));
      }
      list.append(row);
    }
    this.root.append(list);

    const nested = this.marked.length === 2 &&
      isNestedPair(nodesById(this.nodes), this.marked[0], this.marked[1]);
    const compareButton = el("button", {
      id: "compare-button",
      disabled: this.marked.length !== 2 || nested,
      onclick: () => void this.openCompare(),
    }, "Compare marked");
    if (nested) {
      compareButton.title = "paths are nested: pick two divergent branches";
    }
    this.root.append(compareButton);

    if (this.compareView) {
      this.root.append(this.compareSection(this.compareView));
    }
  }
}
