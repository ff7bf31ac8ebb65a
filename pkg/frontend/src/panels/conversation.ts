// Conversation view: the selected path's events in order, italicized stage
// directions, optional blockquoted thoughts, a path selector for switching
// branches, and the advance control.

import { clear, el } from "../dom.js";
import { leafHeads, nodesById, pathToRoot, renderNode } from "../model.js";
import type { CharacterDoc, NodeDoc } from "../types.js";

export interface ConversationDeps {
  advance(): Promise<void>;
  switchPath(nodeId: string): void;
}

export class ConversationView {
  readonly root: HTMLElement;
  private deps: ConversationDeps;
  private nodes: NodeDoc[] = [];
  private cast: CharacterDoc[] = [];
  private selected: string | null = null;
  private thoughtsVisible = false;
  private pending = false;

  constructor(deps: ConversationDeps) {
    this.deps = deps;
    this.root = el("section", { id: "conversation", class: "panel" });
    this.render();
  }

  setData(nodes: NodeDoc[], cast: CharacterDoc[], selected: string | null): void {
    this.nodes = nodes;
    this.cast = cast;
    this.selected = selected;
    this.render();
  }

  setThoughtsVisible(visible: boolean): void {
    this.thoughtsVisible = visible;
    this.render();
  }

  setPending(pending: boolean): void {
    this.pending = pending;
    this.render();
  }

  render(): void {
    clear(this.root);
    this.root.append(el("h2", {}, "Observe"));
    const feed = el("div", { id: "transcript", class: "feed" });
    if (this.selected) {
      const byId = nodesById(this.nodes);
      for (const node of pathToRoot(byId, this.selected)) {
        const rendered = renderNode(node, this.cast);
        if (!rendered) continue;
        const entry = el("div", { class: `event ${rendered.kind}`, "data-node": rendered.nodeId });
        if (rendered.italic) {
          entry.append(el("em", { class: "stage-direction" }, rendered.text));
        } else {
          entry.append(el("span", { class: "speech" }, rendered.text));
          if (rendered.action) {
            entry.append(" ");
            entry.append(el("em", { class: "action" }, rendered.action));
          }
        }
        if (this.thoughtsVisible && rendered.thought) {
          entry.append(el("blockquote", { class: "thought" }, rendered.thought));
        }
        feed.append(entry);
      }
    }
    this.root.append(feed);

    const advanceButton = el(
      "button",
      { id: "advance", disabled: this.pending || !this.selected, onclick: () => void this.deps.advance() },
      this.pending ? "Generating…" : "Advance",
    );
    const controls = el("div", { class: "controls" }, advanceButton);
    if (this.pending) {
      controls.append(el("span", { id: "pending", class: "muted" }, "a character is speaking"));
    }
    this.root.append(controls);

    // path selector: one button per leaf head, at the bottom of the panel
    const selector = el("div", { id: "path-selector", class: "path-selector" });
    const leaves = leafHeads(this.nodes);
    leaves.forEach((leaf, index) => {
      const onPath = this.selected !== null &&
        pathToRoot(nodesById(this.nodes), this.selected).some((n) => n.id === leaf.id);
      selector.append(
        el("button", {
          class: onPath ? "path active" : "path",
          "data-leaf": leaf.id,
          onclick: () => this.deps.switchPath(leaf.id),
        }, `Path ${index + 1}`),
      );
    });
    this.root.append(selector);
  }
}
