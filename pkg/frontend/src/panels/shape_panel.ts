// Shape panel: world fields plus expandable character cards. Edits live in
// an optimistic buffer; nothing is committed until the server accepts the
// reshape, and validation failures render inline on the offending card.

import { clear, el } from "../dom.js";
import { cloneScenario, formatList, parseList, scenariosEqual } from "../model.js";
import type { ApiError } from "../api.js";
import type { CharacterDoc, ScenarioDoc } from "../types.js";

export interface ShapePanelDeps {
  submit(scenario: ScenarioDoc): Promise<void>;
}

export class ShapePanel {
  readonly root: HTMLElement;
  private deps: ShapePanelDeps;
  private effective: ScenarioDoc | null = null;
  private buffer: ScenarioDoc | null = null;
  private expanded = new Set<string>();
  private violations: string[] = [];

  constructor(deps: ShapePanelDeps) {
    this.deps = deps;
    this.root = el("aside", { id: "shape-panel", class: "panel" });
    this.render();
  }

  setScenario(scenario: ScenarioDoc): void {
    this.effective = scenario;
    this.buffer = cloneScenario(scenario);
    this.violations = [];
    this.render();
  }

  private dirty(): boolean {
    return !!this.effective && !!this.buffer && !scenariosEqual(this.effective, this.buffer);
  }

  private violationsFor(index: number): string[] {
    return this.violations.filter((v) => v.startsWith(`characters[${index}]`));
  }

  private async submit(): Promise<void> {
    if (!this.buffer || !this.dirty()) return;
    try {
      await this.deps.submit(this.buffer);
      this.violations = [];
    } catch (error) {
      const apiError = error as ApiError;
      this.violations = apiError.violations?.length ? apiError.violations : [String(apiError.message)];
      this.render();
    }
  }

  private worldField(label: string, key: "setting" | "tone" | "genre"): HTMLElement {
    const input = el("input", { type: "text", "data-field": `world-${key}` }) as HTMLInputElement;
    input.value = this.buffer?.world[key] ?? "";
    input.addEventListener("input", () => {
      if (this.buffer) {
        this.buffer.world[key] = input.value;
        this.refreshSubmit();
      }
    });
    return el("label", { class: "field" }, label, input);
  }

  private listField(character: CharacterDoc, label: string, key: "goals" | "flaws" | "secrets"): HTMLElement {
    const area = el("textarea", { "data-field": `${character.id}-${key}`, rows: "2" } as never) as HTMLTextAreaElement;
    area.value = formatList(character[key]);
    area.addEventListener("input", () => {
      character[key] = parseList(area.value);
      this.refreshSubmit();
    });
    return el("label", { class: "field" }, label, area);
  }

  private characterCard(character: CharacterDoc, index: number): HTMLElement {
    const isOpen = this.expanded.has(character.id);
    const header = el(
      "button",
      {
        class: "card-header",
        "data-card": character.id,
        onclick: () => {
          if (isOpen) this.expanded.delete(character.id);
          else this.expanded.add(character.id);
          this.render();
        },
      },
      `${isOpen ? "▾" : "▸"} ${character.name}`,
    );
    const card = el("div", { class: "character-card", "data-character": character.id }, header);

    for (const violation of this.violationsFor(index)) {
      card.append(el("p", { class: "inline-error" }, violation));
    }
    if (!isOpen) return card;

    const body = el("div", { class: "card-body" });
    const nameInput = el("input", { type: "text", "data-field": `${character.id}-name` }) as HTMLInputElement;
    nameInput.value = character.name;
    nameInput.addEventListener("input", () => {
      character.name = nameInput.value;
      this.refreshSubmit();
    });
    body.append(el("label", { class: "field" }, "Name", nameInput));

    const personality = el("textarea", { rows: "2", "data-field": `${character.id}-personality` } as never) as HTMLTextAreaElement;
    personality.value = character.personality;
    personality.addEventListener("input", () => {
      character.personality = personality.value;
      this.refreshSubmit();
    });
    body.append(el("label", { class: "field" }, "Personality", personality));

    body.append(this.listField(character, "Goals", "goals"));
    body.append(this.listField(character, "Flaws", "flaws"));

    const relationships = el("div", { class: "field" }, "Relationships");
    for (const other of this.buffer!.characters.filter((c) => c.id !== character.id)) {
      const input = el("input", {
        type: "text",
        "data-field": `${character.id}-rel-${other.id}`,
        placeholder: `about ${other.name}`,
      }) as HTMLInputElement;
      input.value = character.relationships[other.id] ?? "";
      input.addEventListener("input", () => {
        if (input.value) character.relationships[other.id] = input.value;
        else delete character.relationships[other.id];
        this.refreshSubmit();
      });
      relationships.append(el("label", { class: "subfield" }, other.name, input));
    }
    body.append(relationships);

    body.append(this.listField(character, "Secrets", "secrets"));
    card.append(body);
    return card;
  }

  private refreshSubmit(): void {
    const button = this.root.querySelector<HTMLButtonElement>("#shape-submit");
    if (button) button.disabled = !this.dirty();
  }

  render(): void {
    clear(this.root);
    this.root.append(el("h2", {}, "Shape"));
    if (!this.buffer) {
      this.root.append(el("p", { class: "muted" }, "No session loaded."));
      return;
    }
    const panelErrors = this.violations.filter((v) => !v.startsWith("characters["));
    for (const violation of panelErrors) {
      this.root.append(el("p", { class: "inline-error" }, violation));
    }
    this.root.append(
      el("section", { class: "world-fields" },
        this.worldField("Setting", "setting"),
        this.worldField("Tone", "tone"),
        this.worldField("Genre", "genre")),
    );
    const cards = el("section", { class: "cards" });
    this.buffer.characters.forEach((character, index) => {
      cards.append(this.characterCard(character, index));
    });
    this.root.append(cards);
    this.root.append(
      el("button", {
        id: "shape-submit",
        disabled: !this.dirty(),
        onclick: () => void this.submit(),
      }, "Apply reshape"),
    );
  }
}
