// Stir bar: one text input that injects a stage direction at the selected
// node. Empty input keeps the button disabled; the event itself arrives
// back through the stream.

import { el } from "../dom.js";

export class StirBar {
  readonly root: HTMLElement;
  private input: HTMLInputElement;
  private button: HTMLButtonElement;

  constructor(submit: (text: string) => Promise<void>) {
    this.input = el("input", {
      id: "stir-input",
      type: "text",
      placeholder: "Stir the world: “The power goes out”",
    }) as HTMLInputElement;
    this.button = el("button", { id: "stir-submit", disabled: true }, "Stir") as HTMLButtonElement;

    this.input.addEventListener("input", () => {
      this.button.disabled = this.input.value.trim().length === 0;
    });
    const fire = async () => {
      const text = this.input.value.trim();
      if (!text) return;
      await submit(text);
      this.input.value = "";
      this.button.disabled = true;
    };
    this.button.addEventListener("click", () => void fire());
    this.input.addEventListener("keydown", (event) => {
      if ((event as KeyboardEvent).key === "Enter") void fire();
    });

    this.root = el("div", { id: "stir-bar" }, this.input, this.button);
  }
}
