// Tiny observable store for the view state plus the session documents the
// panels render from. The server owns the state of record; this is a cache.

import type { NodeDoc, ScenarioDoc, StateDoc, UiViewState } from "./types.js";

export interface AppState {
  view: UiViewState;
  nodes: NodeDoc[];
  activeHead: string | null;
  /** Derived state of the selected node, as served by GET /state. */
  nodeState: StateDoc | null;
  rootScenario: ScenarioDoc | null;
  hint: string | null;
  error: string | null;
}

export function initialState(): AppState {
  return {
    view: {
      sessionId: null,
      selectedNode: null,
      comparePair: null,
      thoughtsVisible: false,
      pendingGeneration: false,
    },
    nodes: [],
    activeHead: null,
    nodeState: null,
    rootScenario: null,
    hint: null,
    error: null,
  };
}

export class Store {
  private state: AppState = initialState();
  private listeners: ((state: AppState) => void)[] = [];

  get(): AppState {
    return this.state;
  }

  update(patch: Partial<AppState>): void {
    this.state = { ...this.state, ...patch };
    for (const listener of this.listeners) {
      listener(this.state);
    }
  }

  updateView(patch: Partial<UiViewState>): void {
    this.update({ view: { ...this.state.view, ...patch } });
  }

  subscribe(listener: (state: AppState) => void): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }
}
