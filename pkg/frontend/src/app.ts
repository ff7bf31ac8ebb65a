// Studio wiring: one screen with the four panels (shape, conversation +
// stir bar, branch timeline) around a shared store, driven entirely by the
// session API and its event stream.

import { ApiError, LoomApi } from "./api.js";
import { clear, el } from "./dom.js";
import { Store } from "./store.js";
import { SessionStream, type EventSourceFactory } from "./stream.js";
import { ConversationView } from "./panels/conversation.js";
import { ShapePanel } from "./panels/shape_panel.js";
import { StirBar } from "./panels/stir_bar.js";
import { TimelinePanel } from "./panels/timeline.js";
import type { ScenarioDoc, StreamEvent } from "./types.js";

export function starterScenario(): ScenarioDoc {
  return {
    world: { setting: "A rain-locked roadside diner at 2am", tone: "uneasy", genre: "drama" },
    characters: [
      {
        id: "ada", name: "Ada", personality: "Talks first, regrets later.",
        goals: ["get the night shift to end"], flaws: ["cannot leave silence alone"],
        relationships: { ben: "knows him from somewhere" }, secrets: ["she recognized his car"],
      },
      {
        id: "ben", name: "Ben", personality: "Careful, friendly, evasive.",
        goals: ["stay unremembered"], flaws: ["overtips when nervous"],
        relationships: { ada: "the waitress keeps looking over" }, secrets: ["the trunk is not empty"],
      },
    ],
    params: {
      window_size: 5, promotion_threshold: 0.6, recall_k: 10,
      scheduler_policy: "round_robin", novelty_window: 6, novelty_floor: 0.35,
    },
  };
}

export class App {
  readonly store = new Store();
  private api: LoomApi;
  private streamFactory: EventSourceFactory | undefined;
  private stream: SessionStream | null = null;

  private shape: ShapePanel;
  private conversation: ConversationView;
  private stirBar: StirBar;
  private timeline: TimelinePanel;
  private banner: HTMLElement;
  private sessionSelect: HTMLSelectElement;

  constructor(root: HTMLElement, api: LoomApi, streamFactory?: EventSourceFactory) {
    this.api = api;
    this.streamFactory = streamFactory;

    this.shape = new ShapePanel({ submit: (scenario) => this.submitShape(scenario) });
    this.conversation = new ConversationView({
      advance: () => this.advance(),
      switchPath: (nodeId) => this.selectNode(nodeId),
    });
    this.stirBar = new StirBar((text) => this.stir(text));
    this.timeline = new TimelinePanel({
      selectNode: (nodeId) => this.selectNode(nodeId),
      compare: (a, b) => this.api.compare(this.sessionId(), a, b),
      develop: (nodeId) => this.develop(nodeId),
    });
    this.banner = el("div", { id: "banner", class: "banner hidden" });
    this.sessionSelect = el("select", { id: "session-select" }) as HTMLSelectElement;
    this.sessionSelect.addEventListener("change", () => {
      if (this.sessionSelect.value) void this.loadSession(this.sessionSelect.value);
    });

    const thoughtsToggle = el("label", { id: "thoughts-toggle", class: "toggle" });
    const checkbox = el("input", { type: "checkbox", id: "thoughts-checkbox" }) as HTMLInputElement;
    checkbox.addEventListener("change", () => {
      this.store.updateView({ thoughtsVisible: checkbox.checked });
      this.conversation.setThoughtsVisible(checkbox.checked);
    });
    thoughtsToggle.append("Thoughts ", checkbox);

    const header = el("header", {},
      el("h1", {}, "loom studio"),
      this.sessionSelect,
      el("button", { id: "new-session", onclick: () => void this.createSession() }, "New session"),
      thoughtsToggle,
    );

    const center = el("div", { id: "center-column" }, this.conversation.root, this.stirBar.root);
    clear(root);
    root.append(header, this.banner,
      el("main", {}, this.shape.root, center, this.timeline.root));
  }

  private sessionId(): string {
    const id = this.store.get().view.sessionId;
    if (!id) throw new Error("no session loaded");
    return id;
  }

  private showBanner(text: string, isError = false): void {
    this.banner.textContent = text;
    this.banner.className = isError ? "banner error" : "banner hint";
  }

  private clearBanner(): void {
    this.banner.className = "banner hidden";
    this.banner.textContent = "";
  }

  async refreshSessions(): Promise<void> {
    const { sessions } = await this.api.listSessions();
    clear(this.sessionSelect);
    this.sessionSelect.append(el("option", { value: "" }, "pick a session"));
    for (const summary of sessions) {
      this.sessionSelect.append(
        el("option", { value: summary.id }, `${summary.setting.slice(0, 32)} (${summary.id.slice(0, 6)})`),
      );
    }
  }

  async createSession(scenario?: ScenarioDoc): Promise<string> {
    const { session_id } = await this.api.createSession(scenario ?? starterScenario());
    await this.refreshSessions();
    this.sessionSelect.value = session_id;
    await this.loadSession(session_id);
    return session_id;
  }

  async loadSession(sessionId: string): Promise<void> {
    this.stream?.close();
    const session = await this.api.getSession(sessionId);
    this.store.update({
      nodes: session.nodes,
      activeHead: session.active_head,
      rootScenario: session.scenario,
      hint: null,
      error: null,
    });
    this.store.updateView({ sessionId, selectedNode: session.active_head, comparePair: null });
    await this.refreshState();

    this.stream = new SessionStream(this.api.streamUrl(sessionId), this.streamFactory);
    this.stream.onEvent = (event) => this.handleStreamEvent(event);
    this.stream.onReconnect = () => void this.resync();
    this.stream.connect();
  }

  /** After a reconnect the stream may have dropped events: refetch everything. */
  private async resync(): Promise<void> {
    const sessionId = this.store.get().view.sessionId;
    if (!sessionId) return;
    const session = await this.api.getSession(sessionId);
    this.store.update({ nodes: session.nodes, activeHead: session.active_head });
    await this.refreshState();
  }

  private handleStreamEvent(event: StreamEvent): void {
    const state = this.store.get();
    if (event.kind === "node_added") {
      const node = event.payload.node;
      if (state.nodes.some((n) => n.id === node.id)) return;
      this.store.update({ nodes: [...state.nodes, node] });
      if (node.parent === state.view.selectedNode) {
        // the author is working here: follow the new event
        this.store.updateView({ selectedNode: node.id });
        void this.refreshState();
      } else {
        this.renderAll();
      }
    } else if (event.kind === "head_changed") {
      this.store.update({ activeHead: event.payload.active_head });
      this.renderAll();
    } else if (event.kind === "hint") {
      const hint = event.payload;
      this.showBanner(
        `Novelty ${hint.novelty.toFixed(2)} for ${hint.consecutive_low} turns: consider a stir.`,
      );
    } else if (event.kind === "error") {
      this.showBanner(event.payload.error, true);
    }
  }

  private async refreshState(): Promise<void> {
    const { view } = this.store.get();
    if (!view.sessionId || !view.selectedNode) return;
    const nodeState = await this.api.state(view.sessionId, view.selectedNode);
    this.store.update({ nodeState });
    this.shape.setScenario(nodeState.effective_scenario);
    this.renderAll();
  }

  private renderAll(): void {
    const state = this.store.get();
    const cast = state.nodeState?.effective_scenario.characters ?? [];
    this.conversation.setData(state.nodes, cast, state.view.selectedNode);
    this.conversation.setThoughtsVisible(state.view.thoughtsVisible);
    this.timeline.setData(state.nodes, cast, state.activeHead, state.view.selectedNode);
  }

  selectNode(nodeId: string): void {
    this.store.updateView({ selectedNode: nodeId });
    void this.refreshState();
  }

  private async advance(): Promise<void> {
    const { view } = this.store.get();
    if (!view.selectedNode) return;
    this.store.updateView({ pendingGeneration: true });
    this.conversation.setPending(true);
    this.clearBanner();
    try {
      await this.api.advance(this.sessionId(), view.selectedNode);
    } catch (error) {
      this.showBanner((error as ApiError).message, true);
    } finally {
      this.store.updateView({ pendingGeneration: false });
      this.conversation.setPending(false);
    }
  }

  private async stir(text: string): Promise<void> {
    const { view } = this.store.get();
    if (!view.selectedNode) return;
    try {
      await this.api.stir(this.sessionId(), view.selectedNode, text);
      this.clearBanner();
    } catch (error) {
      this.showBanner((error as ApiError).message, true);
    }
  }

  private async submitShape(scenario: ScenarioDoc): Promise<void> {
    const { view } = this.store.get();
    if (!view.selectedNode) return;
    await this.api.shape(this.sessionId(), view.selectedNode, scenario);
    this.clearBanner();
  }

  private async develop(nodeId: string): Promise<void> {
    await this.api.select(this.sessionId(), nodeId);
    this.selectNode(nodeId);
  }
}

export async function createApp(
  root: HTMLElement,
  api: LoomApi,
  streamFactory?: EventSourceFactory,
): Promise<App> {
  const app = new App(root, api, streamFactory);
  await app.refreshSessions();
  return app;
}
