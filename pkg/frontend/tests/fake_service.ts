// In-memory stand-in for the session service, faithful to the endpoint
// behaviors the studio depends on: implicit forking, nested-compare 409,
// scenario validation 400, head movement, and stream events.

import type { EventSourceLike } from "../src/stream.js";
import type { CompareDoc, NodeDoc, ScenarioDoc, StateDoc } from "../src/types.js";

interface FakeSession {
  id: string;
  activeHead: string;
  nodes: NodeDoc[];
  /** effective scenario snapshot per node (reshape swaps it) */
  effective: Map<string, ScenarioDoc>;
  seq: number;
}

export class FakeEventSource implements EventSourceLike {
  listeners = new Map<string, ((event: MessageEvent) => void)[]>();
  onerror: ((event: unknown) => void) | null = null;
  closed = false;

  addEventListener(type: string, listener: (event: MessageEvent) => void): void {
    const existing = this.listeners.get(type) ?? [];
    existing.push(listener);
    this.listeners.set(type, existing);
  }

  close(): void {
    this.closed = true;
  }

  emit(type: string, payload: unknown): void {
    for (const listener of this.listeners.get(type) ?? []) {
      listener({ data: JSON.stringify(payload) } as MessageEvent);
    }
  }

  fail(): void {
    this.onerror?.({});
  }
}

function clone<T>(value: T): T {
  return JSON.parse(JSON.stringify(value)) as T;
}

export class FakeService {
  sessions = new Map<string, FakeSession>();
  streams: FakeEventSource[] = [];
  requests: { method: string; path: string; body: unknown }[] = [];
  private speeches = ["We should talk.", "Not here.", "Then where?", "You know where."];
  private speechCursor = 0;

  validate(scenario: ScenarioDoc): string[] {
    const violations: string[] = [];
    if (!scenario.world.setting.trim()) violations.push("world.setting: must be non-empty");
    if (scenario.characters.length < 2) {
      violations.push(`characters: need >= 2, got ${scenario.characters.length}`);
    }
    const ids = new Set(scenario.characters.map((c) => c.id));
    scenario.characters.forEach((character, index) => {
      if (!character.name.trim()) violations.push(`characters[${index}].name: must be non-empty`);
      for (const other of Object.keys(character.relationships)) {
        if (!ids.has(other)) {
          violations.push(
            `characters[${index}].relationships.${other}: unknown character id '${other}'`);
        }
      }
    });
    return violations;
  }

  private emit(kind: string, payload: unknown): void {
    for (const stream of this.streams) {
      if (!stream.closed) stream.emit(kind, payload);
    }
  }

  private appendNode(session: FakeSession, parent: string, kind: NodeDoc["kind"],
                     payload: Record<string, unknown>): NodeDoc {
    const node: NodeDoc = {
      id: `n${String(session.seq).padStart(6, "0")}`,
      parent,
      kind,
      created_at: session.seq,
      payload,
    };
    session.seq += 1;
    session.nodes.push(node);
    session.effective.set(node.id,
      kind === "reshape"
        ? (payload.new_scenario as ScenarioDoc)
        : session.effective.get(parent)!);
    session.activeHead = node.id;
    this.emit("node_added", { node: clone(node) });
    this.emit("head_changed", { active_head: node.id });
    return node;
  }

  eventSourceFactory = (_url: string): FakeEventSource => {
    const stream = new FakeEventSource();
    this.streams.push(stream);
    const session = [...this.sessions.values()][0];
    queueMicrotask(() => {
      if (session) {
        stream.emit("snapshot", {
          session_id: session.id,
          active_head: session.activeHead,
          node_count: session.nodes.length,
        });
      }
    });
    return stream;
  };

  fetch = async (input: string, init?: RequestInit): Promise<Response> => {
    const method = init?.method ?? "GET";
    const url = new URL(input, "http://fake");
    const path = url.pathname;
    const body = init?.body ? JSON.parse(init.body as string) : undefined;
    this.requests.push({ method, path, body });

    const json = (status: number, data: unknown) =>
      new Response(JSON.stringify(data), {
        status,
        headers: { "Content-Type": "application/json" },
      });

    if (method === "POST" && path === "/api/sessions") {
      const scenario = body.scenario as ScenarioDoc;
      const violations = this.validate(scenario);
      if (violations.length) return json(400, { error: violations[0], violations });
      const id = `sess${this.sessions.size + 1}`;
      const root: NodeDoc = {
        id: "n000000", parent: null, kind: "scene_setup", created_at: 0,
        payload: { scenario: clone(scenario) },
      };
      const session: FakeSession = {
        id, activeHead: root.id, nodes: [root],
        effective: new Map([[root.id, clone(scenario)]]), seq: 1,
      };
      this.sessions.set(id, session);
      return json(200, { session_id: id });
    }

    if (method === "GET" && path === "/api/sessions") {
      return json(200, {
        sessions: [...this.sessions.values()].map((s) => ({
          id: s.id, active_head: s.activeHead, node_count: s.nodes.length,
          characters: s.effective.get("n000000")!.characters.map((c) => c.name),
          setting: s.effective.get("n000000")!.world.setting,
        })),
      });
    }

    const sessionMatch = path.match(/^\/api\/sessions\/([^/]+)/);
    if (!sessionMatch) return json(404, { error: "no route" });
    const session = this.sessions.get(sessionMatch[1]);
    if (!session) return json(404, { error: "unknown session" });
    const rest = path.slice(sessionMatch[0].length);

    if (method === "GET" && rest === "") {
      return json(200, {
        id: session.id, seed: 0, active_head: session.activeHead,
        scenario: clone(session.effective.get("n000000")!),
        nodes: clone(session.nodes),
      });
    }

    if (method === "GET" && rest === "/state") {
      const nodeId = url.searchParams.get("node") ?? session.activeHead;
      if (!session.nodes.some((n) => n.id === nodeId)) return json(404, { error: "unknown node" });
      const state: StateDoc = {
        node: nodeId,
        effective_scenario: clone(session.effective.get(nodeId)!),
        memories: {},
        transcript: [],
        last_speaker: null,
      };
      return json(200, state);
    }

    if (method === "GET" && rest === "/compare") {
      const a = url.searchParams.get("a")!;
      const b = url.searchParams.get("b")!;
      const pathOf = (id: string): NodeDoc[] => {
        const out: NodeDoc[] = [];
        let current: string | null = id;
        while (current) {
          const node = session.nodes.find((n) => n.id === current);
          if (!node) break;
          out.unshift(node);
          current = node.parent;
        }
        return out;
      };
      const pa = pathOf(a);
      const pb = pathOf(b);
      const idsA = new Set(pa.map((n) => n.id));
      const idsB = new Set(pb.map((n) => n.id));
      if (a === b || idsA.has(b) || idsB.has(a)) {
        return json(409, { error: "paths are nested" });
      }
      let cut = 0;
      while (cut < pa.length && cut < pb.length && pa[cut].id === pb[cut].id) cut += 1;
      const view: CompareDoc = {
        shared_prefix: clone(pa.slice(0, cut)),
        suffix_a: clone(pa.slice(cut)),
        suffix_b: clone(pb.slice(cut)),
      };
      return json(200, view);
    }

    if (method === "POST" && rest === "/select") {
      const nodeId = body.node as string;
      if (!session.nodes.some((n) => n.id === nodeId)) return json(404, { error: "unknown node" });
      session.activeHead = nodeId;
      this.emit("head_changed", { active_head: nodeId });
      return json(200, { ok: true, active_head: nodeId });
    }

    const nodeMatch = rest.match(/^\/nodes\/([^/]+)\/(advance|stir|shape)$/);
    if (method === "POST" && nodeMatch) {
      const [, at, op] = nodeMatch;
      if (!session.nodes.some((n) => n.id === at)) return json(404, { error: "unknown node" });
      if (op === "stir") {
        const text = (body.text as string) ?? "";
        if (!text.trim()) return json(409, { error: "stir text must be non-empty" });
        const node = this.appendNode(session, at, "stage_direction",
          { text, origin: "author_stir" });
        return json(200, { node: clone(node), active_head: session.activeHead });
      }
      if (op === "advance") {
        const cast = session.effective.get(at)!.characters;
        const speaker = cast[(session.seq - 1) % cast.length].id;
        const speech = this.speeches[this.speechCursor % this.speeches.length];
        this.speechCursor += 1;
        const node = this.appendNode(session, at, "dialogue",
          { speaker, speech, action: null, thought: `t-${session.seq}` });
        return json(200, { node: clone(node), active_head: session.activeHead });
      }
      const scenario = body.scenario as ScenarioDoc;
      const violations = this.validate(scenario);
      if (violations.length) return json(400, { error: violations[0], violations });
      if (JSON.stringify(scenario) === JSON.stringify(session.effective.get(at))) {
        return json(409, { error: "nothing changed" });
      }
      const node = this.appendNode(session, at, "reshape",
        { deltas: [], new_scenario: clone(scenario) });
      return json(200, { node: clone(node), active_head: session.activeHead });
    }

    return json(404, { error: `no route for ${method} ${path}` });
  };
}
