// Thin typed client for the session service. Only documented endpoints;
// all state of record stays server-side.

import type { CompareDoc, NodeDoc, ScenarioDoc, SessionDoc, SessionSummary, StateDoc } from "./types.js";

export class ApiError extends Error {
  status: number;
  violations: string[];

  constructor(status: number, message: string, violations: string[] = []) {
    super(message);
    this.status = status;
    this.violations = violations;
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class LoomApi {
  private base: string;
  private fetchImpl: FetchLike;

  constructor(base = "", fetchImpl: FetchLike = (...args) => fetch(...args)) {
    this.base = base.replace(/\/$/, "");
    this.fetchImpl = fetchImpl;
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: { "Content-Type": "application/json" } };
    if (body !== undefined) {
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchImpl(this.base + path, init);
    if (!response.ok) {
      let message = `${response.status}`;
      let violations: string[] = [];
      try {
        const data = await response.json();
        message = data.error ?? message;
        violations = data.violations ?? [];
      } catch {
        // non-JSON error body: keep the status text
      }
      throw new ApiError(response.status, message, violations);
    }
    return (await response.json()) as T;
  }

  createSession(scenario: ScenarioDoc, seed = 0): Promise<{ session_id: string }> {
    return this.request("POST", "/api/sessions", { scenario, seed });
  }

  listSessions(): Promise<{ sessions: SessionSummary[] }> {
    return this.request("GET", "/api/sessions");
  }

  getSession(sessionId: string): Promise<SessionDoc> {
    return this.request("GET", `/api/sessions/${sessionId}`);
  }

  advance(sessionId: string, nodeId: string, speaker?: string): Promise<{ node: NodeDoc }> {
    return this.request("POST", `/api/sessions/${sessionId}/nodes/${nodeId}/advance`,
      speaker ? { speaker } : {});
  }

  stir(sessionId: string, nodeId: string, text: string): Promise<{ node: NodeDoc }> {
    return this.request("POST", `/api/sessions/${sessionId}/nodes/${nodeId}/stir`, { text });
  }

  shape(sessionId: string, nodeId: string, scenario: ScenarioDoc): Promise<{ node: NodeDoc }> {
    return this.request("POST", `/api/sessions/${sessionId}/nodes/${nodeId}/shape`, { scenario });
  }

  select(sessionId: string, nodeId: string): Promise<{ ok: boolean; active_head: string }> {
    return this.request("POST", `/api/sessions/${sessionId}/select`, { node: nodeId });
  }

  compare(sessionId: string, a: string, b: string): Promise<CompareDoc> {
    return this.request("GET",
      `/api/sessions/${sessionId}/compare?a=${encodeURIComponent(a)}&b=${encodeURIComponent(b)}`);
  }

  state(sessionId: string, nodeId?: string): Promise<StateDoc> {
    const suffix = nodeId ? `?node=${encodeURIComponent(nodeId)}` : "";
    return this.request("GET", `/api/sessions/${sessionId}/state${suffix}`);
  }

  streamUrl(sessionId: string): string {
    return `${this.base}/api/sessions/${sessionId}/stream`;
  }

  transcriptUrl(sessionId: string, nodeId: string, thoughts: boolean): string {
    return `${this.base}/api/sessions/${sessionId}/transcript` +
      `?node=${encodeURIComponent(nodeId)}&thoughts=${thoughts}`;
  }
}
