// JSON shapes exchanged with the session service (documented API only).

export interface WorldDoc {
  setting: string;
  tone: string;
  genre: string;
}

export interface CharacterDoc {
  id: string;
  name: string;
  personality: string;
  goals: string[];
  flaws: string[];
  relationships: Record<string, string>;
  secrets: string[];
}

export interface ParamsDoc {
  window_size: number;
  promotion_threshold: number;
  recall_k: number;
  scheduler_policy: "round_robin" | "director";
  novelty_window: number;
  novelty_floor: number;
}

export interface ScenarioDoc {
  world: WorldDoc;
  characters: CharacterDoc[];
  params: ParamsDoc;
}

export type NodeKind = "scene_setup" | "dialogue" | "stage_direction" | "reshape";

export interface NodeDoc {
  id: string;
  parent: string | null;
  kind: NodeKind;
  created_at: number;
  payload: Record<string, unknown>;
}

export interface SessionSummary {
  id: string;
  active_head: string;
  node_count: number;
  characters: string[];
  setting: string;
}

export interface SessionDoc {
  id: string;
  seed: number;
  active_head: string;
  scenario: ScenarioDoc;
  nodes: NodeDoc[];
}

export interface TranscriptEntryDoc {
  node_id: string;
  rendered: string;
  thought: string | null;
}

export interface MemoryDoc {
  owner: string;
  working: { source_node: string; kind: string; speaker: string | null; text: string }[];
  long_term: { content: string; score: number; source_node: string; tags: string[]; acquired_at: number }[];
  understanding: Record<string, string>;
}

export interface StateDoc {
  node: string;
  effective_scenario: ScenarioDoc;
  memories: Record<string, MemoryDoc>;
  transcript: TranscriptEntryDoc[];
  last_speaker: string | null;
}

export interface CompareDoc {
  shared_prefix: NodeDoc[];
  suffix_a: NodeDoc[];
  suffix_b: NodeDoc[];
}

export interface HintDoc {
  at_node: string;
  novelty: number;
  consecutive_low: number;
}

export type StreamEvent =
  | { kind: "snapshot"; payload: { session_id: string; active_head: string; node_count: number } }
  | { kind: "node_added"; payload: { node: NodeDoc } }
  | { kind: "head_changed"; payload: { active_head: string } }
  | { kind: "hint"; payload: HintDoc }
  | { kind: "error"; payload: { error: string } };

export interface UiViewState {
  sessionId: string | null;
  selectedNode: string | null;
  comparePair: [string, string] | null;
  thoughtsVisible: boolean;
  pendingGeneration: boolean;
}
