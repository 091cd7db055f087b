/** Payload shapes of the annotation HTTP API. */

export type Verdict = "Success" | "Failure";
export type FailureType = "Hallucination" | "Counterfactual";

export interface SceneSummary {
  id: string;
  room_type: string;
  object_count: number;
  obstacle_count: number;
}

export interface QueueItem {
  item_id: string;
  room_type: string;
  instruction: string;
  steps: string[];
  object_list: string[];
  auto_hint: string | null;
}

export interface QueueResponse {
  annotator: string;
  pending: number;
  items: QueueItem[];
}

export interface VotePayload {
  item_id: string;
  annotator_id: string;
  verdict: Verdict;
  failure_type?: FailureType | null;
}

export interface VoteAck {
  status: "recorded";
  item_id: string;
  votes: number;
}

export interface SuccessRow {
  room_type: string;
  successes: number;
  total: number;
  rate: number;
}

export interface SuccessTableRecord {
  rows: SuccessRow[];
  macro_average: number;
  missing_room_types: string[];
}

export interface SuccessReport {
  source: "auto" | "votes";
  incomplete: boolean;
  decided_items: number;
  total_items: number;
  table: SuccessTableRecord | null;
}

export interface FailureReport {
  shares: Record<string, number> | null;
  decided: boolean;
}

/** Error envelope used by every non-2xx response. */
export interface ErrorDetail {
  code: string;
  message: string;
}
