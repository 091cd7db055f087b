/** Thin typed client over the annotation HTTP API. */

import type {
  ErrorDetail,
  FailureReport,
  QueueResponse,
  SceneSummary,
  SuccessReport,
  VoteAck,
  VotePayload,
} from "./model";

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private baseUrl: string = "",
    private fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(this.baseUrl + path, init);
    const body = await response.json().catch(() => null);
    if (!response.ok) {
      const detail = (body && (body as { detail?: ErrorDetail }).detail) || null;
      throw new ApiError(
        response.status,
        detail?.code ?? "unknown_error",
        detail?.message ?? `request failed with status ${response.status}`,
      );
    }
    return body as T;
  }

  scenes(): Promise<SceneSummary[]> {
    return this.request("/api/scenes");
  }

  queue(annotator: string): Promise<QueueResponse> {
    return this.request(`/api/annotations/queue?annotator=${encodeURIComponent(annotator)}`);
  }

  submitVote(vote: VotePayload): Promise<VoteAck> {
    return this.request("/api/annotations", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(vote),
    });
  }

  successReport(): Promise<SuccessReport> {
    return this.request("/api/reports/success");
  }

  failureReport(): Promise<FailureReport> {
    return this.request("/api/reports/failures");
  }
}
