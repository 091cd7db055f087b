/** Annotator-side state machine: queue position, vote form rules, submission. */

import { ApiClient, ApiError } from "./api";
import type { FailureType, QueueItem, Verdict } from "./model";

export type SubmitResult =
  | { ok: true; votes: number }
  | { ok: false; code: string; message: string };

export class AnnotationSession {
  items: QueueItem[] = [];
  verdict: Verdict | null = null;
  failureType: FailureType | null = null;

  constructor(
    private api: ApiClient,
    public annotator: string,
  ) {}

  async refresh(): Promise<void> {
    const queue = await this.api.queue(this.annotator);
    this.items = queue.items;
    this.clearForm();
  }

  current(): QueueItem | null {
    return this.items.length > 0 ? this.items[0] : null;
  }

  pending(): number {
    return this.items.length;
  }

  clearForm(): void {
    this.verdict = null;
    this.failureType = null;
  }

  selectVerdict(verdict: Verdict): void {
    this.verdict = verdict;
    if (verdict !== "Failure") {
      // the failure-type control only applies to Failure votes
      this.failureType = null;
    }
  }

  selectFailureType(failureType: FailureType): void {
    if (this.verdict === "Failure") {
      this.failureType = failureType;
    }
  }

  failureTypeEnabled(): boolean {
    return this.verdict === "Failure";
  }

  canSubmit(): boolean {
    if (this.current() === null || this.verdict === null) return false;
    return this.verdict === "Success" || this.failureType !== null;
  }

  /**
   * Submit the current form. On success (and on a duplicate or full-item
   * rejection) the queue is refreshed so the item list stays accurate.
   */
  async submit(): Promise<SubmitResult> {
    const item = this.current();
    if (item === null || !this.canSubmit()) {
      return { ok: false, code: "form_incomplete", message: "pick a verdict first" };
    }
    try {
      const ack = await this.api.submitVote({
        item_id: item.item_id,
        annotator_id: this.annotator,
        verdict: this.verdict as Verdict,
        failure_type: this.failureType,
      });
      await this.refresh();
      return { ok: true, votes: ack.votes };
    } catch (err) {
      if (err instanceof ApiError) {
        if (err.status === 409) {
          await this.refresh();
        }
        return { ok: false, code: err.code, message: err.message };
      }
      throw err;
    }
  }
}
