/** Vote-form rules, checked against the session state machine alone. */

import { beforeEach, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api";
import { AnnotationSession } from "../src/session";
import { FakeAnnotationService, makeItems } from "./fake-service";

let service: FakeAnnotationService;
let session: AnnotationSession;

beforeEach(async () => {
  service = new FakeAnnotationService(makeItems(3));
  session = new AnnotationSession(new ApiClient("", service.fetch), "ann-1");
  await session.refresh();
});

describe("vote form rules", () => {
  it("starts with an empty form and the first queue item", () => {
    expect(session.current()?.item_id).toBe("scene-00/000");
    expect(session.verdict).toBeNull();
    expect(session.failureType).toBeNull();
    expect(session.canSubmit()).toBe(false);
    expect(session.failureTypeEnabled()).toBe(false);
  });

  it("enables the failure-type control only for Failure verdicts", () => {
    session.selectVerdict("Failure");
    expect(session.failureTypeEnabled()).toBe(true);
    expect(session.canSubmit()).toBe(false);

    session.selectFailureType("Hallucination");
    expect(session.canSubmit()).toBe(true);

    // switching back to Success clears the failure type
    session.selectVerdict("Success");
    expect(session.failureType).toBeNull();
    expect(session.failureTypeEnabled()).toBe(false);
    expect(session.canSubmit()).toBe(true);
  });

  it("ignores failure-type selection while the verdict is Success", () => {
    session.selectVerdict("Success");
    session.selectFailureType("Counterfactual");
    expect(session.failureType).toBeNull();
  });

  it("refuses to submit an incomplete form without calling the server", async () => {
    const result = await session.submit();
    expect(result).toEqual({
      ok: false,
      code: "form_incomplete",
      message: "pick a verdict first",
    });
    expect(service.voteLog.length).toBe(0);
  });

  it("clears the form and advances the queue after a recorded vote", async () => {
    session.selectVerdict("Failure");
    session.selectFailureType("Counterfactual");
    const result = await session.submit();
    expect(result).toEqual({ ok: true, votes: 1 });
    expect(session.verdict).toBeNull();
    expect(session.failureType).toBeNull();
    expect(session.current()?.item_id).toBe("scene-01/000");
    expect(service.voteLog).toEqual([
      {
        item_id: "scene-00/000",
        annotator_id: "ann-1",
        verdict: "Failure",
        failure_type: "Counterfactual",
      },
    ]);
  });

  it("drops a stale item and reports the conflict when the vote is a duplicate", async () => {
    // someone else's session already voted on our behalf
    service.vote({ item_id: "scene-00/000", annotator_id: "ann-1", verdict: "Success" });

    session.selectVerdict("Success");
    const result = await session.submit();
    expect(result).toMatchObject({ ok: false, code: "duplicate_vote" });
    // the 409 triggered a refresh, so the stale item is gone
    expect(session.current()?.item_id).toBe("scene-01/000");
    expect(session.pending()).toBe(2);
    expect(service.voteLog.length).toBe(1);
  });

  it("reports an empty queue as no current item", async () => {
    for (const item of makeItems(3)) {
      service.vote({ item_id: item.item_id, annotator_id: "ann-1", verdict: "Success" });
    }
    await session.refresh();
    expect(session.current()).toBeNull();
    expect(session.pending()).toBe(0);
    expect(session.canSubmit()).toBe(false);
  });
});
