/** Browser entry point: binds the annotation session to the static page. */

import { ApiClient } from "./api";
import { AnnotationSession } from "./session";
import { failureSharesView, successTableView } from "./table";
import type { FailureType, Verdict } from "./model";

const api = new ApiClient("");
let session: AnnotationSession | null = null;

// DOM elements
const annotatorInput = document.getElementById("annotator-id") as HTMLInputElement;
const startBtn = document.getElementById("start-session") as HTMLButtonElement;
const pendingCount = document.getElementById("pending-count")!;
const itemPanel = document.getElementById("item-panel")!;
const itemRoom = document.getElementById("item-room")!;
const itemInstruction = document.getElementById("item-instruction")!;
const itemObjects = document.getElementById("item-objects")!;
const itemSteps = document.getElementById("item-steps")!;
const verdictSuccess = document.getElementById("verdict-success") as HTMLInputElement;
const verdictFailure = document.getElementById("verdict-failure") as HTMLInputElement;
const failureTypeSelect = document.getElementById("failure-type") as HTMLSelectElement;
const submitBtn = document.getElementById("submit-vote") as HTMLButtonElement;
const statusLine = document.getElementById("status-line")!;
const successTable = document.getElementById("success-table") as HTMLTableElement;
const failureShares = document.getElementById("failure-shares")!;

function setStatus(text: string) {
  statusLine.textContent = text;
}

function renderItem() {
  if (!session) return;
  const item = session.current();
  if (item === null) {
    itemPanel.hidden = true;
    setStatus("queue empty: nothing left to annotate");
  } else {
    itemPanel.hidden = false;
    itemRoom.textContent = item.room_type;
    itemInstruction.textContent = item.instruction;
    itemObjects.textContent = "[" + item.object_list.join(", ") + "]";
    itemSteps.innerHTML = "";
    for (const step of item.steps) {
      const li = document.createElement("li");
      li.textContent = step;
      itemSteps.appendChild(li);
    }
  }
  pendingCount.textContent = String(session.pending());
  syncForm();
}

function syncForm() {
  if (!session) return;
  verdictSuccess.checked = session.verdict === "Success";
  verdictFailure.checked = session.verdict === "Failure";
  failureTypeSelect.disabled = !session.failureTypeEnabled();
  if (!session.failureTypeEnabled()) {
    failureTypeSelect.value = "";
  }
  submitBtn.disabled = !session.canSubmit();
}

async function renderReports() {
  const success = await api.successReport();
  const view = successTableView(success);
  successTable.innerHTML = "";
  const head = successTable.createTHead().insertRow();
  for (const cell of view.header) {
    const th = document.createElement("th");
    th.textContent = cell;
    head.appendChild(th);
  }
  const body = successTable.createTBody();
  for (const row of view.rows) {
    const tr = body.insertRow();
    for (const cell of row) {
      tr.insertCell().textContent = cell;
    }
  }
  const foot = successTable.createTFoot().insertRow().insertCell();
  foot.colSpan = view.header.length;
  foot.textContent = view.footer;

  const failures = await api.failureReport();
  failureShares.innerHTML = "";
  for (const line of failureSharesView(failures)) {
    const li = document.createElement("li");
    li.textContent = line;
    failureShares.appendChild(li);
  }
}

async function startSession() {
  const annotator = annotatorInput.value.trim();
  if (!annotator) {
    setStatus("enter an annotator id first");
    return;
  }
  session = new AnnotationSession(api, annotator);
  await session.refresh();
  setStatus(`annotating as ${annotator}`);
  renderItem();
  await renderReports();
}

async function submitVote() {
  if (!session) return;
  const result = await session.submit();
  if (result.ok) {
    setStatus(`vote recorded (${result.votes} so far on that item)`);
  } else {
    setStatus(`vote rejected: ${result.message}`);
  }
  renderItem();
  await renderReports();
}

startBtn.addEventListener("click", () => void startSession());
submitBtn.addEventListener("click", () => void submitVote());
verdictSuccess.addEventListener("change", () => {
  session?.selectVerdict("Success" as Verdict);
  syncForm();
});
verdictFailure.addEventListener("change", () => {
  session?.selectVerdict("Failure" as Verdict);
  syncForm();
});
failureTypeSelect.addEventListener("change", () => {
  if (failureTypeSelect.value) {
    session?.selectFailureType(failureTypeSelect.value as FailureType);
  }
  syncForm();
});
