/** Rendering helpers for the live report panels. */

import type { FailureReport, SuccessReport } from "./model";

export function formatRate(rate: number): string {
  return rate.toFixed(2) + "%";
}

export interface TableView {
  header: string[];
  rows: string[][];
  footer: string;
}

export function successTableView(report: SuccessReport): TableView {
  const header = ["Room", "Successes", "Items", "Rate"];
  if (report.table === null) {
    return { header, rows: [], footer: "no decided items yet" };
  }
  const rows = report.table.rows.map((row) => [
    row.room_type,
    String(row.successes),
    String(row.total),
    formatRate(row.rate),
  ]);
  const progress = `${report.decided_items}/${report.total_items} items decided`;
  const macro = `macro average ${formatRate(report.table.macro_average)}`;
  return {
    header,
    rows,
    footer: report.incomplete ? `${macro} (${progress}, partial)` : `${macro} (${progress})`,
  };
}

export function failureSharesView(report: FailureReport): string[] {
  if (!report.decided || report.shares === null) {
    return ["no decided items yet"];
  }
  return Object.entries(report.shares).map(([kind, share]) => `${kind}: ${formatRate(share)}`);
}
