import { DrawReportPayload, FrontierNode, SessionStatus, SessionView } from "./types.js";

/** The frontier panel never renders more rows than this. */
export const FRONTIER_ROW_CAP = 200;

export interface Banner {
  label: string;
  cssClass: "banner-running" | "banner-certified" | "banner-full-count";
}

export function bannerFor(status: SessionStatus, reportedWinner: string): Banner {
  switch (status) {
    case "running":
      return { label: "Audit in progress", cssClass: "banner-running" };
    case "certified":
      return {
        label: `Certified: ${reportedWinner} won`,
        cssClass: "banner-certified",
      };
    case "full_hand_count":
      return {
        label: "Escalated to a full hand count",
        cssClass: "banner-full-count",
      };
  }
}

export interface FrontierTable {
  visible: FrontierNode[];
  /** Nodes beyond the row cap, summarized as "N more nodes". */
  hidden: number;
}

export function frontierTable(
  nodes: FrontierNode[],
  cap: number = FRONTIER_ROW_CAP,
): FrontierTable {
  const sorted = [...nodes].sort((a, b) => b.progress - a.progress);
  return { visible: sorted.slice(0, cap), hidden: Math.max(0, sorted.length - cap) };
}

/** A suffix pins the tail of the elimination order; the head is open. */
export function suffixLabel(suffix: string[]): string {
  return ["…", ...suffix].join(" > ");
}

export function progressPercent(progress: number): string {
  const clamped = Math.min(1, Math.max(0, progress));
  return `${(clamped * 100).toFixed(1)}%`;
}

export type ParsedRanking = { ranking: string[] } | { error: string };

/**
 * Parse a comma-separated ranking against the candidate list. A blank
 * input is a valid empty ranking (a card showing no preference).
 */
export function parseRanking(text: string, candidates: string[]): ParsedRanking {
  const known = new Set(candidates);
  const ranking = text
    .split(",")
    .map((part) => part.trim())
    .filter((part) => part.length > 0);
  const seen = new Set<string>();
  for (const label of ranking) {
    if (!known.has(label)) {
      return { error: `unknown candidate "${label}"` };
    }
    if (seen.has(label)) {
      return { error: `"${label}" appears twice` };
    }
    seen.add(label);
  }
  return { ranking };
}

export function describeReport(report: DrawReportPayload): string {
  const changes: string[] = [];
  if (report.pruned.length > 0) {
    changes.push(`pruned ${report.pruned.length}`);
  }
  const children = report.expanded.reduce((n, e) => n + e.children, 0);
  if (report.expanded.length > 0) {
    changes.push(`expanded ${report.expanded.length} into ${children}`);
  }
  if (report.abandoned.length > 0) {
    changes.push(`abandoned ${report.abandoned.length} requirements`);
  }
  const tail = changes.length > 0 ? changes.join(", ") : "no frontier changes";
  return `draw ${report.draw}: ${tail}`;
}

export function ballotsLine(view: SessionView): string {
  return `${view.ballots_accepted} of ${view.total_cards} cards drawn`;
}
