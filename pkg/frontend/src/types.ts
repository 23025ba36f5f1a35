/**
 * JSON contracts of the audit service.
 *
 * Log-domain numbers travel as decimal strings so values survive the
 * round-trip without float drift; progress fields are plain numbers in
 * [0, 1] and are consumed as-is.
 */

export type SessionStatus = "running" | "certified" | "full_hand_count";

export interface FrontierNode {
  suffix: string[];
  log_i: string;
  score_log: string;
  watch_size: number;
  progress: number;
}

export interface DrawEvent {
  draw: number;
  ranking: string[];
}

export interface SessionView {
  id: string;
  status: SessionStatus;
  contest_name: string;
  candidates: string[];
  reported_winner: string;
  total_cards: number;
  ballots_accepted: number;
  alpha: number;
  config: Record<string, unknown>;
  frontier: FrontierNode[];
  frontier_size: number;
  events: DrawEvent[];
}

export interface ExpandedEntry {
  suffix: string[];
  children: number;
}

export interface DrawReportPayload {
  draw: number;
  status: SessionStatus;
  frontier_size: number;
  min_log_i: string;
  max_log_i: string;
  min_progress: number;
  pruned: string[][];
  expanded: ExpandedEntry[];
  abandoned: string[];
  active_requirements: number;
  store_entries: number;
}

export interface SubmitResponse {
  report: DrawReportPayload;
  session: SessionView;
}

export interface CreateSessionBody {
  contest: unknown;
  reported_winner?: string;
  config?: Record<string, unknown>;
}

/** Thrown by the client when the service answers with an error body. */
export class ServiceError extends Error {
  readonly code: string;
  readonly status: number;

  constructor(status: number, code: string, detail: string) {
    super(detail);
    this.name = "ServiceError";
    this.status = status;
    this.code = code;
  }
}

/** The operations the console needs; implemented over HTTP or in tests. */
export interface ServiceClient {
  createSession(body: CreateSessionBody): Promise<SessionView>;
  getSession(id: string): Promise<SessionView>;
  submitBallot(id: string, ranking: string[]): Promise<SubmitResponse>;
  escalate(id: string): Promise<SessionView>;
}
