import {
  CreateSessionBody,
  ServiceClient,
  ServiceError,
  SessionView,
  SubmitResponse,
} from "./types.js";

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

async function decode<T>(res: Response): Promise<T> {
  let body: unknown = null;
  try {
    body = await res.json();
  } catch {
    // fall through to the status-only error below
  }
  if (!res.ok) {
    const err = (body ?? {}) as { error?: string; detail?: string };
    throw new ServiceError(
      res.status,
      err.error ?? "http_error",
      err.detail ?? `service answered ${res.status}`,
    );
  }
  return body as T;
}

/** Typed fetch wrapper over the audit service endpoints. */
export class HttpClient implements ServiceClient {
  private readonly base: string;
  private readonly fetchFn: FetchLike;

  constructor(baseUrl = "", fetchFn: FetchLike = (i, init) => fetch(i, init)) {
    this.base = baseUrl.replace(/\/$/, "");
    this.fetchFn = fetchFn;
  }

  private post<T>(path: string, body?: unknown): Promise<T> {
    return this.fetchFn(this.base + path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: body === undefined ? "{}" : JSON.stringify(body),
    }).then((res) => decode<T>(res));
  }

  createSession(body: CreateSessionBody): Promise<SessionView> {
    return this.post("/sessions", body);
  }

  getSession(id: string): Promise<SessionView> {
    return this.fetchFn(`${this.base}/sessions/${encodeURIComponent(id)}`).then(
      (res) => decode<SessionView>(res),
    );
  }

  submitBallot(id: string, ranking: string[]): Promise<SubmitResponse> {
    return this.post(`/sessions/${encodeURIComponent(id)}/ballots`, { ranking });
  }

  escalate(id: string): Promise<SessionView> {
    return this.post(`/sessions/${encodeURIComponent(id)}/escalate`);
  }
}
