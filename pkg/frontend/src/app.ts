import { ServiceClient, ServiceError, SessionView } from "./types.js";
import {
  ballotsLine,
  bannerFor,
  describeReport,
  frontierTable,
  parseRanking,
  progressPercent,
  suffixLabel,
} from "./view.js";

export interface ConsoleOptions {
  /** Called whenever the console attaches to a session id. */
  onSessionChange?: (id: string) => void;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

/**
 * One-operator audit console over a live session.
 *
 * The console owns its DOM subtree and talks to the service only through
 * the injected client. Ballot submission is serialized: while a request
 * is in flight the form is disabled and further submits are dropped.
 * After every accepted ballot the console re-polls the session with a
 * GET so the rendered state is always the service's, not a local guess.
 */
export class AuditConsole {
  readonly root: HTMLElement;
  view: SessionView | null = null;

  private readonly client: ServiceClient;
  private readonly opts: ConsoleOptions;
  private busy = false;

  private banner!: HTMLDivElement;
  private facts!: HTMLDivElement;
  private errorBox!: HTMLDivElement;
  private reportLine!: HTMLDivElement;
  private ballotInput!: HTMLInputElement;
  private submitBtn!: HTMLButtonElement;
  private escalateBtn!: HTMLButtonElement;
  private refreshBtn!: HTMLButtonElement;
  private frontierBody!: HTMLTableSectionElement;
  private frontierMore!: HTMLDivElement;
  private sessionSection!: HTMLElement;
  private contestInput!: HTMLTextAreaElement;
  private winnerInput!: HTMLInputElement;
  private alphaInput!: HTMLInputElement;
  private sessionIdInput!: HTMLInputElement;

  constructor(root: HTMLElement, client: ServiceClient, opts: ConsoleOptions = {}) {
    this.root = root;
    this.client = client;
    this.opts = opts;
    this.buildDom();
    this.render();
  }

  private buildDom(): void {
    const setup = el("section", "setup");
    this.contestInput = el("textarea", "contest-input");
    this.contestInput.placeholder = "contest JSON";
    this.winnerInput = el("input", "winner-input");
    this.winnerInput.placeholder = "reported winner (optional)";
    this.alphaInput = el("input", "alpha-input");
    this.alphaInput.placeholder = "risk limit (default 0.05)";
    const createBtn = el("button", "create-btn", "Create session");
    createBtn.addEventListener("click", () => void this.create());
    this.sessionIdInput = el("input", "session-id-input");
    this.sessionIdInput.placeholder = "existing session id";
    const loadBtn = el("button", "load-btn", "Load session");
    loadBtn.addEventListener("click", () => void this.load(this.sessionIdInput.value.trim()));
    setup.append(
      this.contestInput,
      this.winnerInput,
      this.alphaInput,
      createBtn,
      this.sessionIdInput,
      loadBtn,
    );

    this.sessionSection = el("section", "session");
    this.sessionSection.hidden = true;
    this.banner = el("div", "banner");
    this.facts = el("div", "facts");
    this.errorBox = el("div", "error");
    this.reportLine = el("div", "report-line");

    const form = el("form", "ballot-form");
    this.ballotInput = el("input", "ballot-input");
    this.ballotInput.placeholder = "ranking, e.g. Alpha, Bravo (blank for an empty card)";
    this.submitBtn = el("button", "submit-btn", "Submit ballot");
    this.submitBtn.type = "submit";
    form.append(this.ballotInput, this.submitBtn);
    form.addEventListener("submit", (ev) => {
      ev.preventDefault();
      void this.submit(this.ballotInput.value);
    });

    this.escalateBtn = el("button", "escalate-btn", "Escalate to full hand count");
    this.escalateBtn.addEventListener("click", () => void this.escalate());
    this.refreshBtn = el("button", "refresh-btn", "Refresh");
    this.refreshBtn.addEventListener("click", () => void this.refresh());

    const table = el("table", "frontier");
    const head = el("thead");
    const headRow = el("tr");
    for (const title of ["Order suffix", "Watched", "log evidence", "Progress"]) {
      headRow.append(el("th", undefined, title));
    }
    head.append(headRow);
    this.frontierBody = el("tbody");
    table.append(head, this.frontierBody);
    this.frontierMore = el("div", "frontier-more");

    this.sessionSection.append(
      this.banner,
      this.facts,
      form,
      this.escalateBtn,
      this.refreshBtn,
      this.reportLine,
      table,
      this.frontierMore,
    );
    this.root.append(setup, this.errorBox, this.sessionSection);
  }

  async create(): Promise<void> {
    let contest: unknown;
    try {
      contest = JSON.parse(this.contestInput.value);
    } catch {
      this.showError("contest is not valid JSON");
      return;
    }
    const winner = this.winnerInput.value.trim();
    const alphaText = this.alphaInput.value.trim();
    const config: Record<string, unknown> = {};
    if (alphaText) config.alpha = Number(alphaText);
    try {
      const view = await this.client.createSession({
        contest,
        ...(winner ? { reported_winner: winner } : {}),
        ...(alphaText ? { config } : {}),
      });
      this.attach(view);
    } catch (err) {
      this.showServiceError(err);
    }
  }

  async load(id: string): Promise<void> {
    if (!id) return;
    try {
      this.attach(await this.client.getSession(id));
    } catch (err) {
      this.showServiceError(err);
    }
  }

  async refresh(): Promise<void> {
    if (this.view) await this.load(this.view.id);
  }

  /** Returns true when a ballot was accepted by the service. */
  async submit(text: string): Promise<boolean> {
    const view = this.view;
    if (this.busy || !view || view.status !== "running") return false;
    const parsed = parseRanking(text, view.candidates);
    if ("error" in parsed) {
      this.showError(parsed.error);
      return false;
    }
    this.busy = true;
    this.render();
    try {
      const res = await this.client.submitBallot(view.id, parsed.ranking);
      this.reportLine.textContent = describeReport(res.report);
      // poll the session back rather than trusting the piggybacked view
      this.view = await this.client.getSession(view.id);
      this.errorBox.textContent = "";
      this.ballotInput.value = "";
      return true;
    } catch (err) {
      this.showServiceError(err);
      return false;
    } finally {
      this.busy = false;
      this.render();
    }
  }

  async escalate(): Promise<void> {
    if (this.busy || !this.view) return;
    try {
      this.view = await this.client.escalate(this.view.id);
      this.errorBox.textContent = "";
      this.render();
    } catch (err) {
      this.showServiceError(err);
    }
  }

  private attach(view: SessionView): void {
    this.view = view;
    this.errorBox.textContent = "";
    this.reportLine.textContent = "";
    this.render();
    this.opts.onSessionChange?.(view.id);
  }

  private showError(message: string): void {
    this.errorBox.textContent = message;
  }

  private showServiceError(err: unknown): void {
    if (err instanceof ServiceError) {
      this.showError(`${err.code}: ${err.message}`);
    } else {
      this.showError(String(err));
    }
  }

  private render(): void {
    const view = this.view;
    this.sessionSection.hidden = view === null;
    if (!view) return;
    const banner = bannerFor(view.status, view.reported_winner);
    this.banner.textContent = banner.label;
    this.banner.className = `banner ${banner.cssClass}`;
    this.facts.textContent =
      `${view.contest_name}: auditing ${view.reported_winner} as winner, ` +
      `${ballotsLine(view)}, risk limit ${view.alpha}, ` +
      `frontier ${view.frontier_size}`;
    const running = view.status === "running";
    this.submitBtn.disabled = this.busy || !running;
    this.ballotInput.disabled = this.busy || !running;
    this.escalateBtn.disabled = this.busy || !running;

    const { visible, hidden } = frontierTable(view.frontier);
    this.frontierBody.replaceChildren();
    for (const node of visible) {
      const row = el("tr");
      row.append(el("td", "suffix", suffixLabel(node.suffix)));
      row.append(el("td", "watch", String(node.watch_size)));
      row.append(el("td", "log-i", node.log_i));
      const cell = el("td", "progress");
      const bar = el("div", "progress-bar");
      const fill = el("div", "progress-fill");
      fill.style.width = progressPercent(node.progress);
      bar.append(fill);
      cell.append(bar, el("span", "progress-text", progressPercent(node.progress)));
      row.append(cell);
      this.frontierBody.append(row);
    }
    this.frontierMore.textContent = hidden > 0 ? `${hidden} more nodes` : "";
  }
}

export function mountConsole(
  root: HTMLElement,
  client: ServiceClient,
  opts: ConsoleOptions = {},
): AuditConsole {
  return new AuditConsole(root, client, opts);
}
