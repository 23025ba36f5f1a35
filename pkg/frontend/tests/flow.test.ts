// @vitest-environment jsdom
import { beforeEach, describe, expect, it } from "vitest";

import { AuditConsole, mountConsole } from "../src/app.js";
import { FakeService } from "./fake-service.js";

const CONTEST = {
  name: "tiny",
  candidates: ["Alpha", "Bravo", "Charlie"],
  ballots: [
    { ranking: ["Alpha"], count: 8 },
    { ranking: ["Bravo"], count: 5 },
    { ranking: ["Charlie"], count: 3 },
  ],
};

function mount(svc: FakeService): AuditConsole {
  const root = document.createElement("div");
  document.body.append(root);
  return mountConsole(root, svc);
}

function text(audit: AuditConsole, selector: string): string {
  return audit.root.querySelector(selector)?.textContent ?? "";
}

function bannerClass(audit: AuditConsole): string {
  return audit.root.querySelector(".banner")?.className ?? "";
}

function frontierRows(audit: AuditConsole): number {
  return audit.root.querySelectorAll("table.frontier tbody tr").length;
}

async function createSession(audit: AuditConsole, contest: unknown): Promise<void> {
  const input = audit.root.querySelector(".contest-input") as HTMLTextAreaElement;
  input.value = JSON.stringify(contest);
  await audit.create();
}

beforeEach(() => {
  document.body.replaceChildren();
});

describe("audit console session flow", () => {
  it("runs a session from creation through certification and reload", async () => {
    const svc = new FakeService([11, 12]);
    const audit = mount(svc);

    await createSession(audit, CONTEST);
    expect(audit.view?.id).toBe("fake-1");
    expect(text(audit, ".banner")).toBe("Audit in progress");
    expect(bannerClass(audit)).toContain("banner-running");
    expect(frontierRows(audit)).toBe(2);

    // ten ballots: the frontier fills in a little more on every draw
    const widths: string[] = [];
    for (let i = 0; i < 10; i++) {
      expect(await audit.submit("Alpha")).toBe(true);
      const fill = audit.root.querySelector(".progress-fill") as HTMLDivElement;
      widths.push(fill.style.width);
    }
    expect(new Set(widths).size).toBe(10);
    expect(text(audit, ".facts")).toContain("10 of 16 cards drawn");
    expect(svc.getCalls).toBe(10);

    // draw 11 prunes one order suffix, draw 12 empties the frontier
    await audit.submit("Bravo, Alpha");
    expect(text(audit, ".report-line")).toBe("draw 11: pruned 1");
    expect(frontierRows(audit)).toBe(1);
    await audit.submit("");
    expect(text(audit, ".banner")).toBe("Certified: Alpha won");
    expect(bannerClass(audit)).toContain("banner-certified");
    expect(frontierRows(audit)).toBe(0);

    // the finished session rejects further ballots client-side
    const submitted = await audit.submit("Alpha");
    expect(submitted).toBe(false);
    expect(svc.submitCalls).toBe(12);
    const button = audit.root.querySelector(".submit-btn") as HTMLButtonElement;
    expect(button.disabled).toBe(true);

    // a fresh console (page reload) reconstructs the session by id
    const reloaded = mount(svc);
    await reloaded.load("fake-1");
    expect(text(reloaded, ".banner")).toBe("Certified: Alpha won");
    expect(bannerClass(reloaded)).toContain("banner-certified");
    expect(text(reloaded, ".facts")).toContain("12 of 16 cards drawn");
    expect(frontierRows(reloaded)).toBe(0);
  });

  it("escalates a running session to a full hand count", async () => {
    const svc = new FakeService();
    const audit = mount(svc);
    await createSession(audit, CONTEST);
    await audit.submit("Charlie");

    await audit.escalate();
    expect(text(audit, ".banner")).toBe("Escalated to a full hand count");
    expect(bannerClass(audit)).toContain("banner-full-count");
    expect(await audit.submit("Alpha")).toBe(false);

    const reloaded = mount(svc);
    await reloaded.load(audit.view!.id);
    expect(text(reloaded, ".banner")).toBe("Escalated to a full hand count");
  });

  it("serializes ballot submission", async () => {
    const svc = new FakeService();
    const audit = mount(svc);
    await createSession(audit, CONTEST);

    let release!: () => void;
    svc.gate = new Promise((resolve) => (release = resolve));
    const first = audit.submit("Alpha");
    const button = audit.root.querySelector(".submit-btn") as HTMLButtonElement;
    expect(button.disabled).toBe(true);
    expect(await audit.submit("Bravo")).toBe(false);
    release();
    expect(await first).toBe(true);
    expect(svc.submitCalls).toBe(1);
    expect(button.disabled).toBe(false);
  });

  it("surfaces validation problems without calling the service", async () => {
    const svc = new FakeService();
    const audit = mount(svc);
    await createSession(audit, CONTEST);

    expect(await audit.submit("Alpha, Delta")).toBe(false);
    expect(text(audit, ".error")).toBe('unknown candidate "Delta"');
    expect(await audit.submit("Alpha, Alpha")).toBe(false);
    expect(text(audit, ".error")).toBe('"Alpha" appears twice');
    expect(svc.submitCalls).toBe(0);
  });

  it("caps the frontier panel at 200 rows and counts the rest", async () => {
    const svc = new FakeService();
    const audit = mount(svc);
    const big = {
      name: "wide",
      candidates: Array.from({ length: 451 }, (_, i) => `C${i}`),
      ballots: [{ ranking: ["C0"], count: 1 }],
    };
    await createSession(audit, big);
    expect(audit.view?.frontier_size).toBe(450);
    expect(frontierRows(audit)).toBe(200);
    expect(text(audit, ".frontier-more")).toBe("250 more nodes");
  });

  it("reports unknown sessions when loading", async () => {
    const svc = new FakeService();
    const audit = mount(svc);
    await audit.load("nope");
    expect(text(audit, ".error")).toContain("unknown_session");
    expect(audit.view).toBeNull();
  });
});
