// Contract tests with a mocked service: the client owns no probability
// math, honors disappear blanking, blocks cyclic submissions before any
// network call, and only touches the analytics endpoint when the overlay
// is on.

import { describe, expect, it } from "vitest";

import { AnalyticsBundle, Snapshot } from "../src/api.js";
import { LOOP_MESSAGE, TrialController } from "../src/controller.js";

function snapshot(overrides: Partial<Snapshot> = {}): Snapshot {
  return {
    id: "s1",
    name: "mock",
    phase: "intervene",
    problem_index: 0,
    test_index: 0,
    n_problems: 1,
    tests_total: 6,
    n: 3,
    labels: ["x", "y", "z"],
    pairs: ["xy", "xz", "yz"],
    reporting: "remain",
    w_known: true,
    w_s: 0.9,
    w_b: 0.1,
    analytics: false,
    needs_sliders: false,
    needs_explanation: false,
    previous_judgment: null,
    last_outcome: null,
    last_feedback: null,
    done: false,
    ...overrides,
  };
}

class MockApi {
  calls: Array<{ method: string; args: unknown[] }> = [];
  nextSnapshot: Snapshot = snapshot();
  analyticsBundle: AnalyticsBundle | null = null;

  async createSession(body: unknown) {
    this.calls.push({ method: "createSession", args: [body] });
    return { id: "s1", snapshot: this.nextSnapshot };
  }

  async getSnapshot() {
    return this.nextSnapshot;
  }

  async intervene(...args: unknown[]) {
    this.calls.push({ method: "intervene", args });
    return { outcome: "110", snapshot: this.nextSnapshot };
  }

  async judge(...args: unknown[]) {
    this.calls.push({ method: "judge", args });
    return { accepted: true, feedback: null, snapshot: this.nextSnapshot };
  }

  async analytics(...args: unknown[]) {
    this.calls.push({ method: "analytics", args });
    return this.analyticsBundle!;
  }

  async exportLog() {
    return { csv: "", free_text: [] };
  }
}

function makeController(mock: MockApi): TrialController {
  // structurally compatible with SessionApi
  return new TrialController(mock as never);
}

describe("intervene phase", () => {
  it("cycles node fixes and builds the code string", async () => {
    const mock = new MockApi();
    const c = makeController(mock);
    await c.start({ seed: 1 });
    c.clickNode(0);
    c.clickNode(2);
    c.clickNode(2);
    mock.nextSnapshot = snapshot({ phase: "judge", last_outcome: "100" });
    await c.submitTest();
    const call = mock.calls.find((x) => x.method === "intervene")!;
    expect(call.args[1]).toBe("+.-");
  });

  it("sends midpoint predictions for free nodes when sliders required", async () => {
    const mock = new MockApi();
    mock.nextSnapshot = snapshot({ needs_sliders: true });
    const c = makeController(mock);
    await c.start({ seed: 1 });
    c.clickNode(0);
    mock.nextSnapshot = snapshot({ phase: "judge", needs_sliders: true });
    await c.submitTest();
    const call = mock.calls.find((x) => x.method === "intervene")!;
    expect(call.args[2]).toEqual({ y: 0.5, z: 0.5 });
  });

  it("blocks short explanations before any network call", async () => {
    const mock = new MockApi();
    mock.nextSnapshot = snapshot({ needs_explanation: true });
    const c = makeController(mock);
    await c.start({ seed: 1 });
    c.setExplanation("abc");
    expect(c.canSubmitTest()).toBe(false);
    await expect(c.submitTest()).rejects.toThrow();
    expect(mock.calls.filter((x) => x.method === "intervene")).toHaveLength(0);
    c.setExplanation("checking component x");
    expect(c.canSubmitTest()).toBe(true);
  });
});

describe("judge phase", () => {
  it("remain mode pre-populates the previous judgment", async () => {
    const mock = new MockApi();
    mock.nextSnapshot = snapshot({
      phase: "judge",
      reporting: "remain",
      previous_judgment: "x->y;z->y",
    });
    const c = makeController(mock);
    await c.start({ seed: 1 });
    expect(c.state.edges).toEqual([1, 0, -1]);
  });

  it("disappear mode starts blank with no trace of the prior judgment", async () => {
    const mock = new MockApi();
    mock.nextSnapshot = snapshot({
      phase: "judge",
      reporting: "disappear",
      previous_judgment: null,
    });
    const c = makeController(mock);
    await c.start({ seed: 1 });
    expect(c.state.edges).toEqual([0, 0, 0]);
    expect(JSON.stringify(c.state)).not.toContain("x->y");
  });

  it("blocks cyclic judgments client-side with the loop message", async () => {
    const mock = new MockApi();
    mock.nextSnapshot = snapshot({ phase: "judge" });
    const c = makeController(mock);
    await c.start({ seed: 1 });
    c.clickPair(0); // x->y
    c.clickPair(2); // y->z
    c.clickPair(1);
    c.clickPair(1); // z->x: loop
    expect(c.canSubmitJudgment()).toBe(false);
    expect(c.state.blockedMessage).toBe(LOOP_MESSAGE);
    await expect(c.submitJudgment()).rejects.toThrow(LOOP_MESSAGE);
    expect(mock.calls.filter((x) => x.method === "judge")).toHaveLength(0);
    c.clickPair(1); // back to absent
    expect(c.canSubmitJudgment()).toBe(true);
    await c.submitJudgment();
    const call = mock.calls.find((x) => x.method === "judge")!;
    expect(call.args[1]).toBe("x->y;y->z");
  });

  it("slider defaults sit at the midpoint", async () => {
    const mock = new MockApi();
    mock.nextSnapshot = snapshot({ phase: "judge", needs_sliders: true });
    const c = makeController(mock);
    await c.start({ seed: 1 });
    expect(c.state.confidences).toEqual({ xy: 0.5, xz: 0.5, yz: 0.5 });
  });
});

describe("overlay", () => {
  const bundle: AnalyticsBundle = {
    edge_marginals: { xy: { backward: 0.32, absent: 0.36, forward: 0.32 } },
    interventions: ["...", "+.."],
    expected_info_gain: [0.123456, 0.7],
    focus_entropies: [
      { focus: "edge xy", entropy_bits: 1.585, best_intervention: "+..", gains: [0, 1] },
    ],
    search_predictive: { lambda: 1.5, omega: 10, epsilon: 0, top_graphs: [] },
  };

  it("passes service numbers through untouched", async () => {
    const mock = new MockApi();
    mock.nextSnapshot = snapshot({ analytics: true });
    mock.analyticsBundle = bundle;
    const c = makeController(mock);
    await c.start({ seed: 1 });
    const overlay = await c.toggleOverlay(true);
    expect(overlay).toEqual(bundle); // no client math, byte-for-byte values
  });

  it("makes no analytics calls while the overlay is off", async () => {
    const mock = new MockApi();
    mock.nextSnapshot = snapshot({ analytics: true });
    mock.analyticsBundle = bundle;
    const c = makeController(mock);
    await c.start({ seed: 1 });
    await c.refreshOverlay();
    expect(mock.calls.filter((x) => x.method === "analytics")).toHaveLength(0);
  });

  it("never calls analytics when the session has it disabled", async () => {
    const mock = new MockApi();
    mock.nextSnapshot = snapshot({ analytics: false });
    const c = makeController(mock);
    await c.start({ seed: 1 });
    await c.toggleOverlay(true);
    expect(mock.calls.filter((x) => x.method === "analytics")).toHaveLength(0);
    expect(c.state.overlay).toBeNull();
  });
});
