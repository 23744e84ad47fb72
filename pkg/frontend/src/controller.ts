// Trial-loop controller: everything the DOM handlers call lives here, so
// a scripted session through this class is exactly a scripted session
// through the UI.  All mutations await the service; there is no
// optimistic state.

import { ApiError, SessionApi, Snapshot, AnalyticsBundle, CreateBody } from "./api.js";
import {
  EdgeState,
  FixState,
  MIN_EXPLANATION_CHARS,
  SLIDER_DEFAULT,
  cycleEdge,
  cycleFix,
  interventionCode,
  isAcyclic,
  judgmentText,
  nodePairs,
  pairLabel,
  parseJudgment,
} from "./model.js";

export const LOOP_MESSAGE =
  "you have drawn connections that make a loop, change or remove one to continue";

export interface ViewState {
  snapshot: Snapshot | null;
  fixes: FixState[];
  edges: EdgeState[];
  predictions: Record<string, number>;
  confidences: Record<string, number>;
  explanation: string;
  overlayOn: boolean;
  overlay: AnalyticsBundle | null;
  lastOutcome: string | null;
  blockedMessage: string | null;
}

export class TrialController {
  state: ViewState = {
    snapshot: null,
    fixes: [],
    edges: [],
    predictions: {},
    confidences: {},
    explanation: "",
    overlayOn: false,
    overlay: null,
    lastOutcome: null,
    blockedMessage: null,
  };
  private sessionId = "";

  constructor(private api: SessionApi) {}

  get snapshot(): Snapshot {
    if (!this.state.snapshot) throw new Error("no active session");
    return this.state.snapshot;
  }

  async start(body: CreateBody): Promise<void> {
    const { id, snapshot } = await this.api.createSession(body);
    this.sessionId = id;
    this.applySnapshot(snapshot, null);
  }

  private applySnapshot(snapshot: Snapshot, outcome: string | null): void {
    const n = snapshot.n;
    this.state.snapshot = snapshot;
    this.state.lastOutcome = outcome;
    this.state.blockedMessage = null;
    if (snapshot.phase === "intervene") {
      this.state.fixes = new Array(n).fill("free");
      this.state.predictions = {};
      this.state.explanation = "";
    }
    if (snapshot.phase === "judge") {
      // remain mode pre-populates the previous judgment; disappear mode
      // starts blank (the service never echoes the judgment back then)
      if (snapshot.reporting === "remain" && snapshot.previous_judgment !== null) {
        this.state.edges = parseJudgment(n, snapshot.previous_judgment);
      } else {
        this.state.edges = nodePairs(n).map(() => 0 as EdgeState);
      }
      this.state.confidences = {};
      if (snapshot.needs_sliders) {
        for (const [i, j] of nodePairs(n)) {
          this.state.confidences[pairLabel(i, j)] = SLIDER_DEFAULT;
        }
      }
    }
  }

  // -- intervene phase -------------------------------------------------

  clickNode(index: number): FixState {
    if (this.snapshot.phase !== "intervene") {
      throw new Error("nodes are only clickable while selecting a test");
    }
    this.state.fixes[index] = cycleFix(this.state.fixes[index]);
    return this.state.fixes[index];
  }

  setPrediction(label: string, value: number): void {
    this.state.predictions[label] = value;
  }

  setExplanation(text: string): void {
    this.state.explanation = text;
  }

  defaultPredictions(): Record<string, number> {
    // sliders start at the midpoint for every free node
    const out: Record<string, number> = {};
    this.state.fixes.forEach((fix, i) => {
      if (fix === "free") out[this.snapshot.labels[i]] = SLIDER_DEFAULT;
    });
    return out;
  }

  canSubmitTest(): boolean {
    if (this.snapshot.needs_explanation) {
      return this.state.explanation.trim().length >= MIN_EXPLANATION_CHARS;
    }
    return true;
  }

  async submitTest(): Promise<string> {
    if (!this.canSubmitTest()) {
      this.state.blockedMessage = `explanations need at least ${MIN_EXPLANATION_CHARS} characters`;
      throw new Error(this.state.blockedMessage);
    }
    const code = interventionCode(this.state.fixes);
    const predictions = this.snapshot.needs_sliders
      ? { ...this.defaultPredictions(), ...this.state.predictions }
      : undefined;
    const explanation = this.snapshot.needs_explanation
      ? this.state.explanation
      : undefined;
    const { outcome, snapshot } = await this.api.intervene(
      this.sessionId, code, predictions, explanation,
    );
    this.applySnapshot(snapshot, outcome);
    return outcome;
  }

  // -- judge phase -------------------------------------------------------

  clickPair(index: number): EdgeState {
    if (this.snapshot.phase !== "judge") {
      throw new Error("edges are only clickable while drawing a judgment");
    }
    this.state.edges[index] = cycleEdge(this.state.edges[index]);
    this.state.blockedMessage = this.canSubmitJudgment() ? null : LOOP_MESSAGE;
    return this.state.edges[index];
  }

  setConfidence(pair: string, value: number): void {
    this.state.confidences[pair] = value;
  }

  canSubmitJudgment(): boolean {
    return isAcyclic(this.snapshot.n, this.state.edges);
  }

  async submitJudgment(): Promise<string | null> {
    if (!this.canSubmitJudgment()) {
      // mirror of the server rule: never send a looping judgment
      this.state.blockedMessage = LOOP_MESSAGE;
      throw new Error(LOOP_MESSAGE);
    }
    const text = judgmentText(this.snapshot.n, this.state.edges);
    const confidences = this.snapshot.needs_sliders
      ? { ...this.state.confidences }
      : undefined;
    const { feedback, snapshot } = await this.api.judge(
      this.sessionId, text, confidences,
    );
    this.applySnapshot(snapshot, this.state.lastOutcome);
    return feedback;
  }

  // -- overlay -----------------------------------------------------------

  async toggleOverlay(on: boolean): Promise<AnalyticsBundle | null> {
    this.state.overlayOn = on;
    if (!on || !this.snapshot.analytics) {
      // overlay off (or analytics disabled): no analytics requests at all
      this.state.overlay = null;
      return null;
    }
    try {
      this.state.overlay = await this.api.analytics(this.sessionId);
    } catch (err) {
      if (err instanceof ApiError && err.status === 403) {
        this.state.overlay = null;
        this.state.overlayOn = false;
        return null;
      }
      throw err;
    }
    return this.state.overlay;
  }

  async refreshOverlay(): Promise<void> {
    if (this.state.overlayOn && this.snapshot.analytics) {
      this.state.overlay = await this.api.analytics(this.sessionId);
    }
  }
}
