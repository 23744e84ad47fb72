// DOM rendering over the controller.  Pure view code: reads controller
// state, forwards clicks, and paints numbers the service sent back.

import { AnalyticsBundle, Snapshot } from "./api.js";
import { TrialController, LOOP_MESSAGE } from "./controller.js";
import { EdgeState, FixState, nodePairs, pairLabel } from "./model.js";

const SVG_NS = "http://www.w3.org/2000/svg";
const SIZE = 360;
const RADIUS = 130;
const NODE_R = 30;

function nodeCenter(index: number, n: number): [number, number] {
  const angle = -Math.PI / 2 + (2 * Math.PI * index) / n;
  return [SIZE / 2 + RADIUS * Math.cos(angle), SIZE / 2 + RADIUS * Math.sin(angle)];
}

export class PlaygroundView {
  private root: HTMLElement;

  constructor(root: HTMLElement, private controller: TrialController,
              private onAction: () => void) {
    this.root = root;
  }

  render(): void {
    const state = this.controller.state;
    const snap = state.snapshot;
    this.root.innerHTML = "";
    if (!snap) return;
    this.root.appendChild(this.header(snap));
    if (snap.done) {
      this.root.appendChild(this.doneBanner());
      return;
    }
    this.root.appendChild(this.deviceSvg(snap));
    if (state.blockedMessage) {
      const warning = document.createElement("div");
      warning.className = "warning";
      warning.textContent = state.blockedMessage;
      this.root.appendChild(warning);
    }
    if (snap.phase === "intervene") this.root.appendChild(this.intervenePanel(snap));
    if (snap.phase === "judge") this.root.appendChild(this.judgePanel(snap));
    if (snap.last_feedback && snap.last_feedback.problem === snap.problem_index - 1) {
      const fb = document.createElement("div");
      fb.className = "feedback";
      fb.textContent = `true connections of the last device: ${
        snap.last_feedback.true_edges || "(none)"}`;
      this.root.appendChild(fb);
    }
    this.root.appendChild(this.overlayPanel(state.overlay, snap));
  }

  private header(snap: Snapshot): HTMLElement {
    const el = document.createElement("div");
    el.className = "header";
    el.textContent =
      `problem ${snap.problem_index + 1}/${snap.n_problems} - ` +
      `test ${snap.test_index + 1}/${snap.tests_total} - ` +
      (snap.phase === "intervene"
        ? "set components and press test"
        : "draw your best guess at the connections");
    if (snap.w_known && snap.w_s !== null) {
      el.textContent += ` (strength ${snap.w_s}, background ${snap.w_b})`;
    }
    return el;
  }

  private doneBanner(): HTMLElement {
    const el = document.createElement("div");
    el.className = "done";
    el.textContent = "session complete - thank you";
    return el;
  }

  private deviceSvg(snap: Snapshot): SVGSVGElement {
    const state = this.controller.state;
    const svg = document.createElementNS(SVG_NS, "svg");
    svg.setAttribute("viewBox", `0 0 ${SIZE} ${SIZE}`);
    svg.setAttribute("class", "device");
    this.arrowDefs(svg);

    if (snap.phase === "judge") {
      nodePairs(snap.n).forEach(([i, j], k) => {
        svg.appendChild(this.edgeShape(snap, i, j, k, state.edges[k]));
      });
    }
    const outcome = snap.phase === "judge" ? state.lastOutcome : null;
    for (let i = 0; i < snap.n; i++) {
      svg.appendChild(this.nodeShape(snap, i, state.fixes[i] ?? "free", outcome));
    }
    return svg;
  }

  private arrowDefs(svg: SVGSVGElement): void {
    const defs = document.createElementNS(SVG_NS, "defs");
    const marker = document.createElementNS(SVG_NS, "marker");
    marker.setAttribute("id", "arrow");
    marker.setAttribute("markerWidth", "10");
    marker.setAttribute("markerHeight", "8");
    marker.setAttribute("refX", "9");
    marker.setAttribute("refY", "4");
    marker.setAttribute("orient", "auto");
    const tip = document.createElementNS(SVG_NS, "path");
    tip.setAttribute("d", "M0,0 L10,4 L0,8 z");
    marker.appendChild(tip);
    defs.appendChild(marker);
    svg.appendChild(defs);
  }

  private nodeShape(snap: Snapshot, index: number, fix: FixState,
                    outcome: string | null): SVGGElement {
    const [cx, cy] = nodeCenter(index, snap.n);
    const group = document.createElementNS(SVG_NS, "g");
    const circle = document.createElementNS(SVG_NS, "circle");
    circle.setAttribute("cx", String(cx));
    circle.setAttribute("cy", String(cy));
    circle.setAttribute("r", String(NODE_R));
    const active = outcome !== null && outcome[index] === "1";
    circle.setAttribute(
      "class",
      "node" + (active ? " active" : "") +
        (fix !== "free" && snap.phase === "intervene" ? ` fixed-${fix}` : ""),
    );
    if (snap.phase === "intervene") {
      circle.addEventListener("click", () => {
        this.controller.clickNode(index);
        this.onAction();
      });
    }
    const text = document.createElementNS(SVG_NS, "text");
    text.setAttribute("x", String(cx));
    text.setAttribute("y", String(cy + 5));
    text.setAttribute("text-anchor", "middle");
    text.textContent =
      snap.labels[index] +
      (snap.phase === "intervene" && fix !== "free" ? (fix === "on" ? " +" : " -") : "");
    group.appendChild(circle);
    group.appendChild(text);
    return group;
  }

  private edgeShape(snap: Snapshot, i: number, j: number, k: number,
                    state: EdgeState): SVGGElement {
    const [x1, y1] = nodeCenter(i, snap.n);
    const [x2, y2] = nodeCenter(j, snap.n);
    const dx = x2 - x1;
    const dy = y2 - y1;
    const len = Math.hypot(dx, dy);
    const ux = dx / len;
    const uy = dy / len;
    const group = document.createElementNS(SVG_NS, "g");
    const line = document.createElementNS(SVG_NS, "line");
    const margin = NODE_R + 4;
    const [fromX, fromY, toX, toY] =
      state >= 0
        ? [x1 + ux * margin, y1 + uy * margin, x2 - ux * margin, y2 - uy * margin]
        : [x2 - ux * margin, y2 - uy * margin, x1 + ux * margin, y1 + uy * margin];
    line.setAttribute("x1", String(fromX));
    line.setAttribute("y1", String(fromY));
    line.setAttribute("x2", String(toX));
    line.setAttribute("y2", String(toY));
    line.setAttribute("class", state === 0 ? "edge empty" : "edge drawn");
    if (state !== 0) line.setAttribute("marker-end", "url(#arrow)");
    const hit = document.createElementNS(SVG_NS, "line");
    hit.setAttribute("x1", String(x1 + ux * margin));
    hit.setAttribute("y1", String(y1 + uy * margin));
    hit.setAttribute("x2", String(x2 - ux * margin));
    hit.setAttribute("y2", String(y2 - uy * margin));
    hit.setAttribute("class", "edge-hit");
    hit.addEventListener("click", () => {
      this.controller.clickPair(k);
      this.onAction();
    });
    group.appendChild(line);
    group.appendChild(hit);
    return group;
  }

  private intervenePanel(snap: Snapshot): HTMLElement {
    const panel = document.createElement("div");
    panel.className = "panel";
    if (snap.needs_sliders) {
      panel.appendChild(this.sliderRow(
        "predictions (sure off .. sure on)",
        this.controller.state.fixes
          .map((fix, i) => ({ fix, label: snap.labels[i] }))
          .filter((x) => x.fix === "free")
          .map((x) => x.label),
        (label, value) => this.controller.setPrediction(label, value),
      ));
    }
    if (snap.needs_explanation) {
      const box = document.createElement("textarea");
      box.placeholder =
        "Explain why you chose this combination of fixed and unfixed components " +
        "(use the component labels)";
      box.value = this.controller.state.explanation;
      box.addEventListener("input", () => {
        this.controller.setExplanation(box.value);
        button.disabled = !this.controller.canSubmitTest();
      });
      panel.appendChild(box);
    }
    const button = document.createElement("button");
    button.textContent = "test";
    button.className = "primary";
    button.disabled = !this.controller.canSubmitTest();
    button.addEventListener("click", async () => {
      button.disabled = true;
      try {
        await this.controller.submitTest();
      } catch {
        // blocked message already set by the controller
      }
      this.onAction();
    });
    panel.appendChild(button);
    return panel;
  }

  private judgePanel(snap: Snapshot): HTMLElement {
    const panel = document.createElement("div");
    panel.className = "panel";
    const hint = document.createElement("div");
    hint.className = "hint";
    hint.textContent = "click between components: none / forward / backward";
    panel.appendChild(hint);
    if (snap.needs_sliders) {
      panel.appendChild(this.sliderRow(
        "edge confidence (guess .. sure)",
        snap.pairs,
        (pair, value) => this.controller.setConfidence(pair, value),
      ));
    }
    const button = document.createElement("button");
    button.textContent = "submit judgment";
    button.className = "primary";
    button.disabled = !this.controller.canSubmitJudgment();
    button.addEventListener("click", async () => {
      try {
        await this.controller.submitJudgment();
        await this.controller.refreshOverlay();
      } catch {
        // server rejection text lands in blockedMessage via LOOP_MESSAGE
      }
      this.onAction();
    });
    panel.appendChild(button);
    return panel;
  }

  private sliderRow(title: string, labels: string[],
                    onChange: (label: string, value: number) => void): HTMLElement {
    const wrap = document.createElement("div");
    wrap.className = "sliders";
    const caption = document.createElement("div");
    caption.className = "hint";
    caption.textContent = title;
    wrap.appendChild(caption);
    for (const label of labels) {
      const row = document.createElement("label");
      row.textContent = label + " ";
      const input = document.createElement("input");
      input.type = "range";
      input.min = "0";
      input.max = "1";
      input.step = "0.01";
      input.value = "0.5"; // midpoint = maximal uncertainty
      input.addEventListener("input", () => onChange(label, Number(input.value)));
      row.appendChild(input);
      wrap.appendChild(row);
    }
    return wrap;
  }

  private overlayPanel(overlay: AnalyticsBundle | null, snap: Snapshot): HTMLElement {
    const panel = document.createElement("div");
    panel.className = "overlay";
    const toggle = document.createElement("button");
    toggle.textContent = this.controller.state.overlayOn
      ? "hide analytics" : "show analytics";
    toggle.disabled = !snap.analytics;
    toggle.title = snap.analytics ? "" : "analytics disabled for this session";
    toggle.addEventListener("click", async () => {
      await this.controller.toggleOverlay(!this.controller.state.overlayOn);
      this.onAction();
    });
    panel.appendChild(toggle);
    if (!overlay) return panel;

    const marginals = document.createElement("div");
    marginals.className = "marginals";
    for (const [pair, m] of Object.entries(overlay.edge_marginals)) {
      const row = document.createElement("div");
      const best = Math.max(m.forward, m.backward, m.absent);
      row.style.opacity = String(0.35 + 0.65 * best);
      row.textContent =
        `${pair}: -> ${m.forward.toFixed(2)}  <- ${m.backward.toFixed(2)}  ` +
        `none ${m.absent.toFixed(2)}`;
      marginals.appendChild(row);
    }
    panel.appendChild(marginals);

    const ranking = document.createElement("ol");
    ranking.className = "eig";
    const order = overlay.expected_info_gain
      .map((value, k) => ({ value, k }))
      .sort((a, b) => b.value - a.value)
      .slice(0, 8);
    for (const { value, k } of order) {
      const item = document.createElement("li");
      item.textContent = `${overlay.interventions[k]}  ${value.toFixed(3)} bits`;
      ranking.appendChild(item);
    }
    panel.appendChild(ranking);

    const foci = document.createElement("div");
    foci.className = "foci";
    for (const row of overlay.focus_entropies) {
      const el = document.createElement("div");
      el.textContent =
        `${row.focus}: ${row.entropy_bits.toFixed(3)} bits, ` +
        `best test ${row.best_intervention}`;
      foci.appendChild(el);
    }
    panel.appendChild(foci);
    return panel;
  }
}

export { LOOP_MESSAGE };
