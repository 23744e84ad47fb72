// Pure trial-state helpers shared by the DOM layer and the tests.
// Mirrors the server's graph conventions: nodes are 0-based with display
// labels x, y, z, w, v; unordered pairs in canonical order; edge states
// -1 (backward), 0 (absent), +1 (forward).

export type FixState = "free" | "on" | "off";
export type EdgeState = -1 | 0 | 1;

export const NODE_LABELS = "xyzwv";

export function nodePairs(n: number): Array<[number, number]> {
  const out: Array<[number, number]> = [];
  for (let i = 0; i < n; i++) {
    for (let j = i + 1; j < n; j++) out.push([i, j]);
  }
  return out;
}

export function pairLabel(i: number, j: number): string {
  return NODE_LABELS[i] + NODE_LABELS[j];
}

// node clicks cycle free -> fixed-on -> fixed-off -> free
export function cycleFix(state: FixState): FixState {
  if (state === "free") return "on";
  if (state === "on") return "off";
  return "free";
}

// pair clicks cycle absent -> forward -> backward -> absent
export function cycleEdge(state: EdgeState): EdgeState {
  if (state === 0) return 1;
  if (state === 1) return -1;
  return 0;
}

export function interventionCode(fixes: FixState[]): string {
  return fixes.map((s) => (s === "on" ? "+" : s === "off" ? "-" : ".")).join("");
}

// same loop check the server runs, so submission can be blocked locally
export function isAcyclic(n: number, edges: EdgeState[]): boolean {
  const children: number[][] = Array.from({ length: n }, () => []);
  nodePairs(n).forEach(([i, j], k) => {
    if (edges[k] === 1) children[i].push(j);
    else if (edges[k] === -1) children[j].push(i);
  });
  const indeg: number[] = new Array(n).fill(0);
  for (const kids of children) for (const k of kids) indeg[k]++;
  const queue: number[] = [];
  for (let v = 0; v < n; v++) if (indeg[v] === 0) queue.push(v);
  let seen = 0;
  while (queue.length) {
    const v = queue.pop()!;
    seen++;
    for (const k of children[v]) {
      if (--indeg[k] === 0) queue.push(k);
    }
  }
  return seen === n;
}

// serialize to the service's edge-list text form, e.g. "x->y;y->z"
export function judgmentText(n: number, edges: EdgeState[]): string {
  const parts: string[] = [];
  nodePairs(n).forEach(([i, j], k) => {
    if (edges[k] === 1) parts.push(`${NODE_LABELS[i]}->${NODE_LABELS[j]}`);
    else if (edges[k] === -1) parts.push(`${NODE_LABELS[j]}->${NODE_LABELS[i]}`);
  });
  return parts.join(";");
}

// parse the service's edge-list text form back into edge states
export function parseJudgment(n: number, text: string): EdgeState[] {
  const pairs = nodePairs(n);
  const edges: EdgeState[] = pairs.map(() => 0);
  if (!text.trim()) return edges;
  for (const token of text.split(";")) {
    const [a, b] = token.trim().split("->");
    const ia = NODE_LABELS.indexOf(a.trim());
    const ib = NODE_LABELS.indexOf(b.trim());
    const k = pairs.findIndex(([i, j]) => i === Math.min(ia, ib) && j === Math.max(ia, ib));
    edges[k] = ia < ib ? 1 : -1;
  }
  return edges;
}

export const SLIDER_DEFAULT = 0.5; // midpoint = maximal uncertainty
export const MIN_EXPLANATION_CHARS = 5;
