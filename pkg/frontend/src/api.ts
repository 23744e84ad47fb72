// Typed client for the session service's JSON contract.  The client does
// no probabilistic computation of its own: every number it exposes comes
// straight out of a service response.

export interface Snapshot {
  id: string;
  name: string;
  phase: "intervene" | "judge" | "done";
  problem_index: number;
  test_index: number;
  n_problems: number;
  tests_total: number;
  n: number;
  labels: string[];
  pairs: string[];
  reporting: "remain" | "disappear";
  w_known: boolean;
  w_s: number | null;
  w_b: number | null;
  analytics: boolean;
  needs_sliders: boolean;
  needs_explanation: boolean;
  previous_judgment: string | null;
  last_outcome: string | null;
  last_feedback: { problem: number; true_edges: string } | null;
  done: boolean;
}

export interface AnalyticsBundle {
  edge_marginals: Record<string, { backward: number; absent: number; forward: number }>;
  interventions: string[];
  expected_info_gain: number[];
  focus_entropies: Array<{
    focus: string;
    entropy_bits: number;
    best_intervention: string;
    gains: number[];
  }>;
  search_predictive: {
    lambda: number;
    omega: number;
    epsilon: number;
    top_graphs: Array<{ edges: string; prob: number }>;
  };
}

export interface CreateBody {
  preset?: string;
  seed: number;
  analytics?: boolean;
  reporting?: string;
  spec?: Record<string, unknown>;
}

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const response = await fetch(url, {
    headers: { "content-type": "application/json" },
    ...init,
  });
  const body = await response.json().catch(() => ({}));
  if (!response.ok) {
    const message =
      (body as { error?: string; detail?: unknown }).error ??
      JSON.stringify((body as { detail?: unknown }).detail ?? body);
    throw new ApiError(response.status, message);
  }
  return body as T;
}

export class SessionApi {
  constructor(private baseUrl: string) {}

  createSession(body: CreateBody): Promise<{ id: string; snapshot: Snapshot }> {
    return request(`${this.baseUrl}/sessions`, {
      method: "POST",
      body: JSON.stringify(body),
    });
  }

  getSnapshot(id: string): Promise<Snapshot> {
    return request(`${this.baseUrl}/sessions/${id}`);
  }

  intervene(
    id: string,
    intervention: string,
    predictions?: Record<string, number>,
    explanation?: string,
  ): Promise<{ outcome: string; snapshot: Snapshot }> {
    const body: Record<string, unknown> = { intervention };
    if (predictions) body.predictions = predictions;
    if (explanation !== undefined) body.explanation = explanation;
    return request(`${this.baseUrl}/sessions/${id}/intervene`, {
      method: "POST",
      body: JSON.stringify(body),
    });
  }

  judge(
    id: string,
    judgment: string,
    confidences?: Record<string, number>,
  ): Promise<{ accepted: boolean; feedback: string | null; snapshot: Snapshot }> {
    const body: Record<string, unknown> = { judgment };
    if (confidences) body.confidences = confidences;
    return request(`${this.baseUrl}/sessions/${id}/judge`, {
      method: "POST",
      body: JSON.stringify(body),
    });
  }

  analytics(id: string): Promise<AnalyticsBundle> {
    return request(`${this.baseUrl}/sessions/${id}/analytics`);
  }

  exportLog(id: string): Promise<{ csv: string; free_text: unknown[] }> {
    return request(`${this.baseUrl}/sessions/${id}/export`);
  }
}
