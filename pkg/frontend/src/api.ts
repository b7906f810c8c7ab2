import type {
  BatchRecord,
  ClusterProposal,
  CoveragePayload,
  DecisionResponse,
  ExtractResponse,
  HealthPayload,
  InventoryPayload,
  ReviewDecision,
  SweepPayload,
} from "./types";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

/** Thin typed client over the review service; the UI holds no inventory state
 * of its own; every displayed version number originates from these calls. */
export class ApiClient {
  constructor(private readonly base: string = "") {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let resp: Response;
    try {
      resp = await fetch(this.base + path, {
        headers: { "Content-Type": "application/json" },
        ...init,
      });
    } catch (err) {
      throw new ApiError(0, `service unreachable: ${String(err)}`);
    }
    let body: unknown = null;
    try {
      body = await resp.json();
    } catch {
      body = null;
    }
    if (!resp.ok) {
      const message =
        body && typeof body === "object" && "error" in body
          ? String((body as { error: unknown }).error)
          : resp.statusText;
      throw new ApiError(resp.status, message);
    }
    return body as T;
  }

  health(): Promise<HealthPayload> {
    return this.request("/health");
  }

  inventory(version?: number): Promise<InventoryPayload> {
    const suffix = version === undefined ? "" : `?version=${version}`;
    return this.request(`/v1/inventory${suffix}`);
  }

  queue(status?: string): Promise<ClusterProposal[]> {
    const suffix = status ? `?status=${encodeURIComponent(status)}` : "";
    return this.request(`/v1/review/queue${suffix}`);
  }

  postDecision(decision: ReviewDecision): Promise<DecisionResponse> {
    return this.request("/v1/review/decisions", {
      method: "POST",
      body: JSON.stringify(decision),
    });
  }

  sweep(): Promise<SweepPayload> {
    return this.request("/v1/metrics/sweep");
  }

  coverage(split: string, fraction?: number): Promise<CoveragePayload> {
    const suffix = fraction === undefined ? "" : `&fraction=${fraction}`;
    return this.request(`/v1/metrics/coverage?split=${encodeURIComponent(split)}${suffix}`);
  }

  batches(): Promise<BatchRecord[]> {
    return this.request("/v1/batches");
  }

  extract(text: string): Promise<ExtractResponse> {
    return this.request("/v1/extract", {
      method: "POST",
      body: JSON.stringify({ text }),
    });
  }
}
