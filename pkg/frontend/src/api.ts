/** Thin typed client for the annotation service. */

import type {
  DecisionBody,
  DecisionResponse,
  DuplicateDetail,
  NextResponse,
  ProgressView,
} from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

/** Duplicate submissions come back as 409 with the standing verdict. */
export class DuplicateDecisionError extends Error {
  constructor(public readonly detail: DuplicateDetail) {
    super(`cluster already decided: ${detail.existing_verdict}`);
  }
}

export class ApiError extends Error {
  constructor(public readonly status: number, message: string) {
    super(message);
  }
}

export class AnnotationApi {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request(path: string, init?: RequestInit): Promise<Response> {
    return this.fetchImpl(`${this.baseUrl}${path}`, init);
  }

  async categories(): Promise<ProgressView[]> {
    const resp = await this.request("/categories");
    if (!resp.ok) throw new ApiError(resp.status, "failed to load categories");
    const body = (await resp.json()) as { categories: ProgressView[] };
    return body.categories;
  }

  async fetchNext(category: string): Promise<NextResponse> {
    const resp = await this.request(
      `/queue/next?category=${encodeURIComponent(category)}`,
    );
    if (!resp.ok) throw new ApiError(resp.status, `queue fetch failed for ${category}`);
    return (await resp.json()) as NextResponse;
  }

  async submitVerdict(body: DecisionBody): Promise<DecisionResponse> {
    const resp = await this.request("/decision", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    if (resp.status === 409) {
      const payload = (await resp.json()) as { detail: DuplicateDetail };
      throw new DuplicateDecisionError(payload.detail);
    }
    if (!resp.ok) throw new ApiError(resp.status, "decision rejected");
    return (await resp.json()) as DecisionResponse;
  }
}
