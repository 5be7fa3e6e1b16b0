/** Orchestrates api + state + offline queue; rendering is injected. */

import { AnnotationApi, ApiError, DuplicateDecisionError } from "./api.js";
import { OfflineQueue } from "./offlineQueue.js";
import {
  AppState,
  canSubmit,
  initialState,
  onActiveCategory,
  onCategories,
  onDuplicate,
  onFlushed,
  onNetworkError,
  onNext,
  onVerdictRecorded,
} from "./state.js";
import type { DecisionBody, Verdict } from "./types.js";

const isDuplicate = (err: unknown) => err instanceof DuplicateDecisionError;
/** 4xx/5xx responses are protocol errors; anything else is a network failure. */
const isNetworkFailure = (err: unknown) =>
  !(err instanceof DuplicateDecisionError) && !(err instanceof ApiError);

export class Controller {
  state: AppState = initialState();

  constructor(
    private readonly api: AnnotationApi,
    private readonly queue: OfflineQueue,
    private readonly annotatorId: string,
    private readonly render: (state: AppState) => void = () => {},
  ) {}

  private setState(state: AppState): void {
    this.state = state;
    this.render(this.state);
  }

  async start(): Promise<void> {
    try {
      this.setState(onCategories(this.state, await this.api.categories()));
    } catch (err) {
      if (!isNetworkFailure(err)) throw err;
      this.setState(onNetworkError(this.state, this.queue.size));
      return;
    }
    if (this.state.active) await this.loadNext();
  }

  async selectCategory(category: string): Promise<void> {
    this.setState(onActiveCategory(this.state, category));
    await this.loadNext();
  }

  async loadNext(): Promise<void> {
    const category = this.state.active;
    if (!category) return;
    try {
      this.setState(onNext(this.state, await this.api.fetchNext(category)));
    } catch (err) {
      if (!isNetworkFailure(err)) throw err;
      this.setState(onNetworkError(this.state, this.queue.size));
    }
  }

  async submit(verdict: Verdict, redirect?: string): Promise<void> {
    if (!canSubmit(this.state) || this.state.screen.kind !== "cluster") return;
    const decision: DecisionBody = {
      cluster_id: this.state.screen.view.cluster_id,
      category: this.state.screen.view.category,
      verdict,
      annotator_id: this.annotatorId,
      ...(redirect ? { redirect } : {}),
    };
    try {
      const resp = await this.api.submitVerdict(decision);
      this.setState(onVerdictRecorded(this.state, resp.progress));
    } catch (err) {
      if (err instanceof DuplicateDecisionError) {
        this.setState(onDuplicate(this.state, err.detail.existing_verdict,
                                  err.detail.progress));
      } else if (isNetworkFailure(err)) {
        this.queue.push(decision);
        this.setState(onNetworkError(this.state, this.queue.size));
        return; // stay on the current cluster; flush will advance
      } else {
        throw err;
      }
    }
    await this.loadNext();
  }

  /** Called on reconnect: deliver queued verdicts oldest-first, then resume. */
  async reconnect(): Promise<void> {
    const delivered = await this.queue.flush(
      async (d) => { await this.api.submitVerdict(d); },
      isDuplicate,
    );
    this.setState(onFlushed(this.state, delivered, this.queue.size));
    if (this.queue.size === 0) {
      await this.start();
    }
  }
}
