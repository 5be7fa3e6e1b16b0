/** Console state: a pure fold over service responses.
 *
 * Every transition consumes a service payload (or a network failure) and
 * returns the next state, so replaying the same responses reproduces the
 * identical screen and a refresh re-derives everything from the service.
 */

import type { ClusterView, NextResponse, ProgressView, Verdict } from "./types.js";

export type Screen =
  | { kind: "loading" }
  | { kind: "cluster"; view: ClusterView; progress: ProgressView }
  | { kind: "done"; progress: ProgressView }
  | { kind: "offline"; message: string };

export interface AppState {
  categories: ProgressView[];
  active: string | null;
  screen: Screen;
  banner: string | null;
  pendingCount: number;
}

export function initialState(): AppState {
  return { categories: [], active: null, screen: { kind: "loading" },
           banner: null, pendingCount: 0 };
}

function mergeProgress(categories: ProgressView[], progress: ProgressView): ProgressView[] {
  const next = categories.map((c) => (c.category === progress.category ? progress : c));
  return next.some((c) => c.category === progress.category) ? next : [...next, progress];
}

export function onCategories(state: AppState, categories: ProgressView[]): AppState {
  const active =
    state.active ?? categories.find((c) => !c.done)?.category ?? categories[0]?.category ?? null;
  return { ...state, categories, active };
}

export function onActiveCategory(state: AppState, category: string): AppState {
  return { ...state, active: category, screen: { kind: "loading" }, banner: null };
}

export function onNext(state: AppState, response: NextResponse): AppState {
  const categories = mergeProgress(state.categories, response.progress);
  if (response.status === "done") {
    return { ...state, categories, screen: { kind: "done", progress: response.progress } };
  }
  const { status: _status, progress, ...view } = response;
  return { ...state, categories, screen: { kind: "cluster", view, progress } };
}

export function onVerdictRecorded(state: AppState, progress: ProgressView): AppState {
  return {
    ...state,
    categories: mergeProgress(state.categories, progress),
    screen: { kind: "loading" },
    banner: null,
  };
}

/** Duplicate rejection: surface the standing verdict and advance anyway. */
export function onDuplicate(state: AppState, existing: Verdict,
                            progress: ProgressView): AppState {
  return {
    ...state,
    categories: mergeProgress(state.categories, progress),
    screen: { kind: "loading" },
    banner: `already decided on the server: ${existing}`,
  };
}

/** Network failure: show the retry banner without losing anything. */
export function onNetworkError(state: AppState, pendingCount: number): AppState {
  const screen: Screen =
    state.screen.kind === "cluster" ? state.screen : { kind: "offline", message: "service unreachable" };
  return {
    ...state,
    screen,
    pendingCount,
    banner: pendingCount > 0
      ? `offline: ${pendingCount} verdict(s) queued, will flush on reconnect`
      : "service unreachable, retrying",
  };
}

export function onFlushed(state: AppState, delivered: number, remaining: number): AppState {
  return {
    ...state,
    pendingCount: remaining,
    banner: delivered > 0 ? `reconnected: flushed ${delivered} queued verdict(s)` : state.banner,
  };
}

/** Verdict input is enabled only while a cluster is on screen. */
export function canSubmit(state: AppState): boolean {
  return state.screen.kind === "cluster";
}
