/** Keyboard shortcuts for the review pace the workflow targets. */

import type { Verdict } from "./types.js";

export type ShortcutAction =
  | { kind: "verdict"; verdict: Verdict }
  | { kind: "next-category" }
  | { kind: "retry" };

export const SHORTCUTS: Record<string, ShortcutAction> = {
  p: { kind: "verdict", verdict: "pertinent" },
  "1": { kind: "verdict", verdict: "pertinent" },
  o: { kind: "verdict", verdict: "other_sense" },
  "2": { kind: "verdict", verdict: "other_sense" },
  c: { kind: "verdict", verdict: "other_category" },
  "3": { kind: "verdict", verdict: "other_category" },
  n: { kind: "next-category" },
  r: { kind: "retry" },
};

export function actionForKey(key: string): ShortcutAction | null {
  return SHORTCUTS[key.toLowerCase()] ?? null;
}

export const SHORTCUT_HELP =
  "p/1 pertinent · o/2 other sense · c/3 other category · n next category · r retry";
