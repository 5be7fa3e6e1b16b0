/** Payload types mirroring the annotation service API exactly. */

export const CATEGORIES = [
  "PRE", "RES", "CAS", "HOU", "UTI", "TRA", "FCI", "BWS", "HAZ",
] as const;

export type Category = (typeof CATEGORIES)[number];

export type Verdict = "pertinent" | "other_sense" | "other_category";

export interface ProgressView {
  category: string;
  pertinent: number;
  decided: number;
  remaining: number;
  done: boolean;
}

export interface SampleView {
  tweet_id: string;
  text: string;
  /** [start, end) character spans of keyword tokens in the raw text. */
  highlights: [number, number][];
}

export interface ClusterView {
  cluster_id: string;
  category: string;
  size: number;
  top_words: string[];
  samples: SampleView[];
}

export interface DecisionBody {
  cluster_id: string;
  category: string;
  verdict: Verdict;
  redirect?: string;
  annotator_id: string;
}

export type NextResponse =
  | ({ status: "cluster"; progress: ProgressView } & ClusterView)
  | { status: "done"; progress: ProgressView };

export interface DecisionResponse {
  status: "recorded";
  progress: ProgressView;
}

export interface DuplicateDetail {
  error: string;
  existing_verdict: Verdict;
  progress: ProgressView;
}
