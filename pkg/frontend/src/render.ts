/** DOM rendering: the screen is rebuilt from state on every change. */

import { segmentText } from "./highlight.js";
import { SHORTCUT_HELP } from "./keyboard.js";
import type { AppState } from "./state.js";
import { canSubmit } from "./state.js";

function el(tag: string, className?: string, text?: string): HTMLElement {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function renderApp(root: HTMLElement, state: AppState,
                          onCategory: (category: string) => void,
                          onVerdict: (verdict: string) => void,
                          onRetry: () => void): void {
  root.replaceChildren();

  if (state.banner) {
    const banner = el("div", "banner", state.banner);
    const retry = el("button", "retry", "retry now");
    retry.addEventListener("click", onRetry);
    banner.appendChild(retry);
    root.appendChild(banner);
  }

  const cards = el("div", "categories");
  for (const progress of state.categories) {
    const card = el("button",
                    "card" + (progress.category === state.active ? " active" : "")
                    + (progress.done ? " done" : ""));
    card.appendChild(el("div", "card-name", progress.category));
    card.appendChild(el("div", "card-count", `${progress.pertinent}/20 pertinent`));
    const bar = el("div", "bar");
    const fill = el("div", "fill");
    fill.style.width = `${Math.min(100, (progress.pertinent / 20) * 100)}%`;
    bar.appendChild(fill);
    card.appendChild(bar);
    card.addEventListener("click", () => onCategory(progress.category));
    cards.appendChild(card);
  }
  root.appendChild(cards);

  const main = el("div", "main");
  if (state.screen.kind === "loading") {
    main.appendChild(el("p", "status", "loading next cluster..."));
  } else if (state.screen.kind === "offline") {
    main.appendChild(el("p", "status", state.screen.message));
  } else if (state.screen.kind === "done") {
    main.appendChild(el("p", "status done-note",
                        `${state.screen.progress.category} complete: `
                        + `${state.screen.progress.pertinent} pertinent clusters`));
  } else {
    const { view } = state.screen;
    const head = el("div", "cluster-head");
    head.appendChild(el("span", "cluster-id", view.cluster_id));
    head.appendChild(el("span", "cluster-size", `${view.size} tweets`));
    head.appendChild(el("span", "top-words", view.top_words.join(" · ")));
    main.appendChild(head);

    const list = el("ul", "samples");
    for (const sample of view.samples) {
      const item = el("li", "sample");
      for (const segment of segmentText(sample.text, sample.highlights)) {
        item.appendChild(el(segment.highlighted ? "mark" : "span",
                            segment.highlighted ? "kw" : undefined, segment.text));
      }
      list.appendChild(item);
    }
    main.appendChild(list);
  }
  root.appendChild(main);

  const controls = el("div", "controls");
  for (const [verdict, label] of [
    ["pertinent", "pertinent (p)"],
    ["other_sense", "other sense (o)"],
    ["other_category", "other category (c)"],
  ] as const) {
    const button = el("button", `verdict ${verdict}`, label) as HTMLButtonElement;
    button.disabled = !canSubmit(state);
    button.addEventListener("click", () => onVerdict(verdict));
    controls.appendChild(button);
  }
  root.appendChild(controls);
  root.appendChild(el("p", "help", SHORTCUT_HELP));
}
