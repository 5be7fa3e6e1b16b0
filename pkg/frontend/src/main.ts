/** Entry point: wire the controller to the DOM and keyboard. */

import { AnnotationApi } from "./api.js";
import { Controller } from "./controller.js";
import { actionForKey } from "./keyboard.js";
import { OfflineQueue } from "./offlineQueue.js";
import { renderApp } from "./render.js";
import type { Verdict } from "./types.js";

const params = new URLSearchParams(window.location.search);
const serviceUrl = params.get("service") ?? "";
const annotatorId = params.get("annotator") ?? "console";

const root = document.getElementById("app");
if (!root) throw new Error("missing #app mount point");

const api = new AnnotationApi(serviceUrl);
const queue = new OfflineQueue(window.localStorage);
const controller = new Controller(api, queue, annotatorId, (state) => {
  renderApp(root, state,
            (category) => void controller.selectCategory(category),
            (verdict) => void submit(verdict as Verdict),
            () => void controller.reconnect());
});

async function submit(verdict: Verdict): Promise<void> {
  if (verdict === "other_category") {
    const redirect = window.prompt("redirect to category (e.g. RES):") ?? "";
    if (!redirect) return;
    await controller.submit(verdict, redirect.toUpperCase());
    return;
  }
  await controller.submit(verdict);
}

function nextCategory(): void {
  const cats = controller.state.categories;
  if (cats.length === 0) return;
  const current = cats.findIndex((c) => c.category === controller.state.active);
  const next = cats[(current + 1) % cats.length];
  if (next) void controller.selectCategory(next.category);
}

window.addEventListener("keydown", (event) => {
  if (event.target instanceof HTMLInputElement) return;
  const action = actionForKey(event.key);
  if (!action) return;
  event.preventDefault();
  if (action.kind === "verdict") void submit(action.verdict);
  else if (action.kind === "next-category") nextCategory();
  else void controller.reconnect();
});

window.addEventListener("online", () => void controller.reconnect());

void controller.start();
