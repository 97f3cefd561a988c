/** Browser entry point: wires ProofApp to the page. */

import { Api, ApiError } from "./api.js";
import { ProofApp } from "./app.js";
import { renderRules, renderSequent, renderStatus, renderTree } from "./render.js";

const api = new Api("", (url, init) => fetch(url, init));
const app = new ProofApp(api, window.localStorage);

function el(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (node === null) throw new Error(`missing element #${id}`);
  return node;
}

function redraw(): void {
  el("banner").textContent = app.schemaMismatch ?? "";
  el("status").innerHTML = renderStatus(app.status);
  const goalList = app.goals
    .map(
      (g) =>
        `<li><a href="#" class="goal" data-id="${g.id}">${g.id}</a> ` +
        `<code>${renderSequent(g)}</code></li>`,
    )
    .join("");
  el("goals").innerHTML = `<ul>${goalList}</ul>`;
  el("rules").innerHTML = app.selectedGoal
    ? renderRules(app.selectedGoal, app.rules)
    : "";
  el("tree").innerHTML = Object.entries(app.trees)
    .map(([fn, t]) => `<h3>${fn}</h3>${renderTree(t)}`)
    .join("");
}

function notify(err: unknown): void {
  el("banner").textContent =
    err instanceof ApiError ? `${err.error}: ${err.reason}` : String(err);
}

async function action(run: () => Promise<void>): Promise<void> {
  try {
    await run();
  } catch (err) {
    notify(err);
  }
  redraw();
}

function collectInputs(rule: string): Record<string, string> {
  const inputs: Record<string, string> = {};
  document
    .querySelectorAll<HTMLInputElement>(`.rule-input[data-rule="${rule}"]`)
    .forEach((box) => {
      const key = box.dataset.input;
      if (key !== undefined && box.value !== "") inputs[key] = box.value;
    });
  return inputs;
}

export function start(): void {
  el("open").addEventListener("click", () =>
    action(() =>
      app.createSession(
        (el("source") as HTMLTextAreaElement).value,
        (el("overflow") as HTMLSelectElement).value,
      ),
    ),
  );
  el("auto").addEventListener("click", () => action(() => app.runAuto()));
  el("undo").addEventListener("click", () => action(() => app.undo()));

  el("goals").addEventListener("click", (ev) => {
    const target = ev.target as HTMLElement;
    const link = target.closest<HTMLElement>("a.goal");
    if (link?.dataset.id) {
      ev.preventDefault();
      void action(() => app.selectGoal(link.dataset.id!));
    }
  });

  el("rules").addEventListener("click", (ev) => {
    const btn = (ev.target as HTMLElement).closest<HTMLElement>("button.apply");
    const goal = app.selectedGoal;
    if (btn?.dataset.rule && goal) {
      const rule = btn.dataset.rule;
      void action(() => app.apply(goal.id, rule, [1, 0], collectInputs(rule)));
    }
  });

  void action(() => app.boot());
}

if (typeof document !== "undefined" && document.getElementById("open")) {
  start();
}
