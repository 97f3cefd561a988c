/** Pure HTML-string renderers.
 *
 * All verdicts, rule lists, and formula texts come verbatim from the
 * service; these functions only lay them out. Keeping them string-pure
 * makes them trivially testable without a DOM.
 */

import { Goal, PositionedFormula, RuleInfo, TreeNode } from "./api.js";

export function escapeHtml(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function formulaSpan(f: PositionedFormula): string {
  const path = escapeHtml(JSON.stringify(f.path));
  return `<span class="formula" data-path="${path}">${escapeHtml(f.text)}</span>`;
}

/** A sequent as clickable antecedent/succedent spans around a turnstile. */
export function renderSequent(goal: Goal): string {
  const ante = goal.ante.map(formulaSpan).join('<span class="comma">, </span>');
  const succ = goal.succ.map(formulaSpan).join('<span class="comma">, </span>');
  return `${ante}<span class="turnstile"> ⊢ </span>${succ}`.trim();
}

/** Rule list with input boxes for whatever each rule still needs. */
export function renderRules(goal: Goal, rules: RuleInfo[]): string {
  const items = rules.map((r) => {
    const needs = r.needs
      .map(
        (n) =>
          `<label>${escapeHtml(n)}: ` +
          `<input class="rule-input" data-rule="${escapeHtml(r.name)}" ` +
          `data-input="${escapeHtml(n)}"></label>`,
      )
      .join(" ");
    return (
      `<li><button class="apply" data-rule="${escapeHtml(r.name)}">` +
      `${escapeHtml(r.name)}</button> ` +
      `<span class="rule-doc">${escapeHtml(r.description)}</span> ${needs}</li>`
    );
  });
  const hint = goal.reason
    ? `<p class="reason">${escapeHtml(goal.reason)}</p>`
    : "";
  return `${hint}<ul class="rules">${items.join("")}</ul>`;
}

export interface FlatTreeRow {
  depth: number;
  id: string;
  rule: string | null;
  branch: string;
  open: boolean;
}

/** Depth-first flattening, truncated so huge proofs stay renderable. */
export function flattenTree(node: TreeNode, limit: number): {
  rows: FlatTreeRow[];
  truncated: number;
} {
  const rows: FlatTreeRow[] = [];
  let skipped = 0;
  const stack: Array<[TreeNode, number]> = [[node, 0]];
  while (stack.length > 0) {
    const [n, depth] = stack.pop()!;
    if (rows.length >= limit) {
      skipped += 1;
    } else {
      rows.push({
        depth,
        id: n.id,
        rule: n.rule,
        branch: n.branch,
        open: n.rule === null,
      });
    }
    for (let i = n.children.length - 1; i >= 0; i -= 1) {
      stack.push([n.children[i], depth + 1]);
    }
  }
  return { rows, truncated: skipped };
}

export function renderTree(node: TreeNode, limit = 2000): string {
  const { rows, truncated } = flattenTree(node, limit);
  const lines = rows.map((r) => {
    const cls = r.open ? "node open" : "node closed";
    const label = r.rule === null ? "(open)" : escapeHtml(r.rule);
    const branch = r.branch
      ? ` <span class="branch">[${escapeHtml(r.branch)}]</span>`
      : "";
    return (
      `<div class="${cls}" data-id="${escapeHtml(r.id)}" ` +
      `style="margin-left:${r.depth}em">${label}${branch}</div>`
    );
  });
  const more = truncated
    ? `<div class="more">… ${truncated} more nodes</div>`
    : "";
  return lines.join("") + more;
}

export function renderStatus(status: Record<string, string>): string {
  return Object.entries(status)
    .map(
      ([fn, st]) =>
        `<span class="status ${st === "Closed" ? "closed" : "open"}">` +
        `${escapeHtml(fn)}: ${escapeHtml(st)}</span>`,
    )
    .join(" ");
}
