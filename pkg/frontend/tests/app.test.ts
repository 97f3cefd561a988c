/** Contract test against a recorded proving session.
 *
 * The transcript was captured from the real service: open the product
 * function without a loop annotation, run auto (which parks at the loop),
 * supply the invariant interactively, and finish with auto.
 */

import { beforeEach, describe, expect, it } from "vitest";
import { fileURLToPath } from "node:url";
import { dirname, join } from "node:path";

import { Api } from "../src/api.js";
import { ProofApp } from "../src/app.js";
import { renderRules } from "../src/render.js";
import { loadFixture, MemoryStorage, ScriptedFetch } from "./scripted.js";
import type { TreeNode } from "../src/api.js";

const here = dirname(fileURLToPath(import.meta.url));
const fixture = loadFixture(join(here, "fixtures", "loop_product_session.json"));

function findRule(node: TreeNode, rule: string): TreeNode | null {
  if (node.rule === rule) return node;
  for (const child of node.children) {
    const hit = findRule(child, rule);
    if (hit !== null) return hit;
  }
  return null;
}

describe("loop-product proving session", () => {
  let scripted: ScriptedFetch;
  let storage: MemoryStorage;
  let app: ProofApp;

  beforeEach(() => {
    scripted = new ScriptedFetch(fixture.requests);
    storage = new MemoryStorage();
    app = new ProofApp(new Api("", scripted.fetch), storage);
  });

  it("closes the proof interactively and survives a reload", async () => {
    await app.boot();
    expect(app.schemaMismatch).toBeNull();

    await app.createSession(fixture.source, "ignore");
    expect(app.status).toEqual({ product: "Open" });

    // auto parks at the unannotated loop
    await app.runAuto();
    expect(app.status.product).toBe("Open");
    expect(app.goals).toHaveLength(1);
    const parked = app.goals[0];
    expect(parked.reason).toContain("invariant");

    // the rule list offers the loop rule and asks for an invariant
    await app.selectGoal(parked.id);
    const loopRule = app.rules.find((r) => r.name === "loopScopeInvBox");
    expect(loopRule).toBeDefined();
    expect(loopRule!.needs).toContain("invariant");
    const html = renderRules(parked, app.rules);
    expect(html).toContain('data-input="invariant"');
    expect(html).toContain("invariant");

    // supplying the invariant splits the goal into the two loop branches
    await app.apply(parked.id, "loopScopeInvBox", [1, 0], {
      invariant: fixture.invariant,
    });
    expect(app.goals).toHaveLength(2);
    const loopNode = findRule(app.trees.product, "loopScopeInvBox");
    expect(loopNode).not.toBeNull();
    expect(loopNode!.children.map((c) => c.branch)).toEqual([
      "initially valid",
      "preserved",
    ]);

    // auto discharges both branches
    await app.runAuto();
    expect(app.status).toEqual({ product: "Closed" });
    expect(app.goals).toHaveLength(0);
    const finished = app.trees;

    // a reload rebuilds the identical tree from the stored session id
    const reloaded = new ProofApp(new Api("", scripted.fetch), storage);
    await reloaded.boot();
    expect(reloaded.sessionId).toBe(fixture.session_id);
    expect(reloaded.status).toEqual({ product: "Closed" });
    expect(reloaded.trees).toEqual(finished);

    expect(scripted.exhausted).toBe(true);
  });
});
