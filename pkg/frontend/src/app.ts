/** Session state machine behind the UI.
 *
 * Holds nothing the service cannot reproduce: only the session id is kept
 * in storage, so a page reload reconstructs every view from fresh GETs.
 */

import {
  Api,
  ApiError,
  Goal,
  RuleInfo,
  SUPPORTED_SCHEMA_VERSION,
  TreeNode,
} from "./api.js";

export interface StorageLike {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
  removeItem(key: string): void;
}

const SESSION_KEY = "proof-ui.session";

export class ProofApp {
  sessionId: string | null = null;
  revision = 0;
  status: Record<string, string> = {};
  goals: Goal[] = [];
  trees: Record<string, TreeNode> = {};
  selectedGoal: Goal | null = null;
  rules: RuleInfo[] = [];
  schemaMismatch: string | null = null;

  constructor(
    private readonly api: Api,
    private readonly storage: StorageLike,
  ) {}

  /** Check the schema handshake, then resume a stored session if any. */
  async boot(): Promise<void> {
    const schema = await this.api.schema();
    if (schema.schema_version !== SUPPORTED_SCHEMA_VERSION) {
      this.schemaMismatch =
        `service speaks schema ${schema.schema_version}, ` +
        `this client expects ${SUPPORTED_SCHEMA_VERSION}`;
    }
    const stored = this.storage.getItem(SESSION_KEY);
    if (stored !== null) {
      this.sessionId = stored;
      await this.refresh();
    }
  }

  async createSession(source: string, overflow: string): Promise<void> {
    const created = await this.api.createSession(source, overflow);
    this.sessionId = created.session_id;
    this.revision = created.revision;
    this.storage.setItem(SESSION_KEY, created.session_id);
    await this.refresh();
  }

  /** Re-fetch goals and trees; the single source of truth after any step. */
  async refresh(): Promise<void> {
    if (this.sessionId === null) throw new Error("no active session");
    const goals = await this.api.goals(this.sessionId);
    const tree = await this.api.tree(this.sessionId);
    this.revision = goals.revision;
    this.status = goals.status;
    this.goals = goals.goals;
    this.trees = tree.trees;
    this.selectedGoal =
      this.goals.find((g) => g.id === this.selectedGoal?.id) ?? null;
    if (this.selectedGoal === null) this.rules = [];
  }

  async selectGoal(goalId: string, side = 1, index = 0): Promise<void> {
    const goal = this.goals.find((g) => g.id === goalId);
    if (goal === undefined) throw new Error(`unknown goal ${goalId}`);
    this.selectedGoal = goal;
    this.rules = (await this.api.rules(goalId, side, index)).rules;
  }

  /** Apply a rule; on a stale revision, re-sync and surface the conflict. */
  async apply(
    goalId: string,
    rule: string,
    path: number[],
    inputs: Record<string, string>,
  ): Promise<void> {
    try {
      await this.api.apply(goalId, rule, path, inputs, this.revision);
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        await this.refresh();
      }
      throw err;
    }
    await this.refresh();
  }

  async runAuto(): Promise<void> {
    if (this.sessionId === null) throw new Error("no active session");
    try {
      await this.api.auto(this.sessionId, this.revision);
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        await this.refresh();
      }
      throw err;
    }
    await this.refresh();
  }

  async undo(): Promise<void> {
    if (this.sessionId === null) throw new Error("no active session");
    await this.api.undo(this.sessionId, this.revision);
    await this.refresh();
  }

  closeSession(): void {
    this.sessionId = null;
    this.storage.removeItem(SESSION_KEY);
  }
}
