/** Typed client for the proof session service's JSON API. */

export const SUPPORTED_SCHEMA_VERSION = 1;

export interface FormulaTree {
  kind: string;
  text: string;
  children: FormulaTree[];
}

export interface PositionedFormula {
  path: number[];
  text: string;
  tree: FormulaTree;
}

export interface Goal {
  id: string;
  function: string;
  pretty: string;
  reason: string;
  ante: PositionedFormula[];
  succ: PositionedFormula[];
}

export interface GoalsDoc {
  revision: number;
  status: Record<string, string>;
  goals: Goal[];
}

export interface RuleInfo {
  name: string;
  needs: string[];
  description: string;
}

export interface TreeNode {
  id: string;
  rule: string | null;
  branch: string;
  pretty: string;
  children: TreeNode[];
}

export interface TreeDoc {
  revision: number;
  trees: Record<string, TreeNode>;
}

export interface ApplyResult {
  revision: number;
  goals: string[];
  status: Record<string, string>;
}

export interface AutoResult {
  revision: number;
  results: Record<string, { status: string; steps: number; open: string[] }>;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly error: string,
    readonly reason: string,
  ) {
    super(`${error}: ${reason}`);
  }
}

/** Minimal fetch shape so tests can substitute a scripted transport. */
export type FetchLike = (
  url: string,
  init?: { method?: string; headers?: Record<string, string>; body?: string },
) => Promise<{ status: number; json(): Promise<unknown> }>;

export class Api {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike,
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: Parameters<FetchLike>[1] = { method };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const res = await this.fetchFn(this.baseUrl + path, init);
    const doc = (await res.json()) as Record<string, unknown>;
    if (res.status >= 400) {
      throw new ApiError(
        res.status,
        String(doc.error ?? "Error"),
        String(doc.reason ?? JSON.stringify(doc)),
      );
    }
    return doc as T;
  }

  schema(): Promise<{ schema_version: number }> {
    return this.request("GET", "/schema");
  }

  createSession(source: string, overflow: string): Promise<{
    session_id: string;
    functions: string[];
    revision: number;
  }> {
    return this.request("POST", "/sessions", { source, overflow });
  }

  goals(sessionId: string): Promise<GoalsDoc> {
    return this.request("GET", `/sessions/${sessionId}/goals`);
  }

  tree(sessionId: string): Promise<TreeDoc> {
    return this.request("GET", `/sessions/${sessionId}/tree`);
  }

  rules(goalId: string, side: number, index: number): Promise<{
    revision: number;
    rules: RuleInfo[];
  }> {
    return this.request("GET", `/goals/${goalId}/rules?side=${side}&index=${index}`);
  }

  apply(
    goalId: string,
    rule: string,
    path: number[],
    inputs: Record<string, string>,
    revision: number,
  ): Promise<ApplyResult> {
    return this.request("POST", `/goals/${goalId}/apply`, {
      rule,
      path,
      inputs,
      revision,
    });
  }

  auto(sessionId: string, revision: number): Promise<AutoResult> {
    return this.request("POST", `/sessions/${sessionId}/auto`, { revision });
  }

  undo(sessionId: string, revision: number): Promise<{
    revision: number;
    status: Record<string, string>;
  }> {
    return this.request("POST", `/sessions/${sessionId}/undo`, { revision });
  }

  proof(sessionId: string): Promise<{ revision: number; proofs: unknown }> {
    return this.request("GET", `/sessions/${sessionId}/proof`);
  }
}
