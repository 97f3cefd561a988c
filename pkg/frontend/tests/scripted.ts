/** Replay transport: serves a recorded service transcript in order. */

import { readFileSync } from "node:fs";
import { FetchLike } from "../src/api.js";

export interface Exchange {
  method: string;
  path: string;
  body: unknown;
  status: number;
  response: unknown;
}

export interface Fixture {
  note: string;
  session_id: string;
  source: string;
  invariant: string;
  requests: Exchange[];
}

export function loadFixture(path: string): Fixture {
  return JSON.parse(readFileSync(path, "utf-8")) as Fixture;
}

export class ScriptedFetch {
  private cursor = 0;

  constructor(private readonly script: Exchange[]) {}

  get fetch(): FetchLike {
    return async (url, init) => {
      const expected = this.script[this.cursor];
      if (expected === undefined) {
        throw new Error(`unexpected extra request: ${init?.method} ${url}`);
      }
      const method = init?.method ?? "GET";
      const body = init?.body === undefined ? null : JSON.parse(init.body);
      if (method !== expected.method || url !== expected.path) {
        throw new Error(
          `request ${this.cursor}: got ${method} ${url}, ` +
            `recorded ${expected.method} ${expected.path}`,
        );
      }
      if (JSON.stringify(sort(body)) !== JSON.stringify(sort(expected.body))) {
        throw new Error(
          `request ${this.cursor} (${url}): body ${JSON.stringify(body)} ` +
            `differs from recorded ${JSON.stringify(expected.body)}`,
        );
      }
      this.cursor += 1;
      return {
        status: expected.status,
        json: async () => expected.response,
      };
    };
  }

  get exhausted(): boolean {
    return this.cursor === this.script.length;
  }
}

/** Key-order-independent canonical form for body comparison. */
function sort(value: unknown): unknown {
  if (Array.isArray(value)) return value.map(sort);
  if (value !== null && typeof value === "object") {
    const out: Record<string, unknown> = {};
    for (const key of Object.keys(value as object).sort()) {
      out[key] = sort((value as Record<string, unknown>)[key]);
    }
    return out;
  }
  return value;
}

export class MemoryStorage {
  private items = new Map<string, string>();

  getItem(key: string): string | null {
    return this.items.get(key) ?? null;
  }

  setItem(key: string, value: string): void {
    this.items.set(key, value);
  }

  removeItem(key: string): void {
    this.items.delete(key);
  }
}
