import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

const here = dirname(fileURLToPath(import.meta.url));

/** Load a captured service response (real bytes from a seeded service). */
export function fixture<T>(name: string): T {
  return JSON.parse(readFileSync(join(here, "fixtures", name), "utf-8")) as T;
}

/** All numbers that appear anywhere in a JSON body (for dumb-client checks). */
export function numbersIn(value: unknown, out: Set<number> = new Set()): Set<number> {
  if (typeof value === "number") {
    out.add(value);
  } else if (Array.isArray(value)) {
    for (const item of value) {
      numbersIn(item, out);
    }
  } else if (value !== null && typeof value === "object") {
    for (const item of Object.values(value)) {
      numbersIn(item, out);
    }
  }
  return out;
}
