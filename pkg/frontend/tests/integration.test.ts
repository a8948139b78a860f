/** Session integrity against the real backend: four variants give six pairs;
 * a scripted session must yield exactly six judgment lines, double submits
 * must be rejected, and /api/results must agree with per-win point scoring
 * computed from the judgment file. */

import { spawn, ChildProcess } from "node:child_process";
import { mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { fetchClient, runSession } from "../src/logic";

function writePpm(path: string, level: number): void {
  const w = 8;
  const h = 8;
  const header = Buffer.from(`P6\n${w} ${h}\n255\n`);
  const raster = Buffer.alloc(w * h * 3, level);
  writeFileSync(path, Buffer.concat([header, raster]));
}

let server: ChildProcess;
let baseUrl = "";
let judgmentPath = "";

beforeAll(async () => {
  const dir = mkdtempSync(join(tmpdir(), "paircomp-"));
  judgmentPath = join(dir, "judgments.jsonl");
  const variants = ["a", "b", "c", "d"]; // four variants: six pairs
  const args = ["-u", "-m", "keytone.cli", "serve", "--session-id", "it",
                "--judgments", judgmentPath, "--port", "0", "--seed", "5"];
  variants.forEach((name, i) => {
    const img = join(dir, `${name}.ppm`);
    writePpm(img, 40 + i * 50);
    args.push("--variant", `${name}=${img}`);
  });
  server = spawn("python3", args, { stdio: ["ignore", "pipe", "pipe"] });
  baseUrl = await new Promise<string>((resolve, reject) => {
    let out = "";
    server.stdout!.on("data", (chunk) => {
      out += chunk.toString();
      const m = out.match(/on (http:\/\/[\d.]+:\d+)\//);
      if (m) resolve(m[1]);
    });
    server.on("exit", (code) => reject(new Error(`server exited (${code})`)));
    setTimeout(() => reject(new Error("server did not start")), 10000);
  });
}, 15000);

afterAll(() => {
  server?.kill();
});

describe("scripted session of six pairs", () => {
  it("records exactly six judgments and consistent results", async () => {
    const http = fetchClient(baseUrl);

    const session = await http.getJson("/api/session");
    expect(session.status).toBe(200);
    expect(session.body.session.pairs).toHaveLength(6);

    // deterministic preference: always pick left
    const outcome = await runSession(http, "judge-1", () => "left");
    expect(outcome).toEqual({ accepted: 6, duplicates: 0 });

    const lines = readFileSync(judgmentPath, "utf-8")
      .split("\n")
      .filter((ln) => ln.trim().length > 0);
    expect(lines).toHaveLength(6);
    const records = lines.map((ln) => JSON.parse(ln));
    const seen = new Set(records.map((r) => `${r.judge_id}:${r.pair_id}`));
    expect(seen.size).toBe(6); // no duplicates on disk
    for (const r of records) {
      expect(r.choice).toBe("left");
      expect(r.session_id).toBe("it");
    }

    // double-click replay: same judge and pair again must be rejected
    const dup = await http.postJson("/api/judgment", {
      judge_id: "judge-1",
      pair_id: records[0].pair_id,
      choice: "right",
    });
    expect(dup.status).toBe(409);
    const after = readFileSync(judgmentPath, "utf-8")
      .split("\n")
      .filter((ln) => ln.trim().length > 0);
    expect(after).toHaveLength(6);

    // /api/results must match one-point-per-win scoring of the same file
    const expected: Record<string, number> = {};
    for (const r of records) {
      const winner = r.choice === "left" ? r.left : r.right;
      const loser = r.choice === "left" ? r.right : r.left;
      expected[winner] = (expected[winner] ?? 0) + 1;
      expected[loser] = expected[loser] ?? 0;
    }
    const results = await http.getJson("/api/results");
    expect(results.status).toBe(200);
    expect(results.body.n_judgments).toBe(6);
    expect(results.body.points).toEqual(expected);
  }, 20000);

  it("serves the judging page and images without variant names", async () => {
    const page = await fetch(`${baseUrl}/`);
    expect(page.status).toBe(200);
    const html = await page.text();
    expect(html).toContain("Pair comparison");
    // blinding: the markup never mentions the variant names
    for (const name of ["a.ppm", "b.ppm", "c.ppm", "d.ppm"]) {
      expect(html).not.toContain(name);
    }
    const img = await fetch(`${baseUrl}/img/a`);
    expect(img.status).toBe(200);
    expect(img.headers.get("content-type")).toBe("image/x-portable-pixmap");
  });
});
