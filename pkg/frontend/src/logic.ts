/** Framework-free session logic: everything here is pure or driven through
 * an injected HTTP client, so it is unit-testable without a DOM. */

export type Choice = "left" | "right";

export interface PairView {
  pairId: string;
  leftUrl: string;
  rightUrl: string;
  done: number;
  total: number;
}

export interface NextPairBody {
  done: boolean;
  pair_id?: string;
  left_url?: string;
  right_url?: string;
  judged?: number;
  total?: number;
  progress?: { done: number; total: number };
}

/** Null when the judge has no pairs left. */
export function parseNextPair(body: NextPairBody): PairView | null {
  if (body.done) return null;
  if (!body.pair_id || !body.left_url || !body.right_url) {
    throw new Error("malformed pair payload");
  }
  return {
    pairId: body.pair_id,
    leftUrl: body.left_url,
    rightUrl: body.right_url,
    done: body.progress?.done ?? 0,
    total: body.progress?.total ?? 0,
  };
}

export function choiceFromKey(key: string): Choice | null {
  if (key === "ArrowLeft") return "left";
  if (key === "ArrowRight") return "right";
  return null;
}

export function progressLabel(done: number, total: number): string {
  return `${done} / ${total} pairs judged`;
}

/** One judgment per pair, at most one submission in flight. */
export class SubmitGuard {
  private inFlight = false;
  private submitted = new Set<string>();

  /** True when the caller may submit for this pair; marks it in flight. */
  begin(pairId: string): boolean {
    if (this.inFlight || this.submitted.has(pairId)) return false;
    this.inFlight = true;
    return true;
  }

  /** Release the in-flight slot; on success the pair is locked for good. */
  settle(pairId: string, accepted: boolean): void {
    this.inFlight = false;
    if (accepted) this.submitted.add(pairId);
  }

  has(pairId: string): boolean {
    return this.submitted.has(pairId);
  }
}

/** Ordered retry queue: items are sent strictly in push order, one at a
 * time; a failed send is retried (same item first) after `delayMs`. */
export class RetryQueue<T> {
  private items: T[] = [];
  private draining = false;

  constructor(
    private readonly send: (item: T) => Promise<boolean>,
    private readonly delayMs = 1000,
    private readonly onStatus: (pending: number) => void = () => {},
  ) {}

  get pending(): number {
    return this.items.length;
  }

  push(item: T): void {
    this.items.push(item);
    this.onStatus(this.items.length);
    void this.drain();
  }

  private async drain(): Promise<void> {
    if (this.draining) return;
    this.draining = true;
    try {
      while (this.items.length > 0) {
        const ok = await this.send(this.items[0]);
        if (ok) {
          this.items.shift();
          this.onStatus(this.items.length);
        } else {
          await new Promise((r) => setTimeout(r, this.delayMs));
        }
      }
    } finally {
      this.draining = false;
    }
  }

  /** Resolves once everything pushed so far has been acknowledged. */
  async flush(): Promise<void> {
    while (this.items.length > 0 || this.draining) {
      await new Promise((r) => setTimeout(r, 5));
    }
  }
}

export interface HttpReply {
  status: number;
  body: any;
}

export interface HttpClient {
  getJson(url: string): Promise<HttpReply>;
  postJson(url: string, payload: unknown): Promise<HttpReply>;
}

export function fetchClient(baseUrl = ""): HttpClient {
  return {
    async getJson(url) {
      const r = await fetch(baseUrl + url);
      return { status: r.status, body: await r.json() };
    },
    async postJson(url, payload) {
      const r = await fetch(baseUrl + url, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(payload),
      });
      return { status: r.status, body: await r.json() };
    },
  };
}

export interface SessionOutcome {
  accepted: number;
  duplicates: number;
}

/** Drive a whole judging session: fetch pairs until the server reports the
 * judge done, submitting one forced choice per pair. A 409 (already judged)
 * advances without counting; any other error aborts. */
export async function runSession(
  http: HttpClient,
  judgeId: string,
  choose: (pair: PairView) => Choice | Promise<Choice>,
): Promise<SessionOutcome> {
  const outcome: SessionOutcome = { accepted: 0, duplicates: 0 };
  for (;;) {
    const next = await http.getJson(
      `/api/pair/next?judge=${encodeURIComponent(judgeId)}`,
    );
    if (next.status !== 200) {
      throw new Error(`pair fetch failed with status ${next.status}`);
    }
    const pair = parseNextPair(next.body as NextPairBody);
    if (pair === null) return outcome;
    const reply = await http.postJson("/api/judgment", {
      judge_id: judgeId,
      pair_id: pair.pairId,
      choice: await choose(pair),
    });
    if (reply.status === 201) outcome.accepted += 1;
    else if (reply.status === 409) outcome.duplicates += 1;
    else throw new Error(`judgment rejected with status ${reply.status}`);
  }
}
