/** DOM layer: joins a session, shows pairs side by side, records choices.
 *
 * Blinding: pair images are fetched as blobs and shown through object URLs,
 * so variant names never appear in the DOM, the page title or any visible
 * URL. The judge only ever sees "left" and "right".
 */

import {
  Choice,
  PairView,
  RetryQueue,
  SubmitGuard,
  choiceFromKey,
  fetchClient,
  parseNextPair,
  progressLabel,
} from "./logic.js";

interface QueuedJudgment {
  judge_id: string;
  pair_id: string;
  choice: Choice;
}

const http = fetchClient();

const el = (id: string) => document.getElementById(id)!;
const show = (id: string, on: boolean) => {
  el(id).classList.toggle("hidden", !on);
};

let judgeId = "";
let current: PairView | null = null;
let judgedCount = 0;
const guard = new SubmitGuard();
const objectUrls: string[] = [];

const queue = new RetryQueue<QueuedJudgment>(
  async (j) => {
    try {
      const reply = await http.postJson("/api/judgment", j);
      if (reply.status === 201 || reply.status === 409) {
        guard.settle(j.pair_id, true);
        if (reply.status === 201) judgedCount += 1;
        void showNextPair();
        return true;
      }
      guard.settle(j.pair_id, true); // server rejected for good; move on
      void showNextPair();
      return true;
    } catch {
      return false; // network failure: keep queued, retry
    }
  },
  1500,
  (pending) => {
    el("netstatus").textContent =
      pending > 0 ? `sending… (${pending} queued)` : "";
  },
);

async function loadImage(img: HTMLImageElement, url: string): Promise<void> {
  const r = await fetch(url);
  if (!r.ok) throw new Error(`image fetch failed (${r.status})`);
  const obj = URL.createObjectURL(await r.blob());
  objectUrls.push(obj);
  await new Promise<void>((resolve, reject) => {
    img.onload = () => resolve();
    img.onerror = () => reject(new Error("image decode failed"));
    img.src = obj;
  });
}

async function showNextPair(): Promise<void> {
  const next = await http.getJson(
    `/api/pair/next?judge=${encodeURIComponent(judgeId)}`,
  );
  if (next.status !== 200) {
    el("error").textContent = "could not reach the session server";
    return;
  }
  const pair = parseNextPair(next.body);
  if (pair === null) {
    finishSession();
    return;
  }
  current = pair;
  el("progress").textContent = progressLabel(pair.done, pair.total);
  el("error").textContent = "";
  try {
    while (objectUrls.length > 0) URL.revokeObjectURL(objectUrls.pop()!);
    await Promise.all([
      loadImage(el("img-left") as HTMLImageElement, pair.leftUrl),
      loadImage(el("img-right") as HTMLImageElement, pair.rightUrl),
    ]);
  } catch {
    el("error").textContent = "an image failed to load";
    show("retry-load", true);
    return;
  }
  show("retry-load", false);
  show("judging", true);
}

function submit(choice: Choice): void {
  if (current === null) return;
  if (!guard.begin(current.pairId)) return; // double-click or in flight
  queue.push({ judge_id: judgeId, pair_id: current.pairId, choice });
  guard.settle(current.pairId, true);
  current = null;
}

function finishSession(): void {
  show("judging", false);
  show("done", true);
  // judge's own count only; no rankings, no variant identities
  el("done-count").textContent = `${judgedCount}`;
}

function joinSession(): void {
  const input = el("judge-id") as HTMLInputElement;
  judgeId = input.value.trim();
  if (!judgeId) {
    el("join-error").textContent = "please enter a judge id";
    return;
  }
  show("join", false);
  void showNextPair();
}

export function start(): void {
  el("join-form").addEventListener("submit", (e) => {
    e.preventDefault();
    joinSession();
  });
  el("pick-left").addEventListener("click", () => submit("left"));
  el("pick-right").addEventListener("click", () => submit("right"));
  el("retry-load").addEventListener("click", () => void showNextPair());
  document.addEventListener("keydown", (e) => {
    if (el("judging").classList.contains("hidden")) return;
    const choice = choiceFromKey(e.key);
    if (choice !== null) submit(choice);
  });
}

start();
