"""Local HTTP service hosting pair-comparison sessions.

Serves the static judging UI (when built) plus a small JSON API; judgments are
appended to a JSON-lines file through a single lock-guarded writer so a crash
never corrupts previously acknowledged lines.
"""

from __future__ import annotations

import json
import os
import random
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlparse

from .evaluate import Judgment, bradley_terry, score_points

CONTENT_TYPES = {
    ".ppm": "image/x-portable-pixmap",
    ".pgm": "image/x-portable-graymap",
    ".png": "image/png",
    ".jpg": "image/jpeg",
    ".jpeg": "image/jpeg",
    ".html": "text/html; charset=utf-8",
    ".js": "application/javascript",
    ".css": "text/css",
}


@dataclass
class SessionSpec:
    session_id: str
    variants: dict[str, str]              # variant name -> image path
    pairs: list[dict]                     # {pair_id, left, right}
    judges_expected: int = 1
    seed: int = 0

    def to_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "variants": self.variants,
            "pairs": self.pairs,
            "judges_expected": self.judges_expected,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SessionSpec":
        return cls(session_id=d["session_id"], variants=dict(d["variants"]),
                   pairs=list(d["pairs"]), judges_expected=d.get("judges_expected", 1),
                   seed=d.get("seed", 0))


def make_session(session_id: str, variants: dict[str, str], seed: int = 0,
                 judges_expected: int = 1, rounds: int = 1) -> SessionSpec:
    """All-pairs round robin with side assignment randomized under the seed."""
    if len(variants) < 2:
        raise ValueError("need at least two variants")
    for name, path in variants.items():
        if not os.path.exists(path):
            raise ValueError(f"variant image missing: {path}")
    rng = random.Random(seed)
    names = sorted(variants)
    pairs = []
    counter = 0
    for _ in range(rounds):
        for i in range(len(names)):
            for j in range(i + 1, len(names)):
                left, right = names[i], names[j]
                if rng.random() < 0.5:
                    left, right = right, left
                pairs.append({"pair_id": f"P{counter:03d}", "left": left, "right": right})
                counter += 1
    rng.shuffle(pairs)
    return SessionSpec(session_id=session_id, variants=variants, pairs=pairs,
                       judges_expected=judges_expected, seed=seed)


class JudgmentStore:
    """Append-only JSON-lines judgment log with duplicate detection."""

    def __init__(self, path: str):
        self.path = path
        self.lock = threading.Lock()
        self.judgments: list[Judgment] = []
        self.seen: set[tuple[str, str]] = set()
        if os.path.exists(path):
            with open(path, encoding="utf-8") as f:
                for line in f:
                    if line.strip():
                        j = Judgment.from_json(line)
                        self.judgments.append(j)
                        self.seen.add((j.judge_id, j.pair_id))

    def append(self, j: Judgment) -> bool:
        """Persist a judgment; returns False on a duplicate (judge, pair)."""
        with self.lock:
            key = (j.judge_id, j.pair_id)
            if key in self.seen:
                return False
            with open(self.path, "a", encoding="utf-8") as f:
                f.write(j.to_json() + "\n")
                f.flush()
                os.fsync(f.fileno())
            self.judgments.append(j)
            self.seen.add(key)
            return True

    def snapshot(self) -> list[Judgment]:
        with self.lock:
            return list(self.judgments)


class PaircompHandler(BaseHTTPRequestHandler):
    # set by make_server
    session: SessionSpec
    store: JudgmentStore
    static_dir: str | None

    def log_message(self, *args):
        pass

    def _json(self, status: int, payload: dict):
        body = json.dumps(payload).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self):
        url = urlparse(self.path)
        if url.path == "/api/session":
            done = len(self.store.snapshot())
            total = len(self.session.pairs) * self.session.judges_expected
            self._json(200, {"session": self.session.to_dict(),
                             "progress": {"done": done, "total": total}})
        elif url.path == "/api/pair/next":
            self._next_pair(url)
        elif url.path == "/api/results":
            self._results()
        elif url.path.startswith("/img/"):
            self._image(url.path[len("/img/"):])
        else:
            self._static(url.path)

    def _next_pair(self, url):
        query = parse_qs(url.query)
        judge = query.get("judge", [""])[0]
        if not judge:
            self._json(400, {"error": "missing judge id"})
            return
        judged = {j.pair_id for j in self.store.snapshot() if j.judge_id == judge}
        remaining = [p for p in self.session.pairs if p["pair_id"] not in judged]
        if not remaining:
            self._json(200, {"done": True,
                             "judged": len(judged), "total": len(self.session.pairs)})
            return
        p = remaining[0]
        self._json(200, {
            "done": False,
            "pair_id": p["pair_id"],
            "left_url": f"/img/{p['left']}",
            "right_url": f"/img/{p['right']}",
            "progress": {"done": len(judged), "total": len(self.session.pairs)},
        })

    def _results(self):
        judgments = self.store.snapshot()
        if not judgments:
            self._json(200, {"n_judgments": 0, "points": {}, "strengths": None})
            return
        try:
            result = bradley_terry(judgments)
        except ValueError:
            result = score_points(judgments)
            result.degenerate = True
        self._json(200, {
            "n_judgments": result.n_judgments,
            "points": result.points,
            "strengths": result.strengths,
            "degenerate": result.degenerate,
        })

    def _image(self, variant: str):
        path = self.session.variants.get(variant)
        if path is None or not os.path.exists(path):
            self._json(404, {"error": f"unknown variant {variant!r}"})
            return
        ext = os.path.splitext(path)[1].lower()
        with open(path, "rb") as f:
            body = f.read()
        self.send_response(200)
        self.send_header("Content-Type", CONTENT_TYPES.get(ext, "application/octet-stream"))
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _static(self, path: str):
        if self.static_dir is None:
            self._json(404, {"error": "no UI assets installed"})
            return
        rel = "index.html" if path in ("/", "") else path.lstrip("/")
        full = os.path.realpath(os.path.join(self.static_dir, rel))
        if not full.startswith(os.path.realpath(self.static_dir)) or not os.path.isfile(full):
            self._json(404, {"error": "not found"})
            return
        ext = os.path.splitext(full)[1].lower()
        with open(full, "rb") as f:
            body = f.read()
        self.send_response(200)
        self.send_header("Content-Type", CONTENT_TYPES.get(ext, "application/octet-stream"))
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_POST(self):
        if urlparse(self.path).path != "/api/judgment":
            self._json(404, {"error": "not found"})
            return
        length = int(self.headers.get("Content-Length", "0"))
        try:
            payload = json.loads(self.rfile.read(length))
        except json.JSONDecodeError:
            self._json(400, {"error": "invalid JSON"})
            return
        pair = next((p for p in self.session.pairs
                     if p["pair_id"] == payload.get("pair_id")), None)
        if pair is None:
            self._json(404, {"error": "unknown pair"})
            return
        try:
            judgment = Judgment(
                session_id=self.session.session_id,
                judge_id=str(payload["judge_id"]),
                pair_id=pair["pair_id"],
                left=pair["left"],
                right=pair["right"],
                choice=str(payload["choice"]),
                timestamp=payload.get("timestamp")
                or datetime.now(timezone.utc).isoformat(),
            )
        except (KeyError, ValueError) as exc:
            self._json(400, {"error": str(exc)})
            return
        if not judgment.judge_id:
            self._json(400, {"error": "missing judge_id"})
            return
        if self.store.append(judgment):
            self._json(201, {"ok": True})
        else:
            self._json(409, {"error": "duplicate judgment for this judge and pair"})


def make_server(session: SessionSpec, judgment_path: str, port: int = 0,
                static_dir: str | None = None) -> ThreadingHTTPServer:
    handler = type("BoundHandler", (PaircompHandler,), {
        "session": session,
        "store": JudgmentStore(judgment_path),
        "static_dir": static_dir,
    })
    return ThreadingHTTPServer(("127.0.0.1", port), handler)
