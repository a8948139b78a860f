"""Objective and subjective evaluation: distinguishable dark-step counting,
per-pixel delta E statistics, and pair-comparison scoring by win points or
Bradley-Terry maximum-likelihood strengths.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, asdict

import numpy as np

from .colorcore import LabImage
from .pressmodel import MeasurementSet


@dataclass(frozen=True)
class Judgment:
    session_id: str
    judge_id: str
    pair_id: str
    left: str
    right: str
    choice: str          # "left" or "right"
    timestamp: str       # ISO-8601

    def __post_init__(self):
        if self.left == self.right:
            raise ValueError("left and right variants must differ")
        if self.choice not in ("left", "right"):
            raise ValueError(f"choice must be 'left' or 'right', got {self.choice!r}")

    @property
    def winner(self) -> str:
        return self.left if self.choice == "left" else self.right

    @property
    def loser(self) -> str:
        return self.right if self.choice == "left" else self.left

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, line: str) -> "Judgment":
        return cls(**json.loads(line))


@dataclass
class RankingResult:
    points: dict[str, int]
    strengths: dict[str, float] | None
    n_judgments: int
    degenerate: bool = False


def shadow_detail_count(meas: MeasurementSet, order: list[str],
                        threshold: float = 1.0, band_max: float = 40.0) -> int:
    """Count adjacent dark-to-light pairs that are visually distinguishable:
    both members at L* <= band_max and separated by at least threshold."""
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    missing = [i for i in order if i not in meas.entries]
    if missing:
        raise ValueError(f"missing patch ids: {missing}")
    lightness = np.array([meas.entries[i].L for i in order])
    in_band = lightness <= band_max
    gaps = np.abs(np.diff(lightness))
    return int(np.sum(in_band[:-1] & in_band[1:] & (gaps >= threshold)))


def delta_e_report(original: LabImage, reproduced: LabImage) -> dict[str, float]:
    if (original.width, original.height) != (reproduced.width, reproduced.height):
        raise ValueError("image dimensions differ")
    de = np.sqrt(np.sum((original.lab - reproduced.lab) ** 2, axis=-1))
    return {
        "mean": float(de.mean()),
        "max": float(de.max()),
        "p95": float(np.percentile(de, 95)),
    }


def score_points(judgments: list[Judgment]) -> RankingResult:
    """One point to the chosen variant per judgment."""
    if not judgments:
        raise ValueError("no judgments")
    points: dict[str, int] = {}
    for j in judgments:
        points[j.winner] = points.get(j.winner, 0) + 1
        points.setdefault(j.loser, 0)
    return RankingResult(points=points, strengths=None, n_judgments=len(judgments))


def _win_matrix(judgments: list[Judgment]):
    variants = sorted({v for j in judgments for v in (j.left, j.right)})
    index = {v: i for i, v in enumerate(variants)}
    wins = np.zeros((len(variants), len(variants)))
    for j in judgments:
        wins[index[j.winner], index[j.loser]] += 1
    return variants, wins


def _connected_components(variants, wins):
    adj = (wins + wins.T) > 0
    seen = set()
    components = []
    for start in range(len(variants)):
        if start in seen:
            continue
        stack, comp = [start], []
        while stack:
            v = stack.pop()
            if v in seen:
                continue
            seen.add(v)
            comp.append(variants[v])
            stack.extend(np.where(adj[v])[0])
        components.append(sorted(comp))
    return components


def bradley_terry(judgments: list[Judgment], max_iter: int = 10_000,
                  tol: float = 1e-10) -> RankingResult:
    """Bradley-Terry strengths by the MM iteration, normalized to sum 1.

    If some variant never wins or never loses the MLE diverges; the result is
    flagged degenerate and carries point scores only."""
    result = score_points(judgments)
    variants, wins = _win_matrix(judgments)
    components = _connected_components(variants, wins)
    if len(components) > 1:
        raise ValueError(f"comparison graph is disconnected: {components}")

    w = wins.sum(axis=1)
    losses = wins.sum(axis=0)
    if np.any(w == 0) or np.any(losses == 0):
        result.degenerate = True
        return result

    total = wins + wins.T
    p = np.ones(len(variants))
    for _ in range(max_iter):
        denom = (total / (p[:, None] + p[None, :]))
        np.fill_diagonal(denom, 0.0)
        p_new = w / denom.sum(axis=1)
        p_new /= p_new.sum()
        if np.max(np.abs(p_new - p) / np.maximum(p, 1e-300)) < tol:
            p = p_new
            break
        p = p_new
    result.strengths = {v: float(s) for v, s in zip(variants, p)}
    return result


def ranking_report(result: RankingResult) -> str:
    """Plain-text ranking table."""
    lines = [f"judgments: {result.n_judgments}"]
    ranked = sorted(result.points.items(), key=lambda kv: -kv[1])
    for name, pts in ranked:
        line = f"  {name:20s} points={pts}"
        if result.strengths is not None:
            line += f" strength={result.strengths[name]:.4f}"
        lines.append(line)
    if result.degenerate:
        lines.append("  (degenerate comparison data: strengths omitted)")
    return "\n".join(lines)
