"""Disruption scores for focal papers in a citation network.

For a focal paper i, every other paper falls into at most one class:
F (cites i but none of i's qualifying references), B (cites i and at
least one qualifying reference), or the R-class (cites a qualifying
reference but not i). The score is

    d = (n_f - n_b) / (n_f + n_b + n_r)

and is Undefined (d = None) when all three counts are zero; it is never
coerced to 0.

Two notions of "qualifying" are supported. Mode ``ref_indegree`` (the
default) keeps a reference only if its corpus-wide citation count is at
least l; the focal paper's own citation counts toward that in-degree,
which is what makes every reference qualify at l = 1 and the l = 1
variant collapse to the base score. Mode ``overlap`` instead requires a
citer to share at least l references with the focal paper to land in B,
while the R-class keeps the share-at-least-one rule at every l.
"""

from __future__ import annotations

import csv
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from ._kernels import partition_counts
from .graph import CitationGraph

MODES = ("ref_indegree", "overlap")

DEFAULT_THRESHOLDS = (1, 2, 3, 5)

SCORE_COLUMNS = ("id", "l", "n_f", "n_b", "n_r", "d")


@dataclass(frozen=True)
class CiterPartition:
    n_f: int
    n_b: int
    n_r: int
    l: int
    mode: str

    def __post_init__(self):
        if min(self.n_f, self.n_b, self.n_r) < 0:
            raise ValueError("partition counts must be >= 0")
        if self.l < 1:
            raise ValueError(f"threshold must be >= 1, got {self.l}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")

    @property
    def counts(self) -> tuple[int, int, int]:
        return (self.n_f, self.n_b, self.n_r)


@dataclass(frozen=True)
class DisruptionScore:
    paper_id: str
    partition: CiterPartition
    d: float | None

    @property
    def defined(self) -> bool:
        return self.d is not None


def _score_from_counts(n_f: int, n_b: int, n_r: int) -> float | None:
    denom = n_f + n_b + n_r
    if denom == 0:
        return None
    return (n_f - n_b) / denom


def _validate_mode_and_thresholds(ls: Sequence[int], mode: str) -> list[int]:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    if not ls:
        raise ValueError("threshold list must be non-empty")
    cleaned = sorted({int(l) for l in ls})
    if cleaned[0] < 1:
        raise ValueError(f"thresholds must be >= 1, got {cleaned[0]}")
    return cleaned


def _focal_indices(graph: CitationGraph, ids: Sequence[str]) -> np.ndarray:
    idx = np.empty(len(ids), dtype=np.int64)
    for pos, paper_id in enumerate(ids):
        found = graph.index.get(paper_id)
        if found is None:
            raise KeyError(f"unknown focal paper {paper_id!r}")
        idx[pos] = found
    return idx


def _counts_for(graph: CitationGraph, focals: np.ndarray, ls: Sequence[int],
                mode: str, n_jobs: int | None = 1):
    ls_arr = np.asarray(ls, dtype=np.int64)
    overlap = mode == "overlap"
    args = (graph.fwd_indptr, graph.fwd_indices, graph.bwd_indptr,
            graph.bwd_indices, graph.in_deg)
    if n_jobs is None:
        n_jobs = os.cpu_count() or 1
    n_jobs = max(1, min(int(n_jobs), len(focals) or 1))
    if n_jobs == 1 or len(focals) < 2 * n_jobs:
        return partition_counts(*args, focals, ls_arr, overlap)
    chunks = np.array_split(focals, n_jobs)
    with ThreadPoolExecutor(max_workers=n_jobs) as pool:
        parts = list(pool.map(
            lambda chunk: partition_counts(*args, chunk, ls_arr, overlap),
            chunks,
        ))
    n_f = np.concatenate([p[0] for p in parts])
    n_b = np.concatenate([p[1] for p in parts])
    n_r = np.concatenate([p[2] for p in parts])
    return n_f, n_b, n_r


def partition_citers(graph: CitationGraph, focal: str, l: int = 1,
                     mode: str = "ref_indegree") -> CiterPartition:
    """Classify every other paper as F, B, or R-class relative to focal."""
    if int(l) < 1:
        raise ValueError(f"threshold must be >= 1, got {l}")
    [l_clean] = _validate_mode_and_thresholds([l], mode)
    focals = _focal_indices(graph, [focal])
    n_f, n_b, n_r = _counts_for(graph, focals, [l_clean], mode)
    return CiterPartition(n_f=int(n_f[0, 0]), n_b=int(n_b[0, 0]),
                          n_r=int(n_r[0, 0]), l=l_clean, mode=mode)


def disruption_score(graph: CitationGraph, focal: str, l: int = 1,
                     mode: str = "ref_indegree") -> DisruptionScore:
    part = partition_citers(graph, focal, l=l, mode=mode)
    return DisruptionScore(paper_id=focal, partition=part,
                           d=_score_from_counts(*part.counts))


def disruption_batch(graph: CitationGraph, ids: Sequence[str],
                     ls: Sequence[int] = DEFAULT_THRESHOLDS,
                     mode: str = "ref_indegree",
                     n_jobs: int | None = 1) -> list[DisruptionScore]:
    """Score each id at each threshold; rows ordered by input id then
    ascending l. The citer scan per focal is shared across thresholds,
    and focal papers are processed in parallel when n_jobs > 1."""
    ls_clean = _validate_mode_and_thresholds(ls, mode)
    focals = _focal_indices(graph, ids)
    if len(ids) == 0:
        return []
    n_f, n_b, n_r = _counts_for(graph, focals, ls_clean, mode, n_jobs=n_jobs)
    out: list[DisruptionScore] = []
    for pos, paper_id in enumerate(ids):
        for j, l in enumerate(ls_clean):
            part = CiterPartition(n_f=int(n_f[pos, j]), n_b=int(n_b[pos, j]),
                                  n_r=int(n_r[pos, j]), l=l, mode=mode)
            out.append(DisruptionScore(paper_id=paper_id, partition=part,
                                       d=_score_from_counts(*part.counts)))
    return out


def format_score(d: float | None) -> str:
    return "NA" if d is None else f"{d:.6f}"


def write_scores(scores: Sequence[DisruptionScore], path: str | Path) -> None:
    """CSV with columns id, l, n_f, n_b, n_r, d (6 decimals, NA when
    Undefined)."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SCORE_COLUMNS)
        for s in scores:
            p = s.partition
            writer.writerow([s.paper_id, p.l, p.n_f, p.n_b, p.n_r, format_score(s.d)])


def read_scores(path: str | Path) -> list[DisruptionScore]:
    """Parse a table written by write_scores. Mode is not stored in the
    file, so partitions are tagged with the default mode."""
    out: list[DisruptionScore] = []
    with Path(path).open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != list(SCORE_COLUMNS):
            raise ValueError(f"{path}: unexpected header {header}")
        for row in reader:
            if not row:
                continue
            paper_id, l, n_f, n_b, n_r, d_text = row
            part = CiterPartition(n_f=int(n_f), n_b=int(n_b), n_r=int(n_r),
                                  l=int(l), mode="ref_indegree")
            d = None if d_text == "NA" else float(d_text)
            out.append(DisruptionScore(paper_id=paper_id, partition=part, d=d))
    return out
