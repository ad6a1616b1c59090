"""Synthetic citation corpora with known ground truth.

Papers are generated in chronological order and cite only earlier
papers. Reference targets are drawn from a mixture: mostly
preferential attachment (a pool holding one entry per paper plus one
per citation received), with smaller uniform and recent-window shares
so young papers also accumulate citations the way they do in real
bibliographies. Two planted mechanisms are controlled by a single
``effect`` knob:

* citation boost: during reference selection, a drawn empirical paper
  is accepted with probability 1/(1+effect), so conceptual papers
  accumulate citations at roughly (1+effect) times the empirical rate;
* disruption boost: after accepting an anchor reference, the citing
  paper also cites one of the anchor's own references with a follow-up
  probability that is divided by (1+effect) when the anchor is
  conceptual, so citers of conceptual work bridge back to its sources
  less often.

With effect = 0 both mechanisms are label-blind. Gold labels are
embedded in the records, and abstracts carry matching cue vocabulary
so the offline classifier stub can recover them without a network.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .corpus import Corpus, PaperRecord, Provenance, write_corpus
from .graph import CitationGraph, from_edge_arrays

_BLOCK = 1 << 16

_TOPICS = (
    "consumer trust", "brand communities", "market orientation",
    "service ecosystems", "pricing dynamics", "channel relationships",
    "digital platforms", "customer engagement", "retail experience",
    "advertising effectiveness", "product innovation", "loyalty programs",
)

_CONCEPTUAL_TEMPLATES = (
    "This article develops a theory of {t1} that reframes the study of {t2}.",
    "We propose a conceptual framework in which {t1} shapes {t2} through three formal propositions.",
    "The argument introduces new constructs for understanding {t1} beyond the prevailing paradigm.",
    "A typology of {t1} is derived, offering a fresh theoretical perspective on {t2}.",
    "We synthesize prior thought on {t1} into an integrative framework with testable propositions.",
    "The paper articulates theoretical mechanisms connecting {t1} to {t2}.",
    "By revisiting foundational constructs, the article opens a new perspective on {t1}.",
    "We outline a paradigm for {t1} research grounded in theory building rather than description.",
)

_EMPIRICAL_TEMPLATES = (
    "This study analyzes panel data on {t1} to estimate its association with {t2}.",
    "We report survey results from a large sample of respondents engaged with {t1}.",
    "A field experiment manipulating {t1} provides causal evidence on {t2}.",
    "Regression estimation on a multi-year dataset links {t1} with {t2}.",
    "The analysis draws on longitudinal data covering {t1} in dozens of markets.",
    "Measurement of {t1} across product categories yields robust evidence about {t2}.",
    "We test the predictions with archival data and report estimation results for {t1}.",
    "Secondary data on {t2} support an experiment-like comparison across {t1} conditions.",
)

MIN_ABSTRACT_CHARS = 501


class _FloatStream:
    """Sequential uniform floats drawn from a Generator in fixed-size
    blocks; keeps the hot loops off per-call RNG overhead while staying
    fully deterministic."""

    __slots__ = ("_rng", "_buf", "_pos")

    def __init__(self, rng: np.random.Generator):
        self._rng = rng
        self._buf = rng.random(_BLOCK)
        self._pos = 0

    def next(self) -> float:
        if self._pos == _BLOCK:
            self._buf = self._rng.random(_BLOCK)
            self._pos = 0
        u = self._buf[self._pos]
        self._pos += 1
        return u

    def pick(self, n: int) -> int:
        return int(self.next() * n)


def _generate_references(
    n: int,
    stream: _FloatStream,
    want_refs: np.ndarray,
    is_conceptual: np.ndarray,
    effect: float,
    follow_prob: float,
    uniform_mix: float = 0.25,
    recency_mix: float = 0.65,
) -> list[list[int]]:
    """Reference lists per paper, chronological, mixed attachment with
    the two planted mechanisms described in the module docstring."""
    refs_by_paper: list[list[int]] = []
    pool: list[int] = []
    accept_empirical = 1.0 / (1.0 + effect)
    follow_reduced = follow_prob / (1.0 + effect)
    recency_cut = uniform_mix + recency_mix
    for i in range(n):
        want = min(int(want_refs[i]), i)
        refs: list[int] = []
        chosen: set[int] = set()
        attempts = 0
        window = min(i, max(25, i // 5))
        # Rejection sampling can stall on duplicate-heavy small pools,
        # so a soft cap lifts the label rejection and a hard cap stops
        # the search; a short reference list is acceptable output.
        soft_cap = 30 * want + 30
        hard_cap = 60 * want + 60
        while len(refs) < want and attempts < hard_cap:
            attempts += 1
            branch = stream.next()
            if branch < uniform_mix:
                r = stream.pick(i)
            elif branch < recency_cut:
                r = i - window + stream.pick(window)
            else:
                r = pool[stream.pick(len(pool))]
            if effect > 0.0 and not is_conceptual[r] and attempts <= soft_cap:
                if stream.next() >= accept_empirical:
                    continue
            if r in chosen:
                continue
            chosen.add(r)
            refs.append(r)
            pool.append(r)
            anchor_refs = refs_by_paper[r]
            if anchor_refs and len(refs) < want:
                p_follow = follow_reduced if is_conceptual[r] else follow_prob
                if stream.next() < p_follow:
                    x = anchor_refs[stream.pick(len(anchor_refs))]
                    if x not in chosen:
                        chosen.add(x)
                        refs.append(x)
                        pool.append(x)
        refs_by_paper.append(refs)
        pool.append(i)
    return refs_by_paper


def _refs_to_edges(refs_by_paper: list[list[int]]) -> tuple[np.ndarray, np.ndarray]:
    total = sum(len(r) for r in refs_by_paper)
    src = np.empty(total, dtype=np.int64)
    dst = np.empty(total, dtype=np.int64)
    pos = 0
    for i, refs in enumerate(refs_by_paper):
        for r in refs:
            src[pos] = r
            dst[pos] = i
            pos += 1
    return src, dst


def _abstract(stream: _FloatStream, conceptual: bool) -> str:
    templates = _CONCEPTUAL_TEMPLATES if conceptual else _EMPIRICAL_TEMPLATES
    sentences: list[str] = []
    length = 0
    while length < MIN_ABSTRACT_CHARS:
        template = templates[stream.pick(len(templates))]
        t1 = _TOPICS[stream.pick(len(_TOPICS))]
        t2 = _TOPICS[stream.pick(len(_TOPICS))]
        sentence = template.format(t1=t1, t2=t2)
        length += len(sentence) + (1 if sentences else 0)
        sentences.append(sentence)
    return " ".join(sentences)


def _paper_id(i: int) -> str:
    return f"P{i:06d}"


def synth_corpus(
    n_papers: int,
    seed: int,
    effect: float = 0.0,
    conceptual_frac: float = 0.3,
    extra_refs_mean: float = 3.3,
    follow_prob: float = 0.5,
    uniform_mix: float = 0.25,
    recency_mix: float = 0.65,
    n_journals: int = 8,
    year_min: int = 1991,
    year_max: int = 2020,
    path: str | Path | None = None,
) -> Corpus:
    """Generate a gold-labeled corpus; optionally write it to ``path``.

    Deterministic for a given parameter set: the same seed always
    yields byte-identical files.
    """
    if n_papers < 10:
        raise ValueError(f"n_papers must be >= 10, got {n_papers}")
    if effect < 0:
        raise ValueError(f"effect must be >= 0, got {effect}")
    if not (0.0 <= conceptual_frac <= 1.0):
        raise ValueError(f"conceptual_frac must be in [0, 1], got {conceptual_frac}")
    if not (0.0 <= follow_prob <= 1.0):
        raise ValueError(f"follow_prob must be in [0, 1], got {follow_prob}")
    if uniform_mix < 0 or recency_mix < 0 or uniform_mix + recency_mix > 1.0:
        raise ValueError("uniform_mix and recency_mix must be >= 0 and sum to <= 1")
    if extra_refs_mean < 0:
        raise ValueError(f"extra_refs_mean must be >= 0, got {extra_refs_mean}")
    if n_journals < 1:
        raise ValueError(f"n_journals must be >= 1, got {n_journals}")
    if year_min > year_max:
        raise ValueError("year_min must be <= year_max")

    rng = np.random.default_rng(seed)
    is_conceptual = rng.random(n_papers) < conceptual_frac
    want_refs = 11 + rng.poisson(extra_refs_mean, size=n_papers)
    n_authors = 1 + rng.poisson(2.0, size=n_papers)
    stream = _FloatStream(rng)
    refs_by_paper = _generate_references(
        n_papers, stream, want_refs, is_conceptual, effect, follow_prob,
        uniform_mix=uniform_mix, recency_mix=recency_mix,
    )

    span = year_max - year_min + 1
    journals = [f"Synthetic Journal {k:02d}" for k in range(n_journals)]
    records: dict[str, PaperRecord] = {}
    for i in range(n_papers):
        conceptual = bool(is_conceptual[i])
        t1 = _TOPICS[stream.pick(len(_TOPICS))]
        t2 = _TOPICS[(stream.pick(len(_TOPICS) - 1) + _TOPICS.index(t1) + 1) % len(_TOPICS)]
        pid = _paper_id(i)
        records[pid] = PaperRecord(
            id=pid,
            title=f"Paper {i:06d} on {t1} and {t2}",
            abstract=_abstract(stream, conceptual),
            journal=journals[i % n_journals],
            year=year_min + (i * span) // n_papers,
            n_authors=int(n_authors[i]),
            references=tuple(_paper_id(r) for r in refs_by_paper[i]),
            gold_label="conceptual" if conceptual else "empirical",
        )
    corpus = Corpus(records=records,
                    provenance=Provenance(sources=(f"synthetic seed={seed}",)))
    if path is not None:
        write_corpus(corpus, path)
    return corpus


def synth_graph(
    n_nodes: int,
    seed: int,
    extra_refs_mean: float = 3.3,
    follow_prob: float = 0.5,
    uniform_mix: float = 0.25,
    recency_mix: float = 0.65,
) -> CitationGraph:
    """Topology-only variant for scale tests and benchmarks: the same
    attachment process with no labels, no planted effect, and no text."""
    if n_nodes < 2:
        raise ValueError(f"n_nodes must be >= 2, got {n_nodes}")
    if not (0.0 <= follow_prob <= 1.0):
        raise ValueError(f"follow_prob must be in [0, 1], got {follow_prob}")
    if uniform_mix < 0 or recency_mix < 0 or uniform_mix + recency_mix > 1.0:
        raise ValueError("uniform_mix and recency_mix must be >= 0 and sum to <= 1")
    rng = np.random.default_rng(seed)
    is_conceptual = np.zeros(n_nodes, dtype=bool)
    want_refs = 11 + rng.poisson(extra_refs_mean, size=n_nodes)
    stream = _FloatStream(rng)
    refs_by_paper = _generate_references(
        n_nodes, stream, want_refs, is_conceptual, 0.0, follow_prob,
        uniform_mix=uniform_mix, recency_mix=recency_mix,
    )
    src, dst = _refs_to_edges(refs_by_paper)
    ids = tuple(_paper_id(i) for i in range(n_nodes))
    return from_edge_arrays(ids, src, dst)
