"""In-corpus citation network with compressed sparse adjacency.

Every edge runs from a referenced paper to the paper citing it. Only
references that resolve to another record in the same corpus become
edges; references to anything outside the corpus are ignored.

Node ids are sorted lexicographically and mapped to dense integer
indices; all adjacency arrays are expressed in those indices, and each
neighbor run is itself sorted, so two corpora with identical records
always produce identical arrays.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import Corpus


@dataclass(frozen=True)
class CitationGraph:
    """CSR adjacency in both directions.

    ``fwd_*`` rows list the citers of a node (edges leaving a referenced
    paper); ``bwd_*`` rows list the references of a node. ``in_deg[i]``
    is the number of citers of node i, ``out_deg[i]`` the number of its
    in-corpus references.
    """

    ids: tuple[str, ...]
    index: dict[str, int]
    fwd_indptr: np.ndarray
    fwd_indices: np.ndarray
    bwd_indptr: np.ndarray
    bwd_indices: np.ndarray
    in_deg: np.ndarray
    out_deg: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.ids)

    @property
    def n_edges(self) -> int:
        return int(self.fwd_indices.shape[0])

    def citer_row(self, idx: int) -> np.ndarray:
        return self.fwd_indices[self.fwd_indptr[idx]:self.fwd_indptr[idx + 1]]

    def reference_row(self, idx: int) -> np.ndarray:
        return self.bwd_indices[self.bwd_indptr[idx]:self.bwd_indptr[idx + 1]]


def _csr_from_pairs(n: int, src: np.ndarray, dst: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """CSR with rows keyed by src and sorted column runs."""
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, src + 1, 1)
    np.cumsum(indptr, out=indptr)
    order = np.lexsort((dst, src))
    indices = np.ascontiguousarray(dst[order], dtype=np.int64)
    return indptr, indices


def from_edge_arrays(ids: tuple[str, ...] | list[str], src: np.ndarray, dst: np.ndarray) -> CitationGraph:
    """Build a graph from parallel index arrays (src = referenced paper,
    dst = citing paper). Used by the synthetic generator and benchmarks;
    assumes no duplicate or self edges."""
    ids = tuple(ids)
    n = len(ids)
    src = np.asarray(src, dtype=np.int64)
    dst = np.asarray(dst, dtype=np.int64)
    if src.shape != dst.shape:
        raise ValueError("src and dst must have identical shapes")
    if src.size and (src.min() < 0 or src.max() >= n or dst.min() < 0 or dst.max() >= n):
        raise ValueError("edge endpoints out of range")
    if np.any(src == dst):
        raise ValueError("self-citation edge")
    fwd_indptr, fwd_indices = _csr_from_pairs(n, src, dst)
    bwd_indptr, bwd_indices = _csr_from_pairs(n, dst, src)
    in_deg = np.diff(fwd_indptr).astype(np.int64)
    out_deg = np.diff(bwd_indptr).astype(np.int64)
    return CitationGraph(
        ids=ids,
        index={pid: i for i, pid in enumerate(ids)},
        fwd_indptr=fwd_indptr,
        fwd_indices=fwd_indices,
        bwd_indptr=bwd_indptr,
        bwd_indices=bwd_indices,
        in_deg=in_deg,
        out_deg=out_deg,
    )


def build_graph(corpus: Corpus) -> CitationGraph:
    """Resolve every record's references against the corpus and assemble
    the citation network. Deterministic for a given set of records."""
    ids = tuple(sorted(corpus.records))
    index = {pid: i for i, pid in enumerate(ids)}
    src_list: list[int] = []
    dst_list: list[int] = []
    for pid in ids:
        citing_idx = index[pid]
        for ref in corpus.records[pid].references:
            ref_idx = index.get(ref)
            if ref_idx is None:
                continue
            src_list.append(ref_idx)
            dst_list.append(citing_idx)
    src = np.asarray(src_list, dtype=np.int64)
    dst = np.asarray(dst_list, dtype=np.int64)
    return from_edge_arrays(ids, src, dst)


def citers(graph: CitationGraph, paper_id: str) -> list[str]:
    """Ids of papers citing the given paper, ascending."""
    idx = graph.index[paper_id]
    return [graph.ids[int(j)] for j in graph.citer_row(idx)]


def references_of(graph: CitationGraph, paper_id: str) -> list[str]:
    """Ids of in-corpus papers the given paper references, ascending."""
    idx = graph.index[paper_id]
    return [graph.ids[int(j)] for j in graph.reference_row(idx)]


def degree_stats(graph: CitationGraph) -> dict:
    """Summary counts used by reports and sanity checks."""
    n = graph.n_nodes
    return {
        "n_nodes": n,
        "n_edges": graph.n_edges,
        "max_in_deg": int(graph.in_deg.max()) if n else 0,
        "max_out_deg": int(graph.out_deg.max()) if n else 0,
        "mean_in_deg": float(graph.in_deg.mean()) if n else 0.0,
        "mean_out_deg": float(graph.out_deg.mean()) if n else 0.0,
        "n_isolated": int(np.sum((graph.in_deg == 0) & (graph.out_deg == 0))) if n else 0,
    }


def write_edges(graph: CitationGraph, path: str | Path) -> None:
    """Edge list as tab-separated ``referenced_id<TAB>citing_id`` lines,
    sorted by referenced id then citing id."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for r_idx in range(graph.n_nodes):
            r_id = graph.ids[r_idx]
            for i_idx in graph.citer_row(r_idx):
                fh.write(f"{r_id}\t{graph.ids[int(i_idx)]}\n")


def read_edges(path: str | Path) -> list[tuple[str, str]]:
    """Parse an edge-list file back into (referenced_id, citing_id) pairs."""
    pairs: list[tuple[str, str]] = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0] or not parts[1]:
                raise ValueError(f"{path}: line {lineno}: expected two tab-separated ids")
            pairs.append((parts[0], parts[1]))
    return pairs
