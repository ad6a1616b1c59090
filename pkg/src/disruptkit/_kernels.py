"""Hot counting kernels behind the citer partition.

Two interchangeable implementations of the same contract:

* a scalar loop compiled with numba (``cache=True, nogil=True``) so
  batch scoring can run focal chunks on real threads, and
* a vectorized numpy fallback.

Set ``DISRUPTKIT_NO_NUMBA=1`` (or install without numba) to force the
fallback; ``partition_counts`` is bound to whichever is active at
import time. Both raw variants stay importable for benchmarks and
equivalence tests.

Array contract: CSR adjacency as produced by ``graph.build_graph``.
``fwd_*`` rows are the citers of each node, ``bwd_*`` rows its
references, all int64 with sorted runs. ``ls`` must be ascending
thresholds >= 1. Returns (n_f, n_b, n_r) int64 arrays of shape
(len(focals), len(ls)).
"""

from __future__ import annotations

import os

import numpy as np

_TRUTHY = {"1", "true", "yes", "on"}


def _loop_partition_counts(fwd_indptr, fwd_indices, bwd_indptr, bwd_indices,
                           in_deg, focals, ls, overlap_mode):
    n = fwd_indptr.shape[0] - 1
    n_focal = focals.shape[0]
    n_l = ls.shape[0]
    out_nf = np.zeros((n_focal, n_l), dtype=np.int64)
    out_nb = np.zeros((n_focal, n_l), dtype=np.int64)
    out_nr = np.zeros((n_focal, n_l), dtype=np.int64)
    # Per-focal scratch, reused via epoch stamps instead of clearing.
    stamp = np.full(n, -1, dtype=np.int64)
    citer_stamp = np.full(n, -1, dtype=np.int64)
    val = np.zeros(n, dtype=np.int64)
    cand = np.empty(n, dtype=np.int64)
    for fi in range(n_focal):
        focal = focals[fi]
        c_lo = fwd_indptr[focal]
        c_hi = fwd_indptr[focal + 1]
        n_citers = c_hi - c_lo
        for k in range(c_lo, c_hi):
            citer_stamp[fwd_indices[k]] = fi
        # Candidates: every paper citing >= 1 of the focal's references.
        # val accumulates the max in-degree seen among cited references
        # (threshold mode) or the shared-reference count (overlap mode).
        n_cand = 0
        for k in range(bwd_indptr[focal], bwd_indptr[focal + 1]):
            ref = bwd_indices[k]
            ref_in_deg = in_deg[ref]
            for m in range(fwd_indptr[ref], fwd_indptr[ref + 1]):
                c = fwd_indices[m]
                if stamp[c] != fi:
                    stamp[c] = fi
                    val[c] = 1 if overlap_mode else ref_in_deg
                    cand[n_cand] = c
                    n_cand += 1
                elif overlap_mode:
                    val[c] += 1
                elif ref_in_deg > val[c]:
                    val[c] = ref_in_deg
        for k in range(n_cand):
            p = cand[k]
            if p == focal:
                continue
            v = val[p]
            if citer_stamp[p] == fi:
                for j in range(n_l):
                    if v >= ls[j]:
                        out_nb[fi, j] += 1
                    else:
                        break
            elif overlap_mode:
                # R-class keeps the >=1 shared-reference rule at every l.
                for j in range(n_l):
                    out_nr[fi, j] += 1
            else:
                for j in range(n_l):
                    if v >= ls[j]:
                        out_nr[fi, j] += 1
                    else:
                        break
        for j in range(n_l):
            out_nf[fi, j] = n_citers - out_nb[fi, j]
    return out_nf, out_nb, out_nr


def partition_counts_numpy(fwd_indptr, fwd_indices, bwd_indptr, bwd_indices,
                           in_deg, focals, ls, overlap_mode):
    """Vectorized fallback: same contract as the compiled kernel."""
    n_focal = focals.shape[0]
    n_l = ls.shape[0]
    out_nf = np.zeros((n_focal, n_l), dtype=np.int64)
    out_nb = np.zeros((n_focal, n_l), dtype=np.int64)
    out_nr = np.zeros((n_focal, n_l), dtype=np.int64)
    for fi in range(n_focal):
        focal = int(focals[fi])
        citers = fwd_indices[fwd_indptr[focal]:fwd_indptr[focal + 1]]
        refs = bwd_indices[bwd_indptr[focal]:bwd_indptr[focal + 1]]
        if refs.size == 0:
            out_nf[fi, :] = citers.size
            continue
        counts = fwd_indptr[refs + 1] - fwd_indptr[refs]
        total = int(counts.sum())
        if total == 0:
            out_nf[fi, :] = citers.size
            continue
        ref_citers = np.empty(total, dtype=np.int64)
        source_val = np.empty(total, dtype=np.int64)
        pos = 0
        for ref, cnt in zip(refs, counts):
            hi = pos + int(cnt)
            ref_citers[pos:hi] = fwd_indices[fwd_indptr[ref]:fwd_indptr[ref + 1]]
            source_val[pos:hi] = 1 if overlap_mode else in_deg[ref]
            pos = hi
        uniq, inverse = np.unique(ref_citers, return_inverse=True)
        if overlap_mode:
            vals = np.bincount(inverse, minlength=uniq.size).astype(np.int64)
        else:
            vals = np.zeros(uniq.size, dtype=np.int64)
            np.maximum.at(vals, inverse, source_val)
        keep = uniq != focal
        uniq = uniq[keep]
        vals = vals[keep]
        is_citer = np.isin(uniq, citers, assume_unique=True)
        citer_vals = vals[is_citer]
        other_vals = vals[~is_citer]
        for j in range(n_l):
            nb = int(np.count_nonzero(citer_vals >= ls[j]))
            out_nb[fi, j] = nb
            out_nf[fi, j] = citers.size - nb
            if overlap_mode:
                out_nr[fi, j] = other_vals.size
            else:
                out_nr[fi, j] = int(np.count_nonzero(other_vals >= ls[j]))
    return out_nf, out_nb, out_nr


def _numba_disabled() -> bool:
    return os.environ.get("DISRUPTKIT_NO_NUMBA", "").strip().lower() in _TRUTHY


NUMBA_ENABLED = False
partition_counts_numba = None
if not _numba_disabled():
    try:
        from numba import njit
    except ImportError:
        pass
    else:
        partition_counts_numba = njit(cache=True, nogil=True)(_loop_partition_counts)
        NUMBA_ENABLED = True

if NUMBA_ENABLED:
    partition_counts = partition_counts_numba
else:
    partition_counts = partition_counts_numpy


def warmup() -> None:
    """Trigger JIT compilation on a tiny input so timed runs stay clean."""
    indptr = np.array([0, 1, 1], dtype=np.int64)
    indices = np.array([1], dtype=np.int64)
    bwd_indptr = np.array([0, 0, 1], dtype=np.int64)
    bwd_indices = np.array([0], dtype=np.int64)
    in_deg = np.array([1, 0], dtype=np.int64)
    focals = np.array([0, 1], dtype=np.int64)
    ls = np.array([1, 2], dtype=np.int64)
    partition_counts(indptr, indices, bwd_indptr, bwd_indices, in_deg, focals, ls, False)
    partition_counts(indptr, indices, bwd_indptr, bwd_indices, in_deg, focals, ls, True)
