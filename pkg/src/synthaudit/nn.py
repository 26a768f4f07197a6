"""Nearest-neighbour queries and the SRD / SSD / RSD / RRD distance profiles.

Brute force defines the result. For metrics that are an l_p norm in some
coordinate space (see :meth:`Preprocessor.tree_space`) a KD-tree proposes
candidates within a slightly inflated radius of the tree's k-th distance;
the candidates are then re-scored with the exact kernel and tie-broken by
index, so the accelerated path returns exactly the brute-force answer.
Reference rows with missing values stay out of the tree and are scored
against every query.
"""

from __future__ import annotations

import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from scipy.spatial import cKDTree

from .data import Dataset, Record
from .distance import Encoded, MetricSpec, Preprocessor, strategy_name
from .errors import EmptyReference, IncompatibleMetric, KTooLarge, LabelMismatch

_CHUNK = 512
_REL_SLACK = 1e-9


class ProfileKind(enum.Enum):
    SRD = "SRD"
    SSD = "SSD"
    RSD = "RSD"
    RRD = "RRD"


@dataclass(frozen=True, eq=False)
class DistanceProfile:
    kind: ProfileKind
    values: np.ndarray
    argmin_index: np.ndarray
    metric: MetricSpec
    strategy: str
    same_set: bool = False  # leave-self-out over one dataset (SSD, or RRD without holdout)

    def __len__(self):
        return len(self.values)


def _brute_chunk(p: Preprocessor, Q: Encoded, R: Encoded, k: int, self_idx: Optional[np.ndarray]):
    D = p.to_distance(p.pairwise(Q, R))
    m = len(Q)
    if self_idx is not None:
        D[np.arange(m), self_idx] = np.inf
    if k == 1:
        idx = np.argmin(D, axis=1)
        return idx[:, None], D[np.arange(m), idx][:, None]
    kth = np.partition(D, k - 1, axis=1)[:, k - 1]
    out_i = np.empty((m, k), dtype=np.int64)
    out_d = np.empty((m, k))
    for r in range(m):
        cand = np.nonzero(D[r] <= kth[r])[0]
        order = np.lexsort((cand, D[r, cand]))[:k]
        out_i[r] = cand[order]
        out_d[r] = D[r, cand[order]]
    return out_i, out_d


def _tree_chunk(p, Q, R, Xq, tree, ids, extra, pn, atol, k, self_idx):
    """Exact k-NN for complete query rows.

    ``tree`` indexes the complete reference rows ``ids``; the reference rows
    with missing values (``extra``) are always scored as candidates.
    """
    m = len(Q)
    kq = k + (1 if self_idx is not None else 0)
    dd, ii = tree.query(Xq, k=kq, p=pn)
    dd = dd.reshape(m, kq)
    ii = ids[ii.reshape(m, kq)]
    if self_idx is not None:
        dd = np.where(ii == self_idx[:, None], np.inf, dd)
        dd = np.sort(dd, axis=1)
    radius = dd[:, k - 1] * (1.0 + _REL_SLACK) + atol
    cands = tree.query_ball_point(Xq, r=radius, p=pn)
    lens = np.fromiter((len(c) for c in cands), dtype=np.int64, count=m)
    qi = np.repeat(np.arange(m), lens)
    ri = ids[np.fromiter((j for c in cands for j in c), dtype=np.int64, count=int(lens.sum()))]
    if len(extra):
        qi = np.concatenate([qi, np.repeat(np.arange(m), len(extra))])
        ri = np.concatenate([ri, np.tile(extra, m)])
    if self_idx is not None:
        keep = ri != self_idx[qi]
        qi, ri = qi[keep], ri[keep]
    dist = p.to_distance(p.paired(Q, qi, R, ri))
    order = np.lexsort((ri, dist, qi))
    qi, ri, dist = qi[order], ri[order], dist[order]
    starts = np.searchsorted(qi, np.arange(m), side="left")
    ends = np.searchsorted(qi, np.arange(m), side="right")
    short = np.nonzero(ends - starts < k)[0]
    out_i = np.empty((m, k), dtype=np.int64)
    out_d = np.empty((m, k))
    good = np.nonzero(ends - starts >= k)[0]
    for j in range(k):
        out_i[good, j] = ri[starts[good] + j]
        out_d[good, j] = dist[starts[good] + j]
    for r in short:
        # rounding left the ball short of k exact neighbours: fall back to brute force
        bi, bd = _brute_chunk(p, Q.take([r]), R, k, None if self_idx is None else self_idx[[r]])
        out_i[r], out_d[r] = bi[0], bd[0]
    return out_i, out_d


def _complete(E: Encoded) -> np.ndarray:
    return ~np.isnan(E.num).any(axis=1)


def nn_search(
    p: Preprocessor,
    Q: Encoded,
    R: Encoded,
    k: int = 1,
    exclude_self: bool = False,
    accelerate: bool = True,
    n_jobs: int = 1,
) -> Tuple[np.ndarray, np.ndarray]:
    """k nearest reference rows per query row, ordered by (distance, index).

    With ``exclude_self`` the query set must be the reference set and row i
    never reports itself. Query rows with missing values are always answered
    by brute force.
    """
    n_ref = len(R) - (1 if exclude_self else 0)
    if n_ref < 1:
        raise EmptyReference("reference set has no eligible rows")
    if k < 1 or k > n_ref:
        raise KTooLarge(f"k={k} exceeds the {n_ref} eligible reference rows")
    if exclude_self and len(Q) != len(R):
        raise LabelMismatch("self-exclusion needs the query set to equal the reference set")
    m = len(Q)
    starts = list(range(0, m, _CHUNK))

    tree = None
    if accelerate and m > 0:
        ok_r, ok_q = _complete(R), _complete(Q)
        ids, extra, qids = np.nonzero(ok_r)[0], np.nonzero(~ok_r)[0], np.nonzero(ok_q)[0]
        space_r = p.tree_space(R.take(ids)) if len(ids) > k else None
        space_q = p.tree_space(Q.take(qids)) if space_r is not None and len(qids) else None
        if space_q is not None:
            Xr, pn = space_r
            Xq = np.full((m, Xr.shape[1]), np.nan)
            Xq[qids] = space_q[0]
            tree = cKDTree(Xr)
            scale = max(float(np.abs(Xr).max(initial=0.0)), float(np.abs(space_q[0]).max(initial=0.0)))
            atol = 1e-9 * (1.0 + scale) * max(Xr.shape[1], 1)

    def work(s):
        e = min(s + _CHUNK, m)
        rows = np.arange(s, e)
        self_idx = rows if exclude_self else None
        if tree is None:
            return _brute_chunk(p, Q.take(slice(s, e)), R, k, self_idx)
        out_i = np.empty((e - s, k), dtype=np.int64)
        out_d = np.empty((e - s, k))
        fast = ok_q[s:e]
        for mask, use_tree in ((fast, True), (~fast, False)):
            sel = rows[mask]
            if not len(sel):
                continue
            si = sel if exclude_self else None
            if use_tree:
                bi, bd = _tree_chunk(p, Q.take(sel), R, Xq[sel], tree, ids, extra, pn, atol, k, si)
            else:
                bi, bd = _brute_chunk(p, Q.take(sel), R, k, si)
            out_i[mask], out_d[mask] = bi, bd
        return out_i, out_d

    if n_jobs > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            parts = list(pool.map(work, starts))
    else:
        parts = [work(s) for s in starts]
    if not parts:
        return np.empty((0, k), dtype=np.int64), np.empty((0, k))
    return np.vstack([a for a, _ in parts]), np.vstack([b for _, b in parts])


def _check_spec(p: Preprocessor, spec: Optional[MetricSpec]):
    if spec is not None and spec != p.metric:
        raise IncompatibleMetric(f"preprocessor was fitted for {p.metric.metric.value}")


def nearest(
    query: Record,
    reference: Dataset,
    p: Preprocessor,
    spec: Optional[MetricSpec] = None,
    exclude_index: Optional[int] = None,
) -> Tuple[int, float]:
    """Index of (and distance to) the closest reference record; ties go to the smallest index."""
    _check_spec(p, spec)
    n = len(reference)
    if n == 0 or (exclude_index is not None and n < 2):
        raise EmptyReference("reference set has no eligible rows")
    Q = p.encode_records([query])
    R = p.encode(reference)
    D = p.to_distance(p.pairwise(Q, R))[0]
    if exclude_index is not None:
        D[exclude_index] = np.inf
    i = int(np.argmin(D))
    return i, float(D[i])


def knn(
    query: Record,
    reference: Dataset,
    k: int,
    p: Preprocessor,
    spec: Optional[MetricSpec] = None,
) -> List[Tuple[int, float]]:
    _check_spec(p, spec)
    if len(reference) == 0:
        raise EmptyReference("empty reference set")
    if k > len(reference):
        raise KTooLarge(f"k={k} exceeds reference size {len(reference)}")
    idx, dist = nn_search(p, p.encode_records([query]), p.encode(reference), k=k, accelerate=False)
    return [(int(i), float(d)) for i, d in zip(idx[0], dist[0])]


def _is_synth(d: Dataset) -> bool:
    return d.label == "synthetic"


def profile(
    queries: Dataset,
    reference: Dataset,
    kind: ProfileKind,
    p: Preprocessor,
    spec: Optional[MetricSpec] = None,
    accelerate: bool = True,
    n_jobs: int = 1,
) -> DistanceProfile:
    """Minimum distance from every query record to the reference set.

    SSD always excludes the record itself. RRD excludes self when both
    arguments hold the same rows (no holdout), otherwise it is the holdout
    form: each record of the first real part against the second part.
    """
    _check_spec(p, spec)
    kind = ProfileKind(kind)
    same = queries is reference or queries.rows == reference.rows
    qs, rs = _is_synth(queries), _is_synth(reference)
    expected = {
        ProfileKind.SRD: (True, False),
        ProfileKind.SSD: (True, True),
        ProfileKind.RSD: (False, True),
        ProfileKind.RRD: (False, False),
    }[kind]
    if (qs, rs) != expected:
        raise LabelMismatch(f"{kind.value} expects labels {expected} (synthetic?), got {queries.label!r}->{reference.label!r}")
    if kind is ProfileKind.SSD and not same:
        raise LabelMismatch("SSD compares a synthetic set with itself")
    exclude = kind is ProfileKind.SSD or (kind is ProfileKind.RRD and same)
    if len(reference) == 0:
        raise EmptyReference("empty reference set")
    Q = p.encode(queries)
    R = Q if same else p.encode(reference)
    idx, dist = nn_search(p, Q, R, k=1, exclude_self=exclude, accelerate=accelerate, n_jobs=n_jobs)
    return DistanceProfile(kind, dist[:, 0].copy(), idx[:, 0].copy(), p.metric, strategy_name(p.strategy), exclude)


def min_distances(p: Preprocessor, queries: Dataset, reference: Dataset, accelerate: bool = True, n_jobs: int = 1):
    """Label-agnostic nearest distances (used by attacks)."""
    idx, dist = nn_search(p, p.encode(queries), p.encode(reference), k=1, accelerate=accelerate, n_jobs=n_jobs)
    return idx[:, 0], dist[:, 0]
