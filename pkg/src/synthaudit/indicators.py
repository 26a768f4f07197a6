"""Statistical privacy indicators computed from real and synthetic datasets."""

from __future__ import annotations

import itertools
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import comb, kolmogorov

from .data import Dataset
from .distance import Embed, MetricSpec, Preprocessor
from .errors import (
    BadAttribute,
    DegenerateBandwidth,
    EmptySample,
    NoMatches,
    ProfileMismatch,
    SchemaMismatch,
    SizeMismatch,
    TooSmall,
)
from .nn import DistanceProfile, ProfileKind, nn_search

PERCENTILES = (1, 5, 25, 50, 75, 95, 99)


# ----------------------------------------------------------------------- IMS


def ims(real: Dataset, synthetic: Dataset, tolerance: float = 0.0) -> float:
    """Identical match share: fraction of synthetic rows that coincide with some real row."""
    if real.schema != synthetic.schema:
        raise SchemaMismatch("real and synthetic datasets have different schemas")
    if len(synthetic) == 0:
        raise EmptySample("synthetic dataset is empty")
    if tolerance == 0.0:
        seen = set(real.rows)
        return sum(r in seen for r in synthetic.rows) / len(synthetic)

    num_idx = [j for j, a in enumerate(real.schema.attributes) if a.is_numeric]
    cat_idx = [j for j, a in enumerate(real.schema.attributes) if not a.is_numeric]

    def group_key(r):
        return tuple(r[j] for j in cat_idx), tuple(r[j] is None for j in num_idx)

    groups: Dict[tuple, List[List[float]]] = defaultdict(list)
    for r in real.rows:
        groups[group_key(r)].append([r[j] for j in num_idx if r[j] is not None])
    trees = {k: cKDTree(np.array(v).reshape(len(v), -1)) for k, v in groups.items()}
    hits = 0
    for r in synthetic.rows:
        tree = trees.get(group_key(r))
        if tree is None:
            continue
        x = np.array([r[j] for j in num_idx if r[j] is not None])
        if x.size == 0:
            hits += 1
            continue
        d, _ = tree.query(x, k=1, p=np.inf)
        hits += bool(d <= tolerance)
    return hits / len(synthetic)


# ----------------------------------------------------------------------- DCR


@dataclass
class DcrSummary:
    proportion_at_risk: float
    srd_stats: Dict[str, float]
    rrd_stats: Dict[str, float]
    srd_percentiles: Dict[int, float]
    rrd_percentiles: Dict[int, float]
    flags: np.ndarray = field(repr=False)
    holdout_used: bool = False


def _stats(x: np.ndarray) -> Dict[str, float]:
    return {"mean": float(np.mean(x)), "median": float(np.median(x)), "std": float(np.std(x))}


def _percentiles(x: np.ndarray) -> Dict[int, float]:
    vals = np.percentile(x, PERCENTILES)
    # interpolation rounding can break monotonicity by one ulp
    vals = np.maximum.accumulate(vals)
    return {q: float(v) for q, v in zip(PERCENTILES, vals)}


def _check_pair(srd: DistanceProfile, rrd: DistanceProfile):
    if srd.kind is not ProfileKind.SRD or rrd.kind is not ProfileKind.RRD:
        raise ProfileMismatch(f"expected SRD and RRD profiles, got {srd.kind.value} and {rrd.kind.value}")
    if len(srd) == 0 or len(rrd) == 0:
        raise ProfileMismatch("empty profile")
    if srd.argmin_index.max() >= len(rrd):
        raise ProfileMismatch("SRD neighbours point outside the records covered by the RRD profile")


def dcr_summary(srd: DistanceProfile, rrd: DistanceProfile) -> DcrSummary:
    """Flag synthetic record i when its SRD undercuts the RRD of its closest real record."""
    _check_pair(srd, rrd)
    flags = srd.values < rrd.values[srd.argmin_index]
    return DcrSummary(
        proportion_at_risk=float(flags.mean()),
        srd_stats=_stats(srd.values),
        rrd_stats=_stats(rrd.values),
        srd_percentiles=_percentiles(srd.values),
        rrd_percentiles=_percentiles(rrd.values),
        flags=flags,
        holdout_used=not rrd.same_set,
    )


def below_percentile_share(srd: DistanceProfile, rrd: DistanceProfile, q: float = 5.0) -> float:
    """Share of SRD values strictly below the q-th (linearly interpolated) percentile of RRD."""
    _check_pair(srd, rrd)
    if not 0.0 < q < 100.0:
        raise ValueError("q must lie in (0, 100)")
    cut = np.percentile(rrd.values, q)
    return float(np.mean(srd.values < cut))


# ------------------------------------------------------------------------ KS


@dataclass
class KsResult:
    statistic: float
    p_value: float
    n1: int
    n2: int
    alpha: float
    reject: bool
    reject_at: Dict[float, bool]
    method: str


def _ks_stat_counts(a_sorted: np.ndarray, b_sorted: np.ndarray, grid: np.ndarray) -> float:
    n1, n2 = len(a_sorted), len(b_sorted)
    c1 = np.searchsorted(a_sorted, grid, side="right")
    c2 = np.searchsorted(b_sorted, grid, side="right")
    # integer numerators keep the statistic exact
    return float(np.max(np.abs(c1 * n2 - c2 * n1))) / (n1 * n2)


def _ks_permutation_p(pooled: np.ndarray, n1: int, observed: float, rng_seed: int) -> Tuple[float, str]:
    n = len(pooled)
    order = np.argsort(pooled, kind="stable")
    z = pooled[order]
    # last position of each run of tied values
    ends = np.append(np.nonzero(np.diff(z) != 0)[0], n - 1)
    n2 = n - n1
    tol = 1e-12

    def stats(masks: np.ndarray) -> np.ndarray:
        c1 = np.cumsum(masks, axis=1)[:, ends]
        c2 = (ends + 1)[None, :] - c1
        return np.max(np.abs(c1 * n2 - c2 * n1), axis=1) / (n1 * n2)

    total = comb(n, n1, exact=True)
    if total <= 100_000:
        hits = 0
        batch = []
        for combo in itertools.combinations(range(n), n1):
            row = np.zeros(n, dtype=np.int64)
            row[list(combo)] = 1
            batch.append(row)
            if len(batch) == 4096:
                hits += int(np.sum(stats(np.array(batch)) >= observed - tol))
                batch = []
        if batch:
            hits += int(np.sum(stats(np.array(batch)) >= observed - tol))
        return hits / total, "exact-permutation"
    rng = np.random.Generator(np.random.PCG64(rng_seed))
    n_perm = 10_000
    hits = 0
    for start in range(0, n_perm, 1000):
        size = min(1000, n_perm - start)
        masks = np.zeros((size, n), dtype=np.int64)
        for i in range(size):
            masks[i, rng.permutation(n)[:n1]] = 1
        hits += int(np.sum(stats(masks) >= observed - tol))
    return (hits + 1) / (n_perm + 1), "monte-carlo-permutation"


def ks_two_sample(a: Sequence[float], b: Sequence[float], alpha: float = 0.05, rng_seed: int = 0) -> KsResult:
    """Two-sample Kolmogorov-Smirnov test with the exact sup-ECDF statistic.

    The p-value is asymptotic (Kolmogorov distribution at sqrt(n1 n2 / (n1 + n2)) D)
    unless the smaller sample has fewer than 10 values, in which case a
    permutation p-value is used.
    """
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    n1, n2 = len(a), len(b)
    if n1 == 0 or n2 == 0:
        raise EmptySample("both samples must be nonempty")
    grid = np.unique(np.concatenate([a, b]))
    d = _ks_stat_counts(a, b, grid)
    if min(n1, n2) < 10:
        p, method = _ks_permutation_p(np.concatenate([a, b]), n1, d, rng_seed)
    else:
        en = n1 * n2 / (n1 + n2)
        p, method = float(kolmogorov(math.sqrt(en) * d)), "asymptotic"
    p = min(max(p, 0.0), 1.0)
    levels = sorted({0.05, 0.01, float(alpha)})
    return KsResult(d, p, n1, n2, float(alpha), p < alpha, {lv: p < lv for lv in levels}, method)


# ---------------------------------------------------- adversarial accuracy


@dataclass
class AaPlResult:
    adversarial_accuracy: float
    real_side: float  # mean 1(RSD > RRD_self)
    synthetic_side: float  # mean 1(SRD > SSD)


def adversarial_accuracy(
    real: Dataset,
    synthetic: Dataset,
    p: Preprocessor,
    spec: Optional[MetricSpec] = None,
    accelerate: bool = True,
    n_jobs: int = 1,
) -> AaPlResult:
    """Nearest-neighbour adversarial accuracy; ties count as "not farther"."""
    if len(real) < 2 or len(synthetic) < 2:
        raise TooSmall("adversarial accuracy needs at least two rows per dataset")
    if spec is not None and spec != p.metric:
        raise ProfileMismatch("metric does not match the preprocessor")
    R, S = p.encode(real), p.encode(synthetic)
    kw = dict(accelerate=accelerate, n_jobs=n_jobs)
    rsd = nn_search(p, R, S, **kw)[1][:, 0]
    rrd = nn_search(p, R, R, exclude_self=True, **kw)[1][:, 0]
    srd = nn_search(p, S, R, **kw)[1][:, 0]
    ssd = nn_search(p, S, S, exclude_self=True, **kw)[1][:, 0]
    real_side = float(np.mean(rsd > rrd))
    synth_side = float(np.mean(srd > ssd))
    return AaPlResult(0.5 * (real_side + synth_side), real_side, synth_side)


def privacy_loss(train_result: AaPlResult, holdout_result: AaPlResult) -> float:
    return holdout_result.adversarial_accuracy - train_result.adversarial_accuracy


# ---------------------------------------------------------------------- TCAP


@dataclass
class TcapResult:
    score: float
    n_matched: int
    n_unmatched: int


def tcap(real: Dataset, synthetic: Dataset, key_attrs: Sequence[str], target_attr: str) -> TcapResult:
    """Mean share of synthetic records in a real record's key class that carry its target value."""
    if real.schema != synthetic.schema:
        raise SchemaMismatch("real and synthetic datasets have different schemas")
    if not key_attrs:
        raise BadAttribute("key attributes must be nonempty")
    if target_attr in key_attrs:
        raise BadAttribute("the target attribute cannot be a key")
    if real.schema[target_attr].is_numeric:
        raise BadAttribute(f"target {target_attr!r} must be categorical")
    kidx = [real.schema.index(a) for a in key_attrs]
    t = real.schema.index(target_attr)
    classes: Dict[tuple, Counter] = defaultdict(Counter)
    for r in synthetic.rows:
        classes[tuple(r[j] for j in kidx)][r[t]] += 1
    scores = []
    for r in real.rows:
        cls = classes.get(tuple(r[j] for j in kidx))
        if cls is not None:
            scores.append(cls[r[t]] / sum(cls.values()))
    if not scores:
        raise NoMatches("no real key combination occurs in the synthetic data")
    return TcapResult(float(math.fsum(scores) / len(scores)), len(scores), len(real) - len(scores))


# ----------------------------------------------------------------------- MMD


def _sq_dists(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    acc = np.zeros((len(X), len(Y)))
    for j in range(X.shape[1]):
        d = X[:, j, None] - Y[None, :, j]
        acc = acc + d * d
    return acc


def median_bandwidth(Z: np.ndarray) -> float:
    D = np.sqrt(_sq_dists(Z, Z))
    iu = np.triu_indices(len(Z), k=1)
    vals = D[iu]
    bw = float(np.median(vals))
    if bw == 0.0:
        bw = float(np.mean(vals))
    if bw == 0.0:
        raise DegenerateBandwidth("all pooled records coincide; RBF bandwidth is zero")
    return bw


def mmd(real: Dataset, synthetic: Dataset, p: Preprocessor) -> float:
    """Unbiased MMD^2 with an RBF kernel; bandwidth from the pooled median heuristic.

    Missing embedded coordinates are set to 0 (the pooled mean).
    """
    if not isinstance(p.strategy, Embed):
        raise ValueError("mmd needs an Embed preprocessor")
    m, n = len(real), len(synthetic)
    if m < 2 or n < 2:
        raise TooSmall("mmd needs at least two rows per dataset")
    X = np.nan_to_num(p.encode(real).num, nan=0.0)
    Y = np.nan_to_num(p.encode(synthetic).num, nan=0.0)
    bw = median_bandwidth(np.vstack([X, Y]))
    gamma = 1.0 / (2.0 * bw * bw)

    def within(A):
        K = np.exp(-_sq_dists(A, A) * gamma)
        np.fill_diagonal(K, 0.0)
        return math.fsum(K.ravel()) / (len(A) * (len(A) - 1))

    cross = math.fsum(np.exp(-_sq_dists(X, Y) * gamma).ravel()) / (m * n)
    return within(X) + within(Y) - 2.0 * cross


# ---------------------------------------------------------------- seed-based


@dataclass
class SeedIndicators:
    dbrl_rate: float
    hidden_rate: float
    local_cloaking: np.ndarray


def seed_indicators(real: Dataset, synthetic: Dataset, p: Preprocessor, spec: Optional[MetricSpec] = None) -> SeedIndicators:
    """Indicators for seed-based generators where synthetic row i derives from real row i."""
    if len(real) != len(synthetic):
        raise SizeMismatch(f"{len(real)} seeds but {len(synthetic)} synthetic records")
    if spec is not None and spec != p.metric:
        raise ProfileMismatch("metric does not match the preprocessor")
    n = len(real)
    R, S = p.encode(real), p.encode(synthetic)
    cloak = np.zeros(n, dtype=np.int64)
    linked = np.zeros(n, dtype=bool)
    for s in range(0, n, 512):
        e = min(s + 512, n)
        D = p.to_distance(p.pairwise(R.take(slice(s, e)), S))
        rows = np.arange(e - s)
        own = D[rows, rows + s]
        cloak[s:e] = np.sum(D < own[:, None], axis=1)
        linked[s:e] = np.argmin(D, axis=1) == rows + s
    hidden = cloak > 0
    return SeedIndicators(float(linked.mean()), float(hidden.mean()), cloak)
