"""Similarity metrics and mixed-type evaluation strategies.

A :class:`Preprocessor` is fitted on pooled real and synthetic data and turns
a :class:`~synthaudit.data.Dataset` into an :class:`Encoded` pair of blocks:

* ``num`` -- float coordinates (NaN marks a missing numeric value),
* ``cat`` -- integer category codes (``-1`` marks a missing value).

All metrics are evaluated by one column-at-a-time kernel, so a distance
computed for a single pair is bit-identical to the same entry of a full
pairwise matrix. The nearest-neighbour engine relies on that.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.linalg import solve_triangular

from .data import AttributeSchema, Dataset, Record
from .errors import (
    BadParams,
    DegenerateAttribute,
    IncompatibleMetric,
    OutOfRange,
    SchemaMismatch,
    SchemaViolation,
    ZeroVector,
)

log = logging.getLogger(__name__)

ONE_HOT_SCALE = 1.0 / math.sqrt(2.0)


class Metric(enum.Enum):
    L1 = "l1"
    EUCLIDEAN = "euclidean"
    HAMMING = "hamming"
    COSINE = "cosine"
    MAHALANOBIS = "mahalanobis"
    GOWER = "gower"


VECTOR_METRICS = (Metric.L1, Metric.EUCLIDEAN, Metric.COSINE, Metric.MAHALANOBIS)


@dataclass(frozen=True)
class MetricSpec:
    metric: Metric
    # Gower only: divide each numeric gap by the pooled attribute range
    normalize: bool = False

    @classmethod
    def named(cls, name: str, normalize: bool = False) -> "MetricSpec":
        try:
            return cls(Metric(name.lower()), normalize)
        except ValueError:
            raise IncompatibleMetric(f"unknown metric {name!r}") from None


# ---------------------------------------------------------------- strategies


@dataclass(frozen=True)
class Raw:
    """No preprocessing; vector metrics then need an all-numeric schema."""


@dataclass(frozen=True)
class Bin:
    n_bins: int = 10

    def __post_init__(self):
        if int(self.n_bins) < 2:
            raise BadParams("Bin.n_bins must be at least 2")


@dataclass(frozen=True)
class Aggregate:
    numeric: MetricSpec = MetricSpec(Metric.L1)
    categorical: MetricSpec = MetricSpec(Metric.HAMMING)
    weight_numeric: float = 1.0
    weight_categorical: float = 1.0

    def __post_init__(self):
        if self.weight_numeric < 0 or self.weight_categorical < 0:
            raise BadParams("aggregate weights must be nonnegative")
        if self.weight_numeric == 0 and self.weight_categorical == 0:
            raise BadParams("aggregate weights cannot both be zero")
        if self.categorical.metric is not Metric.HAMMING:
            raise BadParams("the categorical part of an aggregate must be Hamming")
        if self.numeric.metric not in (Metric.L1, Metric.EUCLIDEAN):
            raise BadParams("the numeric part of an aggregate must be L1 or Euclidean")


@dataclass(frozen=True)
class IgnoreCategorical:
    pass


@dataclass(frozen=True)
class Embed:
    """Z-scored numerics plus one-hot categoricals scaled by 1/sqrt(2)."""


EvaluationStrategy = Union[Raw, Bin, Aggregate, IgnoreCategorical, Embed]


def strategy_named(name: str, **params) -> EvaluationStrategy:
    name = name.lower()
    if name == "raw":
        return Raw()
    if name == "bin":
        return Bin(int(params.get("n_bins", 10)))
    if name in ("aggregate", "aggr"):
        return Aggregate(
            MetricSpec.named(params.get("numeric", "l1")),
            MetricSpec.named(params.get("categorical", "hamming")),
            float(params.get("weight_numeric", 1.0)),
            float(params.get("weight_categorical", 1.0)),
        )
    if name in ("ignore", "ignore_categorical"):
        return IgnoreCategorical()
    if name in ("embed", "embedding"):
        return Embed()
    raise BadParams(f"unknown evaluation strategy {name!r}")


def strategy_name(s: EvaluationStrategy) -> str:
    return {Raw: "raw", Bin: "bin", Aggregate: "aggregate", IgnoreCategorical: "ignore_categorical", Embed: "embed"}[type(s)]


# ------------------------------------------------------------------ encoding


@dataclass(frozen=True)
class _AttrEncoder:
    name: str
    mode: str  # raw | zscore | bin | bin_onehot | code | onehot
    num_cols: Tuple[int, ...] = ()
    cat_cols: Tuple[int, ...] = ()
    categories: Tuple[str, ...] = ()
    missing_col: bool = False
    center: float = 0.0
    scale: float = 1.0
    edges: Optional[Tuple[float, ...]] = None


@dataclass(frozen=True, eq=False)
class Encoded:
    num: np.ndarray
    cat: np.ndarray

    def __len__(self):
        return self.num.shape[0]

    def take(self, idx) -> "Encoded":
        return Encoded(self.num[idx], self.cat[idx])


def _bin_codes(x: np.ndarray, edges: np.ndarray) -> np.ndarray:
    n_bins = len(edges) - 1
    codes = np.searchsorted(edges, x, side="right") - 1
    codes = np.clip(codes, 0, n_bins - 1)
    return np.where(np.isnan(x), -1, codes).astype(np.int64)


def _cat_codes(col: np.ndarray, categories: Sequence[str], name: str) -> np.ndarray:
    lookup = {c: i for i, c in enumerate(categories)}
    out = np.empty(len(col), dtype=np.int64)
    for i, v in enumerate(col):
        if v is None:
            out[i] = -1
        else:
            try:
                out[i] = lookup[v]
            except KeyError:
                raise SchemaViolation(f"attribute {name!r}: unknown category {v!r}", i) from None
    return out


def _one_hot(codes: np.ndarray, n_codes: int, missing_col: bool, scale: float) -> np.ndarray:
    width = n_codes + (1 if missing_col else 0)
    out = np.zeros((len(codes), width))
    rows = np.arange(len(codes))
    present = codes >= 0
    out[rows[present], codes[present]] = scale
    if missing_col:
        out[rows[~present], n_codes] = scale
    return out


@dataclass(frozen=True, eq=False)
class Preprocessor:
    """Fitted, immutable evaluation strategy for one metric."""

    metric: MetricSpec
    strategy: EvaluationStrategy
    schema: AttributeSchema
    encoders: Tuple[_AttrEncoder, ...]
    n_num: int
    n_cat: int
    gaps: np.ndarray = field(repr=False)
    covariance: Optional[np.ndarray] = field(default=None, repr=False)
    whitener: Optional[np.ndarray] = field(default=None, repr=False)
    warnings: Tuple[str, ...] = ()

    # -- encoding -----------------------------------------------------------

    def encode(self, d: Dataset) -> Encoded:
        n = len(d)
        num = np.empty((n, self.n_num))
        cat = np.empty((n, self.n_cat), dtype=np.int64)
        for enc in self.encoders:
            try:
                col = d.column(enc.name)
            except KeyError:
                raise SchemaMismatch(f"dataset lacks attribute {enc.name!r}") from None
            if enc.mode == "raw":
                num[:, enc.num_cols[0]] = col
            elif enc.mode == "zscore":
                num[:, enc.num_cols[0]] = (col - enc.center) / enc.scale
            elif enc.mode == "bin":
                cat[:, enc.cat_cols[0]] = _bin_codes(col, np.asarray(enc.edges))
            elif enc.mode == "bin_onehot":
                codes = _bin_codes(col, np.asarray(enc.edges))
                num[:, list(enc.num_cols)] = _one_hot(codes, len(enc.edges) - 1, enc.missing_col, ONE_HOT_SCALE)
            elif enc.mode == "code":
                cat[:, enc.cat_cols[0]] = _cat_codes(col, enc.categories, enc.name)
            elif enc.mode == "onehot":
                codes = _cat_codes(col, enc.categories, enc.name)
                num[:, list(enc.num_cols)] = _one_hot(codes, len(enc.categories), enc.missing_col, ONE_HOT_SCALE)
        return Encoded(num, cat)

    def encode_records(self, records: Sequence[Record]) -> Encoded:
        return self.encode(Dataset(self.schema, tuple(records), "query"))

    def restrict(self, names: Sequence[str]) -> "Preprocessor":
        """The same fitted state, evaluated on the attribute subset ``names`` only."""
        by_name = {e.name: e for e in self.encoders}
        missing = [n for n in names if n not in by_name and n not in self.schema.names]
        if missing:
            raise SchemaMismatch(f"unknown attributes {missing}")
        keep = [by_name[n] for n in self.schema.names if n in names and n in by_name]
        if not keep:
            raise DegenerateAttribute(f"no usable coordinates among {list(names)}")
        num_idx = [c for e in keep for c in e.num_cols]
        cat_idx = [c for e in keep for c in e.cat_cols]
        nmap = {c: i for i, c in enumerate(num_idx)}
        cmap = {c: i for i, c in enumerate(cat_idx)}
        encoders = tuple(
            replace(e, num_cols=tuple(nmap[c] for c in e.num_cols), cat_cols=tuple(cmap[c] for c in e.cat_cols))
            for e in keep
        )
        cov = whit = None
        if self.covariance is not None:
            cov = self.covariance[np.ix_(num_idx, num_idx)]
            whit = _whitener(cov)
        return replace(
            self,
            schema=self.schema.subset([n for n in self.schema.names if n in names]),
            encoders=encoders,
            n_num=len(num_idx),
            n_cat=len(cat_idx),
            gaps=self.gaps[num_idx],
            covariance=cov,
            whitener=whit,
        )

    # -- kernel -------------------------------------------------------------

    def _abs_gap(self, a, b, j, any_nan):
        d = np.abs(a - b)
        if any_nan:
            an, bn = np.isnan(a), np.isnan(b)
            d = np.where(an | bn, np.where(an & bn, 0.0, self.gaps[j]), d)
        return d

    def _kernel(self, qn, qc, rn, rc, any_nan: bool):
        """Evaluate the metric column by column; q*/r* are broadcast-compatible column lists."""
        m = self.metric.metric
        if isinstance(self.strategy, Aggregate):
            agg = self.strategy
            part_num = self._l1(qn, rn, any_nan) if agg.numeric.metric is Metric.L1 else np.sqrt(self._sq(qn, rn, any_nan))
            return agg.weight_numeric * part_num + agg.weight_categorical * self._ham_cat(qc, rc)
        if m is Metric.L1:
            return self._l1(qn, rn, any_nan)
        if m is Metric.EUCLIDEAN:
            return np.sqrt(self._sq(qn, rn, any_nan))
        if m is Metric.HAMMING:
            return self._ham_num(qn, rn) + self._ham_cat(qc, rc)
        if m is Metric.GOWER:
            l1 = self._l1(qn, rn, any_nan, normalize=self.metric.normalize)
            return self._ham_cat(qc, rc) + l1
        if m is Metric.MAHALANOBIS:
            return self._mahalanobis(qn, rn, any_nan)
        if m is Metric.COSINE:
            return self._cosine(qn, rn)
        raise IncompatibleMetric(str(m))

    def _l1(self, qn, rn, any_nan, normalize=False):
        acc = 0.0
        for j in range(self.n_num):
            d = self._abs_gap(qn[j], rn[j], j, any_nan)
            if normalize:
                d = d / self.gaps[j]
            acc = acc + d
        return acc

    def _sq(self, qn, rn, any_nan):
        acc = 0.0
        for j in range(self.n_num):
            d = self._abs_gap(qn[j], rn[j], j, any_nan)
            acc = acc + d * d
        return acc

    def _ham_num(self, qn, rn):
        acc = 0.0
        for j in range(self.n_num):
            a, b = qn[j], rn[j]
            acc = acc + ((a != b) & ~(np.isnan(a) & np.isnan(b)))
        return acc

    def _ham_cat(self, qc, rc):
        acc = 0.0
        for j in range(self.n_cat):
            acc = acc + (qc[j] != rc[j])
        return acc

    def _mahalanobis(self, qn, rn, any_nan):
        deltas = []
        for j in range(self.n_num):
            a, b = qn[j], rn[j]
            d = a - b
            if any_nan:
                an, bn = np.isnan(a), np.isnan(b)
                # antisymmetric penalty keeps the form symmetric in its arguments
                d = np.where(an & bn, 0.0, np.where(an, self.gaps[j], np.where(bn, -self.gaps[j], d)))
            deltas.append(d)
        W = self.whitener
        acc = 0.0
        for i in range(self.n_num):
            w = 0.0
            for j in range(i + 1):
                if W[i, j] != 0.0:
                    w = w + W[i, j] * deltas[j]
            acc = acc + w * w
        return np.sqrt(acc)

    def _cosine(self, qn, rn):
        dot = nq = nr = 0.0
        for j in range(self.n_num):
            a = np.nan_to_num(qn[j], nan=0.0)
            b = np.nan_to_num(rn[j], nan=0.0)
            dot = dot + a * b
            nq = nq + a * a
            nr = nr + b * b
        denom = np.sqrt(nq * nr)
        if np.any(np.asarray(denom) == 0.0):
            raise ZeroVector("cosine similarity is undefined for an all-zero vector")
        return np.clip(dot / denom, -1.0, 1.0)

    # -- public evaluation ----------------------------------------------------

    def pairwise(self, A: Encoded, B: Encoded) -> np.ndarray:
        """Raw metric values, shape (len(A), len(B))."""
        any_nan = bool(np.isnan(A.num).any() or np.isnan(B.num).any())
        qn = [A.num[:, j, None] for j in range(self.n_num)]
        rn = [B.num[None, :, j] for j in range(self.n_num)]
        qc = [A.cat[:, j, None] for j in range(self.n_cat)]
        rc = [B.cat[None, :, j] for j in range(self.n_cat)]
        out = self._kernel(qn, qc, rn, rc, any_nan)
        return np.broadcast_to(np.asarray(out, dtype=float), (len(A), len(B))).copy()

    def paired(self, A: Encoded, ia: np.ndarray, B: Encoded, ib: np.ndarray) -> np.ndarray:
        """Raw metric values for the aligned pairs (A[ia[k]], B[ib[k]])."""
        any_nan = bool(np.isnan(A.num).any() or np.isnan(B.num).any())
        qn = [A.num[ia, j] for j in range(self.n_num)]
        rn = [B.num[ib, j] for j in range(self.n_num)]
        qc = [A.cat[ia, j] for j in range(self.n_cat)]
        rc = [B.cat[ib, j] for j in range(self.n_cat)]
        out = self._kernel(qn, qc, rn, rc, any_nan)
        return np.broadcast_to(np.asarray(out, dtype=float), (len(ia),)).copy()

    def to_distance(self, values: np.ndarray) -> np.ndarray:
        if self.metric.metric is Metric.COSINE:
            return 1.0 - values
        return values

    # -- spatial index support ------------------------------------------------

    def tree_space(self, E: Encoded) -> Optional[Tuple[np.ndarray, float]]:
        """Coordinates and Minkowski p under which the metric is an l_p norm, if any."""
        if np.isnan(E.num).any():
            return None
        m = self.metric.metric
        if isinstance(self.strategy, Aggregate):
            if self.strategy.numeric.metric is not Metric.L1:
                return None
            a = self.strategy
            return np.hstack([a.weight_numeric * E.num, a.weight_categorical * self._cat_one_hot(E)]), 1.0
        if m is Metric.L1:
            return E.num, 1.0
        if m is Metric.EUCLIDEAN:
            return E.num, 2.0
        if m is Metric.MAHALANOBIS:
            return E.num @ self.whitener.T, 2.0
        if m is Metric.HAMMING and self.n_num == 0:
            return self._cat_one_hot(E), 1.0
        if m is Metric.GOWER:
            num = E.num / self.gaps if self.metric.normalize else E.num
            return np.hstack([num, self._cat_one_hot(E)]), 1.0
        return None

    def _cat_one_hot(self, E: Encoded) -> np.ndarray:
        blocks = []
        for enc in self.encoders:
            for c in enc.cat_cols:
                n_codes = len(enc.categories) if enc.mode == "code" else len(enc.edges) - 1
                blocks.append(_one_hot(E.cat[:, c], n_codes, True, 0.5))
        return np.hstack(blocks) if blocks else np.zeros((len(E), 0))


def _whitener(S: np.ndarray) -> np.ndarray:
    try:
        L = np.linalg.cholesky(S)
    except np.linalg.LinAlgError as exc:
        raise BadParams(f"covariance is not positive definite: {exc}") from exc
    return solve_triangular(L, np.eye(len(S)), lower=True)


def fit_preprocessor(
    strategy: EvaluationStrategy,
    metric: MetricSpec,
    real: Dataset,
    synthetic: Dataset,
    covariance: Optional[np.ndarray] = None,
) -> Preprocessor:
    """Fit ``strategy`` for ``metric`` on the pooled rows of ``real`` and ``synthetic``.

    ``covariance`` overrides the estimated Mahalanobis matrix (used verbatim,
    without regularization).
    """
    if real.schema != synthetic.schema:
        raise SchemaMismatch("real and synthetic datasets have different schemas")
    schema = real.schema
    m = metric.metric
    vector = m in VECTOR_METRICS
    if isinstance(strategy, Aggregate) and m is not Metric.GOWER:
        raise IncompatibleMetric("the aggregate strategy is an aggregation metric; select 'gower'")
    if isinstance(strategy, Raw) and vector:
        cats = [a.name for a in schema.attributes if not a.is_numeric]
        if cats:
            raise IncompatibleMetric(f"{m.value} cannot evaluate raw categorical attributes {cats}; choose bin, embed or ignore_categorical")

    encoders: List[_AttrEncoder] = []
    warnings: List[str] = []
    n_num = n_cat = 0

    def pooled(name):
        return np.concatenate([real.column(name), synthetic.column(name)])

    for attr in schema.attributes:
        col = pooled(attr.name)
        if attr.is_numeric:
            finite = col[~np.isnan(col)]
            if isinstance(strategy, Bin):
                lo, hi = (float(finite.min()), float(finite.max())) if finite.size else (0.0, 1.0)
                if hi <= lo:
                    hi = lo + 1.0
                edges = tuple(float(e) for e in np.linspace(lo, hi, strategy.n_bins + 1))
                if vector:
                    missing_col = bool(np.isnan(col).any())
                    width = strategy.n_bins + (1 if missing_col else 0)
                    encoders.append(_AttrEncoder(attr.name, "bin_onehot", num_cols=tuple(range(n_num, n_num + width)), edges=edges, missing_col=missing_col))
                    n_num += width
                else:
                    encoders.append(_AttrEncoder(attr.name, "bin", cat_cols=(n_cat,), edges=edges))
                    n_cat += 1
            elif isinstance(strategy, Embed):
                sd = float(finite.std()) if finite.size else 0.0
                if sd == 0.0:
                    msg = f"attribute {attr.name!r} has zero pooled variance; coordinate dropped"
                    warnings.append(msg)
                    log.warning(msg)
                    continue
                encoders.append(_AttrEncoder(attr.name, "zscore", num_cols=(n_num,), center=float(finite.mean()), scale=sd))
                n_num += 1
            else:
                encoders.append(_AttrEncoder(attr.name, "raw", num_cols=(n_num,)))
                n_num += 1
        else:
            if isinstance(strategy, IgnoreCategorical):
                continue
            categories = attr.kind.domain
            if vector:
                missing_col = any(v is None for v in col)
                width = len(categories) + (1 if missing_col else 0)
                encoders.append(_AttrEncoder(attr.name, "onehot", num_cols=tuple(range(n_num, n_num + width)), categories=categories, missing_col=missing_col))
                n_num += width
            else:
                encoders.append(_AttrEncoder(attr.name, "code", cat_cols=(n_cat,), categories=categories))
                n_cat += 1

    if not encoders:
        raise DegenerateAttribute("no usable coordinates remain after preprocessing")

    pre = Preprocessor(metric, strategy, schema, tuple(encoders), n_num, n_cat, np.ones(n_num), warnings=tuple(warnings))
    pooled_enc = pre.encode(Dataset(schema, real.rows + synthetic.rows, "pooled", validate=False))
    gaps = np.ones(n_num)
    for j in range(n_num):
        colj = pooled_enc.num[:, j]
        colj = colj[~np.isnan(colj)]
        if colj.size:
            rng = float(colj.max() - colj.min())
            if rng > 0:
                gaps[j] = rng

    cov = whit = None
    if m is Metric.MAHALANOBIS:
        if covariance is not None:
            cov = np.atleast_2d(np.asarray(covariance, dtype=float))
            if cov.shape != (n_num, n_num):
                raise BadParams(f"covariance must be {n_num}x{n_num}")
        else:
            X = pooled_enc.num.copy()
            means = np.nanmean(X, axis=0) if len(X) else np.zeros(n_num)
            X = np.where(np.isnan(X), means, X)
            S = np.atleast_2d(np.cov(X, rowvar=False))
            lam = 1e-6 * float(np.trace(S)) / n_num
            if lam <= 0.0:
                lam = 1e-6
            cov = S + lam * np.eye(n_num)
        whit = _whitener(cov)
    return replace(pre, gaps=gaps, covariance=cov, whitener=whit)


# ---------------------------------------------------------------- record API


def distance(p: Preprocessor, a: Record, b: Record, spec: Optional[MetricSpec] = None) -> float:
    """Metric value between two full-schema records (similarity for cosine)."""
    if spec is not None and spec != p.metric:
        raise IncompatibleMetric(f"preprocessor was fitted for {p.metric.metric.value}, not {spec.metric.value}")
    E = p.encode_records([a, b])
    return float(p.paired(E, np.array([0]), E, np.array([1]))[0])


def as_distance(spec: MetricSpec, value: float) -> float:
    """Map a metric output onto a nonnegative distance (cosine: 1 - similarity)."""
    if spec.metric is Metric.COSINE:
        if not -1.0 - 1e-12 <= value <= 1.0 + 1e-12:
            raise OutOfRange(f"cosine similarity {value} outside [-1, 1]")
        return 1.0 - min(max(value, -1.0), 1.0)
    if not value >= 0.0:
        raise OutOfRange(f"distance {value} is negative")
    return float(value)
