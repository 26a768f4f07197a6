"""Simulated privacy attacks scored against random and control baselines.

Each attack splits into an adversary part, which sees only the synthetic
data and the auxiliary view of its targets, and an evaluator part, which
holds the ground truth and scores the guesses.
"""

from __future__ import annotations

import enum
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.stats import binomtest
from sklearn.metrics import f1_score, precision_score, recall_score, roc_auc_score, roc_curve

from .data import Dataset, Record
from .distance import MetricSpec, Metric, Preprocessor, Raw, fit_preprocessor
from .errors import (
    BadAttribute,
    BadDomain,
    BadParams,
    BoxInsufficient,
    EmptyCanaries,
    EmptyDataset,
    EmptyOutcome,
    FitFailure,
    IncompatibleMetric,
    KTooLarge,
    NotEnoughUniques,
    OverlappingAux,
    SchemaMismatch,
    TooSmall,
)
from .nn import nn_search

# WP29 risk each attack speaks to: singling out, linkability, inference
WP29_TAG = {"singling_out": "S", "linkage": "L", "inference": "I", "mia_distance": "I", "shadow_mia": "I"}


# --------------------------------------------------------------- threat model


class Box(enum.IntEnum):
    NO = 0
    BLACK = 1
    WHITE = 2
    UNCERTAIN = -1  # representable; no attack accepts it


@dataclass(frozen=True)
class AuxiliaryKnowledge:
    known_attributes: Tuple[str, ...]
    known_rows: Optional[Dataset] = None

    def __post_init__(self):
        if not self.known_attributes:
            raise BadAttribute("auxiliary knowledge needs at least one known attribute")
        object.__setattr__(self, "known_attributes", tuple(self.known_attributes))
        if self.known_rows is not None and tuple(self.known_rows.schema.names) != self.known_attributes:
            raise SchemaMismatch("known rows must carry exactly the known attributes")


class BlackBoxHandle:
    """Sampling access only."""

    def __init__(self, generator):
        self._g = generator

    def sample(self, n: int, rng_seed: int) -> Dataset:
        return self._g.sample(n, rng_seed)


class WhiteBoxHandle(BlackBoxHandle):
    @property
    def kind(self):
        return self._g.kind

    @property
    def parameters(self) -> Dict[str, Any]:
        return self._g.state


@dataclass(frozen=True)
class ThreatModel:
    box: Box = Box.NO
    generator: Optional[BlackBoxHandle] = None
    aux: Optional[AuxiliaryKnowledge] = None
    parameter_distributions: Optional[Dict[str, Any]] = None

    def __post_init__(self):
        if self.box is Box.BLACK and not isinstance(self.generator, BlackBoxHandle):
            raise BadParams("a black-box threat model needs a generator handle")
        if self.box is Box.WHITE and not isinstance(self.generator, WhiteBoxHandle):
            raise BadParams("a white-box threat model needs a white-box handle")

    def require(self, minimum: Box) -> None:
        if self.box is Box.UNCERTAIN or self.box < minimum:
            raise BoxInsufficient(f"attack needs a {minimum.name.lower()}-box threat model, got {self.box.name.lower()}-box")


# ------------------------------------------------------------------ outcomes


@dataclass(frozen=True)
class Attempt:
    guess: Any
    truth: Any
    correct: bool
    score: Optional[float] = None


@dataclass(frozen=True)
class AttackOutcome:
    attack_name: str
    n_attempts: int
    n_successes: int
    attempts: Tuple[Attempt, ...] = field(repr=False)
    metrics: Dict[str, float] = field(default_factory=dict)

    @property
    def success_rate(self) -> float:
        return self.n_successes / self.n_attempts if self.n_attempts else 0.0


def _outcome(name: str, attempts: Sequence[Attempt], extra: Optional[Dict[str, float]] = None) -> AttackOutcome:
    attempts = tuple(attempts)
    wins = sum(a.correct for a in attempts)
    metrics = {"success_rate": wins / len(attempts) if attempts else 0.0}
    metrics.update(extra or {})
    return AttackOutcome(name, len(attempts), wins, attempts, metrics)


class BaselineKind(enum.Enum):
    RANDOM = "random"
    CONTROL = "control"
    ABSOLUTE = "absolute"


@dataclass(frozen=True)
class RiskEstimate:
    attack_rate: float
    baseline_rate: float
    risk: float
    ci_low: float
    ci_high: float
    baseline_kind: BaselineKind


def _normalized(a: float, b: float) -> float:
    if b >= 1.0:
        return 0.0
    return min(1.0, max(0.0, (a - b) / (1.0 - b)))


def _wilson(k: int, n: int) -> Tuple[float, float]:
    ci = binomtest(k, n).proportion_ci(0.95, method="wilson")
    return float(ci.low), float(ci.high)


def risk_estimate(
    attack: AttackOutcome,
    baseline: Optional[AttackOutcome] = None,
    kind: BaselineKind = BaselineKind.RANDOM,
) -> RiskEstimate:
    """Attack success normalized by a baseline, with a 95% interval.

    The interval applies the normalization to the Wilson bounds of both
    rates; the score rises with the attack rate and falls with the baseline
    rate, so the extreme corners give the bounds. Without a baseline the
    estimate is absolute (baseline rate 0).
    """
    if attack.n_attempts == 0:
        raise EmptyOutcome(f"{attack.attack_name} made no attempts")
    a = attack.success_rate
    aL, aH = _wilson(attack.n_successes, attack.n_attempts)
    if baseline is None:
        b = bL = bH = 0.0
        kind = BaselineKind.ABSOLUTE
    else:
        if baseline.n_attempts == 0:
            raise EmptyOutcome(f"baseline {baseline.attack_name} made no attempts")
        b = baseline.success_rate
        bL, bH = _wilson(baseline.n_successes, baseline.n_attempts)
    risk = _normalized(a, b)
    lo = min(_normalized(aL, bH), risk)
    hi = max(_normalized(aH, bL), risk)
    return RiskEstimate(a, b, risk, lo, hi, kind)


def _attempt_rng(master: int, *idx: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(master), *map(int, idx)])))


def _default_preprocessor(*datasets: Dataset) -> Preprocessor:
    pooled = Dataset(datasets[0].schema, tuple(r for d in datasets for r in d.rows), "pooled", validate=False)
    return fit_preprocessor(Raw(), MetricSpec(Metric.GOWER), pooled, pooled)


def _resolve(p: Optional[Preprocessor], spec: Optional[MetricSpec], *fit_on: Dataset) -> Preprocessor:
    if p is None:
        p = _default_preprocessor(*fit_on)
    if spec is not None and spec != p.metric:
        raise IncompatibleMetric(f"preprocessor was fitted for {p.metric.metric.value}")
    return p


# ------------------------------------------------------------------- rarity


def rarity_scores(d: Dataset, n_bins: int = 10) -> np.ndarray:
    """Sum over attributes of -log2 of the Laplace-smoothed value frequency; higher is rarer."""
    n = len(d)
    if n == 0:
        raise EmptyDataset("rarity of an empty dataset is undefined")
    total = np.zeros(n)
    for a in d.schema.attributes:
        col = d.column(a.name)
        if a.is_numeric:
            missing = np.isnan(col)
            finite = col[~missing]
            codes = np.full(n, -1, dtype=np.int64)
            if finite.size:
                lo, hi = finite.min(), finite.max()
                width = (hi - lo) / n_bins if hi > lo else 1.0
                codes[~missing] = np.minimum(((finite - lo) // width).astype(np.int64), n_bins - 1)
            v = n_bins + (1 if missing.any() else 0)
        else:
            lookup = {c: i for i, c in enumerate(a.kind.domain)}
            codes = np.array([-1 if x is None else lookup[x] for x in col], dtype=np.int64)
            v = len(a.kind.domain) + (1 if (codes < 0).any() else 0)
        _, inverse, counts = np.unique(codes, return_inverse=True, return_counts=True)
        total += -np.log2((counts[inverse] + 1.0) / (n + v))
    return total


# --------------------------------------------------------------- singling out


@dataclass(frozen=True)
class Univariate:
    pass


@dataclass(frozen=True)
class Multivariate:
    width: int

    def __post_init__(self):
        if self.width < 1:
            raise BadParams("predicate width must be at least 1")


Predicate = Tuple[Tuple[str, str, Any], ...]  # (attribute, op, value) with op in ==, <=, >=


def predicate_matches(d: Dataset, pred: Predicate) -> np.ndarray:
    """Boolean mask of the rows of ``d`` satisfying every constraint."""
    mask = np.ones(len(d), dtype=bool)
    for name, op, value in pred:
        col = d.column(name)
        if d.schema[name].is_numeric:
            if value is None:
                mask &= np.isnan(col)
            elif op == "==":
                mask &= col == value
            elif op == "<=":
                mask &= col <= value
            else:
                mask &= col >= value
        else:
            mask &= np.array([x == value for x in col], dtype=bool)
    return mask


def _univariate_predicates(synthetic: Dataset) -> List[Predicate]:
    preds: List[Predicate] = []
    for a in synthetic.schema.attributes:
        col = synthetic.column(a.name)
        if a.is_numeric:
            finite = col[~np.isnan(col)]
            if finite.size:
                lo, hi = float(finite.min()), float(finite.max())
                if np.sum(finite == lo) == 1:
                    preds.append(((a.name, "<=", lo),))
                if hi != lo and np.sum(finite == hi) == 1:
                    preds.append(((a.name, ">=", hi),))
        else:
            counts = Counter(x for x in col if x is not None)
            preds.extend(((a.name, "==", v),) for v in sorted(counts) if counts[v] == 1)
    return preds


def singling_out_predicates(
    synthetic: Dataset, mode: Union[Univariate, Multivariate], n_attacks: int, rng_seed: int
) -> List[Predicate]:
    """Adversary side: build up to ``n_attacks`` distinct predicates from the synthetic data alone."""
    if len(synthetic) == 0:
        raise EmptyDataset("synthetic dataset is empty")
    if isinstance(mode, Univariate):
        cands = _univariate_predicates(synthetic)
        if len(cands) <= n_attacks:
            return cands
        rng = _attempt_rng(rng_seed, 0)
        pick = np.sort(rng.choice(len(cands), size=n_attacks, replace=False))
        return [cands[i] for i in pick]
    names = synthetic.schema.names
    width = min(mode.width, len(names))
    order = np.lexsort((np.arange(len(synthetic)), -rarity_scores(synthetic)))
    preds: List[Predicate] = []
    seen = set()
    for rank, i in enumerate(order):
        if len(preds) == n_attacks:
            break
        rng = _attempt_rng(rng_seed, rank)
        cols = np.sort(rng.choice(len(names), size=width, replace=False))
        row = synthetic.rows[int(i)]
        pred = tuple((names[j], "==", row[j]) for j in cols)
        if pred not in seen:
            seen.add(pred)
            preds.append(pred)
    return preds


def singling_out_attack(
    synthetic: Dataset,
    real: Dataset,
    mode: Union[Univariate, Multivariate] = Univariate(),
    n_attacks: int = 100,
    rng_seed: int = 0,
) -> AttackOutcome:
    """Predicates isolating one synthetic record; success iff one real record matches."""
    if synthetic.schema != real.schema:
        raise SchemaMismatch("real and synthetic datasets have different schemas")
    preds = singling_out_predicates(synthetic, mode, n_attacks, rng_seed)
    attempts = []
    for pred in preds:
        hits = int(predicate_matches(real, pred).sum())
        attempts.append(Attempt(pred, hits, hits == 1))
    out = _outcome("singling_out", attempts)
    if len(preds) < n_attacks:
        raise NotEnoughUniques(f"only {len(preds)} of {n_attacks} predicates could be built", outcome=out)
    return out


# -------------------------------------------------------------------- linkage


def _target_subset(targets: Dataset, n_attacks: Optional[int], rng_seed: int) -> np.ndarray:
    n = len(targets)
    if n == 0:
        raise EmptyDataset("no attack targets")
    if n_attacks is None or n_attacks >= n:
        return np.arange(n)
    # target selection gets its own stream, apart from the per-attempt ones
    return np.sort(_attempt_rng(rng_seed, 1 << 32).choice(n, size=n_attacks, replace=False))


def linkage_attack(
    synthetic: Dataset,
    targets: Dataset,
    aux_a: Sequence[str],
    aux_b: Sequence[str],
    k: int = 1,
    p: Optional[Preprocessor] = None,
    spec: Optional[MetricSpec] = None,
    rng_seed: int = 0,
    n_attacks: Optional[int] = None,
) -> AttackOutcome:
    """Link two attribute fragments of each target through shared synthetic neighbours."""
    if not aux_a or not aux_b:
        raise BadAttribute("both auxiliary subsets must be nonempty")
    if set(aux_a) & set(aux_b):
        raise OverlappingAux(f"auxiliary subsets overlap on {sorted(set(aux_a) & set(aux_b))}")
    if k < 1 or k > len(synthetic):
        raise KTooLarge(f"k={k} must lie in [1, {len(synthetic)}]")
    p = _resolve(p, spec, synthetic)
    idx = _target_subset(targets, n_attacks, rng_seed)
    view = targets.take(idx)
    hits = []
    for aux in (aux_a, aux_b):
        pa = p.restrict(list(aux))
        hits.append(nn_search(pa, pa.encode(view.project(list(aux))), pa.encode(synthetic), k=k)[0])
    attempts = []
    for t, ra, rb in zip(idx, hits[0], hits[1]):
        linked = bool(set(ra.tolist()) & set(rb.tolist()))
        attempts.append(Attempt((tuple(ra.tolist()), tuple(rb.tolist())), int(t), linked))
    return _outcome("linkage", attempts)


# ------------------------------------------------------------------ inference


def _modal(values: Sequence[Any], neighbours: Sequence[int]) -> Any:
    counts = Counter(values)
    top = max(counts.values())
    tied = [(nb, v) for v, nb in zip(values, neighbours) if counts[v] == top]
    return min(tied, key=lambda t: t[0])[1]


def inference_guesses(
    synthetic: Dataset,
    known_rows: Dataset,
    secret: str,
    k: int = 1,
    p: Optional[Preprocessor] = None,
) -> List[Any]:
    """Adversary side: guess ``secret`` for rows that carry only the known attributes."""
    known = list(known_rows.schema.names)
    if secret in known:
        raise BadAttribute(f"secret {secret!r} is among the known attributes")
    s = synthetic.schema.index(secret)
    if k < 1 or k > len(synthetic):
        raise KTooLarge(f"k={k} must lie in [1, {len(synthetic)}]")
    p = _resolve(p, None, synthetic).restrict(known)
    idx, _ = nn_search(p, p.encode(known_rows), p.encode(synthetic), k=k)
    numeric = synthetic.schema.attributes[s].is_numeric
    guesses = []
    for nbrs in idx:
        vals = [synthetic.rows[int(i)][s] for i in nbrs]
        if numeric:
            xs = [v for v in vals if v is not None]
            guesses.append(math.fsum(xs) / len(xs) if xs else None)
        else:
            guesses.append(_modal(vals, nbrs.tolist()))
    return guesses


def _numeric_tolerance(secret: str, *datasets: Dataset) -> float:
    vals = np.concatenate([d.column(secret) for d in datasets])
    vals = vals[~np.isnan(vals)]
    return 0.05 * float(vals.max() - vals.min()) if vals.size else 0.0


def _secret_correct(guess, truth, numeric: bool, tol: float) -> bool:
    if guess is None or truth is None:
        return guess is None and truth is None
    return abs(guess - truth) <= tol if numeric else guess == truth


def inference_attack(
    synthetic: Dataset,
    targets: Dataset,
    secret: str,
    known: Optional[Sequence[str]] = None,
    k: int = 1,
    p: Optional[Preprocessor] = None,
    spec: Optional[MetricSpec] = None,
    numeric_tolerance: Optional[float] = None,
    n_attacks: Optional[int] = None,
    rng_seed: int = 0,
) -> AttackOutcome:
    """Nearest-neighbour attribute inference.

    ``targets`` holds full records; the adversary receives only their
    ``known`` columns (default: every attribute but the secret) and the
    secret column is used for scoring alone.
    """
    if secret not in targets.schema.names:
        raise BadAttribute(secret)
    known = [a for a in targets.schema.names if a != secret] if known is None else list(known)
    if secret in known:
        raise BadAttribute(f"secret {secret!r} is among the known attributes")
    p = _resolve(p, spec, synthetic)
    idx = _target_subset(targets, n_attacks, rng_seed)
    chosen = targets.take(idx)
    guesses = inference_guesses(synthetic, chosen.project(known), secret, k, p)
    numeric = targets.schema[secret].is_numeric
    tol = 0.0
    if numeric:
        tol = _numeric_tolerance(secret, synthetic, targets) if numeric_tolerance is None else numeric_tolerance
    s = targets.schema.index(secret)
    attempts = [Attempt(g, r[s], _secret_correct(g, r[s], numeric, tol)) for g, r in zip(guesses, chosen.rows)]
    return _outcome("inference", attempts)


# ------------------------------------------------------- membership inference


def _score_metrics(scores: np.ndarray, labels: np.ndarray) -> Tuple[Dict[str, float], np.ndarray]:
    auc = float(roc_auc_score(labels, scores))
    fpr, tpr, thr = roc_curve(labels, scores)
    best = int(np.argmax(tpr - fpr))
    threshold = float(min(thr[best], np.finfo(float).max))
    decide = scores >= threshold
    metrics = {
        "auc": auc,
        "threshold": threshold,
        "precision": float(precision_score(labels, decide, zero_division=0)),
        "recall": float(recall_score(labels, decide, zero_division=0)),
        "f1": float(f1_score(labels, decide, zero_division=0)),
    }
    return metrics, decide


def mia_distance(
    synthetic: Dataset,
    members: Dataset,
    non_members: Dataset,
    p: Optional[Preprocessor] = None,
    spec: Optional[MetricSpec] = None,
) -> AttackOutcome:
    """Membership scored by closeness to the synthetic data: score = -(min distance)."""
    if len(members) == 0 or len(non_members) == 0:
        raise TooSmall("membership inference needs members and non-members")
    if len(synthetic) == 0:
        raise TooSmall("synthetic dataset is empty")
    p = _resolve(p, spec, synthetic)
    S = p.encode(synthetic)
    dm = nn_search(p, p.encode(members), S)[1][:, 0]
    dn = nn_search(p, p.encode(non_members), S)[1][:, 0]
    scores = -np.concatenate([dm, dn])
    labels = np.concatenate([np.ones(len(dm), dtype=bool), np.zeros(len(dn), dtype=bool)])
    metrics, decide = _score_metrics(scores, labels)
    attempts = [Attempt(bool(g), bool(t), bool(g == t), float(s)) for g, t, s in zip(decide, labels, scores)]
    return _outcome("mia_distance", attempts, metrics)


def shadow_mia(
    threat: ThreatModel,
    fit: Callable[[Dataset, int], Any],
    population: Dataset,
    targets: Dataset,
    is_member: Sequence[bool],
    m: int,
    n_train: int,
    synthetic: Optional[Dataset] = None,
    p: Optional[Preprocessor] = None,
    spec: Optional[MetricSpec] = None,
    rng_seed: int = 0,
    n_samples: Optional[int] = None,
) -> AttackOutcome:
    """Shadow-model membership inference.

    ``fit(train, seed)`` must return an object with ``sample(n, seed)``. For
    each target, m/2 shadows are fitted on population subsamples containing
    it and m/2 on subsamples without it; the feature is the target's minimum
    distance to each shadow's output. The observed feature against the
    audited synthetic data (sampled through the threat model's handle when
    not given) is called "member" iff it lies strictly closer to the mean of
    the "in" features.
    """
    threat.require(Box.BLACK)
    if m < 2 or m % 2:
        raise BadParams("shadow count m must be even and at least 2")
    if len(is_member) != len(targets):
        raise BadParams("one membership label per target is required")
    if n_train < 1 or n_train > len(population):
        raise BadParams(f"n_train={n_train} must lie in [1, {len(population)}]")
    if synthetic is None:
        synthetic = threat.generator.sample(n_samples or n_train, rng_seed)
    n_out = len(synthetic) if n_samples is None else n_samples
    p = _resolve(p, spec, population, synthetic)
    S = p.encode(synthetic)
    scores, decisions = [], []
    for t, target in enumerate(targets.rows):
        T = p.encode_records([target])
        observed = float(nn_search(p, T, S)[1][0, 0])
        others = np.array([i for i, r in enumerate(population.rows) if r != target], dtype=np.int64)
        feats = {True: [], False: []}
        for j in range(m):
            inside = j < m // 2
            rng = _attempt_rng(rng_seed, t, j)
            if inside:
                pick = rng.choice(others, size=min(n_train - 1, len(others)), replace=False)
                rows = (target,) + tuple(population.rows[int(i)] for i in np.sort(pick))
            else:
                pick = rng.choice(others, size=min(n_train, len(others)), replace=False)
                rows = tuple(population.rows[int(i)] for i in np.sort(pick))
            train = Dataset(population.schema, rows, "train", validate=False)
            seed = int(rng.integers(0, 2**63))
            try:
                shadow = fit(train, seed)
                out = shadow.sample(n_out, seed)
            except Exception as exc:
                raise FitFailure(f"shadow {j} for target {t} failed: {exc}") from exc
            feats[inside].append(float(nn_search(p, T, p.encode(out))[1][0, 0]))
        gap_in = abs(observed - math.fsum(feats[True]) / len(feats[True]))
        gap_out = abs(observed - math.fsum(feats[False]) / len(feats[False]))
        scores.append(gap_out - gap_in)
        decisions.append(gap_in < gap_out)
    labels = np.asarray(is_member, dtype=bool)
    attempts = [Attempt(bool(d), bool(y), bool(d == y), float(s)) for d, y, s in zip(decisions, labels, scores)]
    extra: Dict[str, float] = {}
    if labels.any() and not labels.all():
        extra["auc"] = float(roc_auc_score(labels, scores))
        dec = np.asarray(decisions, dtype=bool)
        extra["precision"] = float(precision_score(labels, dec, zero_division=0))
        extra["recall"] = float(recall_score(labels, dec, zero_division=0))
        extra["f1"] = float(f1_score(labels, dec, zero_division=0))
    return _outcome("shadow_mia", attempts, extra)


# ------------------------------------------------------------------ baselines


@dataclass(frozen=True)
class DomainInfo:
    """What an uninformed guesser knows: observed values per attribute and the synthetic size."""

    values: Dict[str, Tuple[Any, ...]]
    n_synthetic: int = 0

    @classmethod
    def from_dataset(cls, d: Dataset) -> "DomainInfo":
        vals = {}
        for j, a in enumerate(d.schema.attributes):
            seen = {r[j] for r in d.rows if r[j] is not None}
            vals[a.name] = tuple(sorted(seen))
        return cls(vals, len(d))


def _domain(domain: DomainInfo, name: str) -> Tuple[Any, ...]:
    vals = domain.values.get(name)
    if not vals:
        raise BadDomain(f"no observed values for attribute {name!r}")
    return vals


def random_baseline(
    attack_kind: str,
    domain: DomainInfo,
    n_attempts: int,
    rng_seed: int = 0,
    *,
    targets: Optional[Dataset] = None,
    secret: Optional[str] = None,
    k: int = 1,
    width: int = 1,
    numeric_tolerance: Optional[float] = None,
    labels: Optional[Sequence[bool]] = None,
) -> AttackOutcome:
    """Uninformed guesses scored exactly like the mirrored attack.

    inference: uniform guess over the observed secret domain, scored against
    ``targets`` (cycled). linkage: two independent uniform k-subsets of the
    synthetic indices, success iff they intersect. singling_out: equality
    predicates on ``width`` attributes with uniformly drawn values, success
    iff exactly one row of ``targets`` matches. mia: fair coin against
    ``labels``.
    """
    if n_attempts < 1:
        raise BadParams("n_attempts must be positive")
    attempts: List[Attempt] = []
    if attack_kind == "inference":
        if targets is None or secret is None or len(targets) == 0:
            raise BadDomain("the inference baseline needs targets and a secret")
        vals = _domain(domain, secret)
        s = targets.schema.index(secret)
        numeric = targets.schema[secret].is_numeric
        tol = 0.0
        if numeric:
            tol = 0.05 * float(max(vals) - min(vals)) if numeric_tolerance is None else numeric_tolerance
        for i in range(n_attempts):
            guess = vals[int(_attempt_rng(rng_seed, i).integers(len(vals)))]
            truth = targets.rows[i % len(targets)][s]
            attempts.append(Attempt(guess, truth, _secret_correct(guess, truth, numeric, tol)))
    elif attack_kind == "linkage":
        n = domain.n_synthetic
        if n < 1 or k > n:
            raise BadDomain(f"the linkage baseline needs k={k} <= synthetic size {n}")
        for i in range(n_attempts):
            rng = _attempt_rng(rng_seed, i)
            a = tuple(sorted(rng.choice(n, size=k, replace=False).tolist()))
            b = tuple(sorted(rng.choice(n, size=k, replace=False).tolist()))
            attempts.append(Attempt((a, b), None, bool(set(a) & set(b))))
    elif attack_kind == "singling_out":
        if targets is None or len(targets) == 0:
            raise BadDomain("the singling-out baseline needs target records")
        names = [a for a in targets.schema.names if domain.values.get(a)]
        if not names:
            raise BadDomain("no attribute has observed values")
        w = min(width, len(names))
        for i in range(n_attempts):
            rng = _attempt_rng(rng_seed, i)
            cols = np.sort(rng.choice(len(names), size=w, replace=False))
            pred = tuple((names[j], "==", _domain(domain, names[j])[int(rng.integers(len(domain.values[names[j]])))]) for j in cols)
            hits = int(predicate_matches(targets, pred).sum())
            attempts.append(Attempt(pred, hits, hits == 1))
    elif attack_kind in ("mia", "mia_distance", "shadow_mia"):
        if not labels:
            raise BadDomain("the membership baseline needs membership labels")
        for i in range(n_attempts):
            guess = bool(_attempt_rng(rng_seed, i).integers(2))
            truth = bool(labels[i % len(labels)])
            attempts.append(Attempt(guess, truth, guess == truth))
    else:
        raise BadParams(f"no random baseline for attack kind {attack_kind!r}")
    return _outcome(f"random_{attack_kind}", attempts)


def control_run(
    attack: Callable[..., AttackOutcome],
    train_targets: Dataset,
    control_targets: Dataset,
    target_arg: str = "targets",
    **shared,
) -> Tuple[AttackOutcome, AttackOutcome]:
    """Run one attack with identical arguments against training and control targets."""
    if target_arg in shared:
        raise BadParams(f"{target_arg!r} is supplied by control_run")
    on_train = attack(**{target_arg: train_targets}, **shared)
    on_control = attack(**{target_arg: control_targets}, **shared)
    return on_train, on_control


# ------------------------------------------------------------------- canaries


def canary_recovery(
    synthetic: Dataset,
    canaries: Sequence[Record],
    p: Optional[Preprocessor] = None,
    spec: Optional[MetricSpec] = None,
    epsilon: float = 0.0,
) -> float:
    """Fraction of canaries whose nearest synthetic record lies within ``epsilon``."""
    if not canaries:
        raise EmptyCanaries("no canaries given")
    if epsilon < 0:
        raise BadParams("epsilon must be nonnegative")
    if math.isinf(epsilon):
        return 1.0
    p = _resolve(p, spec, synthetic, Dataset(synthetic.schema, tuple(canaries), "canaries"))
    d = nn_search(p, p.encode_records(list(canaries)), p.encode(synthetic))[1][:, 0]
    return float(np.mean(d <= epsilon))
