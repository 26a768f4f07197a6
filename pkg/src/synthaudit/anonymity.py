"""k-anonymity, l-diversity and (k, gamma)-plausible deniability checks."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .data import Dataset, Record
from .errors import BadAttribute, BadParams, TooFewSeeds, ZeroDensity


@dataclass(frozen=True)
class EquivalencePartition:
    quasi_identifiers: Tuple[str, ...]
    classes: Tuple[Tuple[tuple, Tuple[int, ...]], ...]

    @property
    def sizes(self) -> List[int]:
        return [len(rows) for _, rows in self.classes]


def _qi_columns(d: Dataset, quasi_identifiers: Sequence[str]) -> List[int]:
    if not quasi_identifiers:
        raise BadAttribute("quasi-identifier set must be nonempty")
    if len(set(quasi_identifiers)) != len(quasi_identifiers):
        raise BadAttribute("duplicate quasi-identifiers")
    return [d.schema.index(a) for a in quasi_identifiers]


def equivalence_classes(d: Dataset, quasi_identifiers: Sequence[str], n_bins: Optional[int] = None) -> EquivalencePartition:
    """Group rows by their exact QI tuple, in order of first appearance.

    ``n_bins`` optionally coarsens numeric QIs into equal-width bins first.
    """
    cols = _qi_columns(d, quasi_identifiers)
    coarsen = {}
    if n_bins is not None:
        for j in cols:
            if d.schema.attributes[j].is_numeric:
                x = d.column(d.schema.attributes[j].name)
                finite = x[~np.isnan(x)]
                lo, hi = (finite.min(), finite.max()) if finite.size else (0.0, 1.0)
                width = (hi - lo) / n_bins if hi > lo else 1.0
                coarsen[j] = (lo, width, n_bins)
    groups: Dict[tuple, List[int]] = {}
    for i, r in enumerate(d.rows):
        key = []
        for j in cols:
            v = r[j]
            if j in coarsen and v is not None:
                lo, width, nb = coarsen[j]
                v = min(int((v - lo) // width), nb - 1)
            key.append(v)
        groups.setdefault(tuple(key), []).append(i)
    return EquivalencePartition(tuple(quasi_identifiers), tuple((k, tuple(v)) for k, v in groups.items()))


def k_anonymity(d: Dataset, quasi_identifiers: Sequence[str], n_bins: Optional[int] = None) -> int:
    """Smallest equivalence-class size over the quasi-identifiers."""
    if len(d) == 0:
        raise BadAttribute("k-anonymity of an empty dataset is undefined")
    return min(equivalence_classes(d, quasi_identifiers, n_bins).sizes)


def l_diversity(d: Dataset, quasi_identifiers: Sequence[str], sensitive: str, n_bins: Optional[int] = None) -> int:
    """Smallest number of distinct sensitive values inside any equivalence class."""
    if sensitive in quasi_identifiers:
        raise BadAttribute("the sensitive attribute cannot be a quasi-identifier")
    s = d.schema.index(sensitive)
    part = equivalence_classes(d, quasi_identifiers, n_bins)
    return min(len({d.rows[i][s] for i in rows}) for _, rows in part.classes)


# ------------------------------------------------------- plausible deniability


@dataclass(frozen=True)
class PdParams:
    k: int
    gamma: float

    def __post_init__(self):
        if int(self.k) < 2:
            raise BadParams("plausible deniability needs k >= 2")
        if not self.gamma > 1.0:
            raise BadParams("plausible deniability needs gamma > 1")


@dataclass(frozen=True)
class PdResult:
    releasable: bool
    witnesses: Tuple[int, ...]  # seed indices, true seed first


def _within(hi: float, lo: float, gamma: float) -> bool:
    # both forms of the two-sided ratio bound; a ratio overflowing to inf fails it
    with np.errstate(over="ignore"):
        return bool(hi / lo <= gamma and lo / hi >= 1.0 / gamma)


def pd_check_densities(densities: Sequence[float], true_index: int, params: PdParams) -> PdResult:
    """Decide (k, gamma)-plausible deniability from per-seed densities of one output.

    Seeds are sorted by density; a window anchored at each candidate top
    density collects every seed within ratio gamma of it. The output is
    releasable iff some window containing the true seed has >= k members.
    """
    dens = np.asarray(densities, dtype=float)
    n = len(dens)
    if n <= params.k:
        raise TooFewSeeds(f"need more than k={params.k} seeds, got {n}")
    p_true = dens[true_index]
    if not p_true > 0.0:
        raise ZeroDensity("the true seed has zero density for its own output")
    order = np.argsort(-dens, kind="stable")
    positive = [int(i) for i in order if dens[i] > 0.0]
    for top in positive:
        p_top = dens[top]
        if p_top < p_true:
            break
        if not _within(p_top, p_true, params.gamma):
            continue
        members = [i for i in positive if dens[i] <= p_top and _within(p_top, dens[i], params.gamma)]
        if len(members) >= params.k:
            others = [i for i in members if i != true_index]
            # closest ratios to the true seed first, index tie-break
            others.sort(key=lambda i: (abs(np.log(dens[i]) - np.log(p_true)), i))
            return PdResult(True, (int(true_index),) + tuple(others[: params.k - 1]))
    return PdResult(False, ())


def pd_check(
    density: Callable[[Record, Record], float],
    seeds: Dataset,
    produced: Record,
    true_index: int,
    params: PdParams,
) -> PdResult:
    """Plausible deniability of ``produced``, generated from seed ``true_index``."""
    if len(seeds) <= params.k:
        raise TooFewSeeds(f"need more than k={params.k} seeds, got {len(seeds)}")
    dens = [float(density(s, produced)) for s in seeds.rows]
    return pd_check_densities(dens, true_index, params)
