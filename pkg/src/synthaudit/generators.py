"""Small, fully specified generators used to exercise the audit machinery.

None of these are meant to be good generators. They provide the black-box
and white-box surfaces for attacks, seed-based pairing for the seed
indicators and plausible deniability, and deliberately leaky fixtures.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np

from .data import AttributeSchema, Dataset, Record
from .errors import BadParams, EmptyTrain, NotFitted, SchemaMismatch


@dataclass(frozen=True)
class IndependentMarginal:
    n_bins: int = 20


@dataclass(frozen=True)
class SeedBasedNoise:
    sigma: float
    flip_prob: float = 0.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise BadParams("SeedBasedNoise.sigma must be positive")
        if not 0.0 <= self.flip_prob < 1.0:
            raise BadParams("SeedBasedNoise.flip_prob must lie in [0, 1)")


@dataclass(frozen=True)
class Memorizing:
    pass


@dataclass(frozen=True)
class ModeCollapsed:
    n_modes: int
    sigma: float = 0.0

    def __post_init__(self):
        if int(self.n_modes) < 1:
            raise BadParams("ModeCollapsed.n_modes must be positive")
        if self.sigma < 0:
            raise BadParams("ModeCollapsed.sigma must be nonnegative")


GeneratorKind = Union[IndependentMarginal, SeedBasedNoise, Memorizing, ModeCollapsed]

KIND_NAMES = {
    "independent_marginal": IndependentMarginal,
    "seed_based_noise": SeedBasedNoise,
    "memorizing": Memorizing,
    "mode_collapsed": ModeCollapsed,
}


def kind_named(name: str, **params) -> GeneratorKind:
    try:
        cls = KIND_NAMES[name.lower()]
    except KeyError:
        raise BadParams(f"unknown generator kind {name!r}; choose from {sorted(KIND_NAMES)}") from None
    try:
        return cls(**params)
    except TypeError as exc:
        raise BadParams(f"bad parameters for {name}: {exc}") from exc


def kind_name(kind: GeneratorKind) -> str:
    return {v: k for k, v in KIND_NAMES.items()}[type(kind)]


def _rng(seed) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed)))


@dataclass(frozen=True, eq=False)
class Generator:
    """A fitted generator. All state is captured at fit time."""

    kind: GeneratorKind
    schema: AttributeSchema
    state: Dict[str, Any] = field(repr=False)
    training_seed: int = 0

    def sample(self, n: int, rng_seed: int) -> Dataset:
        return sample(self, n, rng_seed)


def _marginal(values) -> Tuple[Tuple[Optional[str], ...], np.ndarray]:
    counts: Dict[Optional[str], int] = {}
    for v in values:
        counts[v] = counts.get(v, 0) + 1
    # None sorts first; the order only has to be deterministic
    keys = tuple(sorted(counts, key=lambda v: (v is not None, v or "")))
    probs = np.array([counts[k] for k in keys], dtype=float)
    return keys, probs / probs.sum()


def _numeric_std(train: Dataset) -> Dict[str, float]:
    out = {}
    for a in train.schema.attributes:
        if a.is_numeric:
            x = train.column(a.name)
            x = x[~np.isnan(x)]
            sd = float(x.std()) if x.size else 0.0
            out[a.name] = sd if sd > 0 else 1.0
    return out


def fit(kind: GeneratorKind, train: Dataset, rng_seed: int = 0) -> Generator:
    """Fit ``kind`` on ``train``."""
    if len(train) == 0:
        raise EmptyTrain("cannot fit a generator on an empty dataset")
    state: Dict[str, Any] = {}
    if isinstance(kind, IndependentMarginal):
        for a in train.schema.attributes:
            col = train.column(a.name)
            if a.is_numeric:
                finite = col[~np.isnan(col)]
                p_missing = 1.0 - finite.size / len(col)
                if finite.size:
                    lo, hi = float(finite.min()), float(finite.max())
                    if hi > lo:
                        edges = np.linspace(lo, hi, kind.n_bins + 1)
                        counts = np.histogram(finite, bins=edges)[0].astype(float)
                    else:
                        edges, counts = np.array([lo, lo]), np.array([1.0])
                    probs = counts / counts.sum()
                else:
                    edges, probs = np.array([0.0, 0.0]), np.array([1.0])
                state[a.name] = ("numeric", edges.copy(), probs, p_missing)
            else:
                state[a.name] = ("categorical",) + _marginal(list(col))
    elif isinstance(kind, Memorizing):
        state["rows"] = tuple(train.rows)
    elif isinstance(kind, ModeCollapsed):
        if kind.n_modes > len(train):
            raise BadParams(f"n_modes={kind.n_modes} exceeds {len(train)} training rows")
        picks = np.sort(_rng(rng_seed).choice(len(train), size=kind.n_modes, replace=False))
        state["modes"] = tuple(train.rows[int(i)] for i in picks)
        state["mode_index"] = tuple(int(i) for i in picks)
        state["std"] = _numeric_std(train)
    elif isinstance(kind, SeedBasedNoise):
        state["seeds"] = tuple(train.rows)
        state["std"] = _numeric_std(train)
        state["marginals"] = {a.name: _marginal(list(train.column(a.name))) for a in train.schema.attributes if not a.is_numeric}
    else:
        raise BadParams(f"unknown generator kind {kind!r}")
    return Generator(kind, train.schema, state, int(rng_seed))


def _clip(attr, x: np.ndarray) -> np.ndarray:
    lo, hi = attr.kind.min, attr.kind.max
    if lo is not None or hi is not None:
        x = np.clip(x, -np.inf if lo is None else lo, np.inf if hi is None else hi)
    return x


def _jitter_rows(schema: AttributeSchema, rows, scale: Dict[str, float], sigma: float, rng) -> Dict[str, list]:
    cols: Dict[str, list] = {}
    n = len(rows)
    for j, a in enumerate(schema.attributes):
        vals = [r[j] for r in rows]
        if a.is_numeric:
            x = np.array([np.nan if v is None else v for v in vals], dtype=float)
            if sigma > 0:
                x = x + rng.normal(0.0, sigma * scale[a.name], size=n)
            x = _clip(a, x)
            cols[a.name] = [None if math.isnan(v) else float(v) for v in x]
        else:
            cols[a.name] = vals
    return cols


def sample(g: Generator, n: int, rng_seed: int) -> Dataset:
    """Draw ``n`` synthetic records; deterministic in ``rng_seed``."""
    if not isinstance(g, Generator) or not g.state:
        raise NotFitted("generator has not been fitted")
    if n < 1:
        raise BadParams("n must be at least 1")
    rng = _rng(rng_seed)
    kind = g.kind
    if isinstance(kind, IndependentMarginal):
        cols = {}
        for a in g.schema.attributes:
            st = g.state[a.name]
            if st[0] == "numeric":
                _, edges, probs, p_missing = st
                b = rng.choice(len(probs), size=n, p=probs)
                u = rng.random(n)
                x = edges[b] + u * (edges[b + 1] - edges[b])
                miss = rng.random(n) < p_missing
                x = _clip(a, x)
                cols[a.name] = [None if m else float(v) for v, m in zip(x, miss)]
            else:
                _, keys, probs = st
                picks = rng.choice(len(keys), size=n, p=probs)
                cols[a.name] = [keys[i] for i in picks]
        return Dataset.from_columns(g.schema, cols, "synthetic")
    if isinstance(kind, Memorizing):
        rows = g.state["rows"]
        picks = rng.integers(0, len(rows), size=n)
        return Dataset(g.schema, tuple(rows[i] for i in picks), "synthetic", validate=False)
    if isinstance(kind, ModeCollapsed):
        modes = g.state["modes"]
        picks = rng.integers(0, len(modes), size=n)
        rows = [modes[i] for i in picks]
        if kind.sigma == 0:
            return Dataset(g.schema, tuple(rows), "synthetic", validate=False)
        return Dataset.from_columns(g.schema, _jitter_rows(g.schema, rows, g.state["std"], kind.sigma, rng), "synthetic")
    if isinstance(kind, SeedBasedNoise):
        seeds = g.state["seeds"]
        picks = rng.integers(0, len(seeds), size=n)
        chosen = Dataset(g.schema, tuple(seeds[i] for i in picks), "seeds", validate=False)
        return seed_generate(g, chosen, int(rng.integers(0, 2**63)))
    raise NotFitted("generator has no sampler")


def seed_generate(g: Generator, seeds: Dataset, rng_seed: int) -> Dataset:
    """One synthetic record per seed; output row i derives from seed row i."""
    if not isinstance(g.kind, SeedBasedNoise):
        raise BadParams("seed_generate needs a SeedBasedNoise generator")
    if not g.state:
        raise NotFitted("generator has not been fitted")
    if seeds.schema != g.schema:
        raise SchemaMismatch("seeds do not share the generator's schema")
    rng = _rng(rng_seed)
    kind = g.kind
    n = len(seeds)
    cols: Dict[str, list] = {}
    for j, a in enumerate(g.schema.attributes):
        vals = [r[j] for r in seeds.rows]
        if a.is_numeric:
            x = np.array([np.nan if v is None else v for v in vals], dtype=float)
            x = _clip(a, x + rng.normal(0.0, kind.sigma * g.state["std"][a.name], size=n))
            cols[a.name] = [None if math.isnan(v) else float(v) for v in x]
        else:
            keys, probs = g.state["marginals"][a.name]
            flip = rng.random(n) < kind.flip_prob
            repl = rng.choice(len(keys), size=n, p=probs)
            cols[a.name] = [keys[r] if f else v for v, f, r in zip(vals, flip, repl)]
    return Dataset.from_columns(g.schema, cols, "synthetic")


def density(g: Generator, seed: Record, output: Record) -> float:
    """Density of producing ``output`` from ``seed`` (numeric Gaussian times categorical mass)."""
    if not isinstance(g.kind, SeedBasedNoise):
        raise BadParams("density is defined for SeedBasedNoise generators")
    if not g.state:
        raise NotFitted("generator has not been fitted")
    f = g.kind.flip_prob
    out = 1.0
    for j, a in enumerate(g.schema.attributes):
        s, o = seed[j], output[j]
        if a.is_numeric:
            if s is None or o is None:
                if s is not o:
                    return 0.0
                continue
            sd = g.kind.sigma * g.state["std"][a.name]
            z = (o - s) / sd
            out *= math.exp(-0.5 * z * z) / (sd * math.sqrt(2.0 * math.pi))
        else:
            keys, probs = g.state["marginals"][a.name]
            p_val = float(probs[keys.index(o)]) if o in keys else 0.0
            out *= (1.0 - f) + f * p_val if o == s else f * p_val
    return out
