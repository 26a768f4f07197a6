"""Shared builders for randomized test datasets."""

import numpy as np

from synthaudit.data import Attribute, AttributeSchema, Categorical, Dataset, Numeric


def num(name, lo=None, hi=None):
    return Attribute(name, Numeric(lo, hi))


def cat(name, *domain):
    return Attribute(name, Categorical(tuple(domain)))


def mixed_schema(n_num=2, n_cat=2, domain=("a", "b", "c")):
    attrs = [num(f"x{i}") for i in range(n_num)] + [cat(f"c{i}", *domain) for i in range(n_cat)]
    return AttributeSchema(tuple(attrs))


def random_rows(rng, schema, n, missing=0.0, grid=None):
    """Random rows; ``grid`` snaps numerics to multiples of it so ties occur."""
    rows = []
    for _ in range(n):
        r = []
        for a in schema.attributes:
            if missing and rng.random() < missing:
                r.append(None)
            elif a.is_numeric:
                x = float(rng.normal(0.0, 2.0))
                if grid:
                    x = float(np.round(x / grid) * grid)
                r.append(x)
            else:
                dom = a.kind.domain
                r.append(dom[int(rng.integers(len(dom)))])
        rows.append(tuple(r))
    return tuple(rows)


def random_dataset(rng, schema, n, label="real", **kw):
    return Dataset(schema, random_rows(rng, schema, n, **kw), label)
