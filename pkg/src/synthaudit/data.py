"""Typed tabular datasets: schema, records, CSV I/O, splitting and canaries.

A record is a plain tuple aligned with the schema's attribute order. Values
are ``str`` for categorical attributes, ``float`` for numeric attributes and
``None`` for a missing value.
"""

from __future__ import annotations

import csv
import enum
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import (
    BadAttribute,
    DataIOError,
    DuplicateCanary,
    EmptyDataset,
    SchemaMismatch,
    SchemaViolation,
    TooSmall,
)

MISSING = None

Value = Union[str, float, None]
Record = Tuple[Value, ...]


@dataclass(frozen=True)
class Categorical:
    domain: Tuple[str, ...]

    def __post_init__(self):
        if not self.domain:
            raise SchemaViolation("categorical domain must be nonempty")
        if "" in self.domain:
            raise SchemaViolation("the empty string is reserved for missing values")
        # canonical order keeps encodings independent of input order
        object.__setattr__(self, "domain", tuple(sorted(set(self.domain))))


@dataclass(frozen=True)
class Numeric:
    min: Optional[float] = None
    max: Optional[float] = None


@dataclass(frozen=True)
class Attribute:
    name: str
    kind: Union[Categorical, Numeric]

    @property
    def is_numeric(self) -> bool:
        return isinstance(self.kind, Numeric)


@dataclass(frozen=True)
class AttributeSchema:
    attributes: Tuple[Attribute, ...]

    def __post_init__(self):
        object.__setattr__(self, "attributes", tuple(self.attributes))
        names = [a.name for a in self.attributes]
        if any(not n for n in names):
            raise SchemaViolation("attribute names must be nonempty")
        if len(set(names)) != len(names):
            raise SchemaViolation(f"duplicate attribute names in {names}")

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(a.name for a in self.attributes)

    def __len__(self):
        return len(self.attributes)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise BadAttribute(f"unknown attribute {name!r}") from None

    def __getitem__(self, name: str) -> Attribute:
        return self.attributes[self.index(name)]

    def subset(self, names: Sequence[str]) -> "AttributeSchema":
        return AttributeSchema(tuple(self[n] for n in names))

    def to_json(self) -> dict:
        out = []
        for a in self.attributes:
            if a.is_numeric:
                entry = {"name": a.name, "kind": "numeric"}
                if a.kind.min is not None:
                    entry["min"] = a.kind.min
                if a.kind.max is not None:
                    entry["max"] = a.kind.max
            else:
                entry = {"name": a.name, "kind": "categorical", "domain": list(a.kind.domain)}
            out.append(entry)
        return {"attributes": out}

    @classmethod
    def from_json(cls, doc: dict) -> "AttributeSchema":
        try:
            attrs = []
            for entry in doc["attributes"]:
                kind = entry["kind"]
                if kind == "numeric":
                    attrs.append(Attribute(entry["name"], Numeric(entry.get("min"), entry.get("max"))))
                elif kind == "categorical":
                    attrs.append(Attribute(entry["name"], Categorical(tuple(entry["domain"]))))
                else:
                    raise SchemaViolation(f"unknown attribute kind {kind!r}")
        except (KeyError, TypeError) as exc:
            raise SchemaViolation(f"malformed schema document: {exc}") from exc
        return cls(tuple(attrs))


def load_schema(path) -> AttributeSchema:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise DataIOError(f"cannot read schema {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SchemaViolation(f"schema {path} is not valid JSON: {exc}") from exc
    return AttributeSchema.from_json(doc)


def _validate_value(attr: Attribute, value, row: int) -> Value:
    if value is None:
        return None
    if attr.is_numeric:
        if isinstance(value, (bool, str)) or not isinstance(value, (int, float, np.integer, np.floating)):
            raise SchemaViolation(f"attribute {attr.name!r}: {value!r} is not numeric", row)
        value = float(value)
        if not math.isfinite(value):
            raise SchemaViolation(f"attribute {attr.name!r}: non-finite value {value}", row)
        lo, hi = attr.kind.min, attr.kind.max
        if (lo is not None and value < lo) or (hi is not None and value > hi):
            raise SchemaViolation(f"attribute {attr.name!r}: {value} outside [{lo}, {hi}]", row)
        return value
    if not isinstance(value, str) or value not in attr.kind.domain:
        raise SchemaViolation(f"attribute {attr.name!r}: {value!r} not in domain", row)
    return value


@dataclass(frozen=True)
class Dataset:
    """An immutable table of records; the row index is the record's identity."""

    schema: AttributeSchema
    rows: Tuple[Record, ...]
    label: str = "real"
    validate: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        rows = tuple(tuple(r) for r in self.rows)
        if self.validate:
            width = len(self.schema)
            clean = []
            for i, r in enumerate(rows):
                if len(r) != width:
                    raise SchemaViolation(f"expected {width} values, got {len(r)}", i)
                clean.append(tuple(_validate_value(a, v, i) for a, v in zip(self.schema.attributes, r)))
            rows = tuple(clean)
        object.__setattr__(self, "rows", rows)

    def __len__(self):
        return len(self.rows)

    @classmethod
    def from_columns(cls, schema: AttributeSchema, columns: Dict[str, Sequence], label: str = "synthetic") -> "Dataset":
        cols = []
        for a in schema.attributes:
            col = columns[a.name]
            if a.is_numeric:
                cols.append([None if v is None or (isinstance(v, float) and math.isnan(v)) else float(v) for v in col])
            else:
                cols.append(list(col))
        rows = tuple(zip(*cols)) if cols else ()
        return cls(schema, rows, label)

    @cached_property
    def _columns(self) -> Dict[str, np.ndarray]:
        out = {}
        for j, a in enumerate(self.schema.attributes):
            if a.is_numeric:
                out[a.name] = np.array([np.nan if r[j] is None else r[j] for r in self.rows], dtype=float)
            else:
                out[a.name] = np.array([r[j] for r in self.rows], dtype=object)
        return out

    def column(self, name: str) -> np.ndarray:
        """Column as an array: float with NaN for numeric, object with None for categorical."""
        self.schema.index(name)
        return self._columns[name]

    def take(self, indices: Iterable[int], label: Optional[str] = None) -> "Dataset":
        rows = tuple(self.rows[int(i)] for i in indices)
        return Dataset(self.schema, rows, self.label if label is None else label, validate=False)

    def project(self, names: Sequence[str], label: Optional[str] = None) -> "Dataset":
        idx = [self.schema.index(n) for n in names]
        rows = tuple(tuple(r[j] for j in idx) for r in self.rows)
        return Dataset(self.schema.subset(names), rows, self.label if label is None else label, validate=False)

    def relabel(self, label: str) -> "Dataset":
        return Dataset(self.schema, self.rows, label, validate=False)


# --------------------------------------------------------------------- CSV


def _parse_float(text: str) -> Optional[float]:
    try:
        v = float(text)
    except ValueError:
        return None
    return v if math.isfinite(v) else None


def _read_table(path) -> Tuple[List[str], List[List[str]]]:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise EmptyDataset(f"{path} has no header row") from None
            rows = [r for r in reader if r]
    except OSError as exc:
        raise DataIOError(f"cannot read {path}: {exc}") from exc
    return header, rows


def infer_schema(header: Sequence[str], *tables: Sequence[Sequence[str]]) -> AttributeSchema:
    """Numeric iff every non-missing value parses as a finite real, pooled over ``tables``."""
    attrs = []
    for j, name in enumerate(header):
        values = [r[j] for t in tables for r in t if j < len(r) and r[j] != ""]
        if all(_parse_float(v) is not None for v in values):
            attrs.append(Attribute(name, Numeric()))
        else:
            attrs.append(Attribute(name, Categorical(tuple(values))))
    return AttributeSchema(tuple(attrs))


def _convert(schema: AttributeSchema, raw: List[List[str]]) -> List[Record]:
    width = len(schema)
    out = []
    for i, r in enumerate(raw):
        if len(r) != width:
            raise SchemaViolation(f"expected {width} fields, got {len(r)}", i)
        rec = []
        for a, text in zip(schema.attributes, r):
            if text == "":
                rec.append(None)
            elif a.is_numeric:
                v = _parse_float(text)
                if v is None:
                    raise SchemaViolation(f"attribute {a.name!r}: {text!r} is not a finite real", i)
                rec.append(v)
            else:
                rec.append(text)
        out.append(tuple(rec))
    return out


def load_csv(path, schema: Optional[AttributeSchema] = None, label: str = "real") -> Dataset:
    """Read a CSV file with a mandatory header; empty fields are missing values.

    Without ``schema`` the attribute kinds are inferred from the file.
    """
    header, raw = _read_table(path)
    if schema is None:
        schema = infer_schema(header, raw)
    elif list(header) != list(schema.names):
        raise SchemaViolation(f"header {header} does not match schema attributes {list(schema.names)}")
    if not raw:
        raise EmptyDataset(f"{path} contains no data rows")
    return Dataset(schema, tuple(_convert(schema, raw)), label)


def load_csv_many(paths: Sequence, labels: Sequence[str], schema: Optional[AttributeSchema] = None) -> List[Dataset]:
    """Load several files sharing one header; an inferred schema is pooled over all of them."""
    tables = [_read_table(p) for p in paths]
    header = tables[0][0]
    for p, (h, _) in zip(paths, tables):
        if list(h) != list(header):
            raise SchemaMismatch(f"{p}: header {h} differs from {header}")
    if schema is None:
        schema = infer_schema(header, *[t for _, t in tables])
    elif list(header) != list(schema.names):
        raise SchemaViolation(f"header {header} does not match schema attributes {list(schema.names)}")
    out = []
    for p, (_, raw), lab in zip(paths, tables, labels):
        if not raw:
            raise EmptyDataset(f"{p} contains no data rows")
        out.append(Dataset(schema, tuple(_convert(schema, raw)), lab))
    return out


def _format_value(v: Value) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return v


def save_csv(d: Dataset, path) -> None:
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(d.schema.names)
            for r in d.rows:
                w.writerow([_format_value(v) for v in r])
    except OSError as exc:
        raise DataIOError(f"cannot write {path}: {exc}") from exc


# ------------------------------------------------------------ split/mutate


class SplitPurpose(enum.Enum):
    HOLDOUT = "holdout"
    CONTROL = "control"


@dataclass(frozen=True)
class SplitSpec:
    fraction: float
    rng_seed: int
    purpose: SplitPurpose = SplitPurpose.HOLDOUT

    def __post_init__(self):
        if not 0.0 < self.fraction < 1.0:
            raise ValueError(f"split fraction must lie strictly between 0 and 1, got {self.fraction}")
        if not 0 <= int(self.rng_seed) < 2**64:
            raise ValueError("rng_seed must be a 64-bit unsigned integer")


def split_indices(n: int, spec: SplitSpec) -> Tuple[np.ndarray, np.ndarray]:
    if n < 2:
        raise TooSmall(f"cannot split {n} rows")
    n_first = int(math.floor(spec.fraction * n + 0.5))
    n_first = min(max(n_first, 1), n - 1)
    perm = np.random.Generator(np.random.PCG64(int(spec.rng_seed))).permutation(n)
    return np.sort(perm[:n_first]), np.sort(perm[n_first:])


def split(d: Dataset, spec: SplitSpec) -> Tuple[Dataset, Dataset]:
    """Partition ``d`` into two disjoint parts; the first has round-half-up(fraction * n) rows."""
    first, second = split_indices(len(d), spec)
    if spec.purpose is SplitPurpose.HOLDOUT:
        labels = (d.label, "holdout")
    else:
        labels = ("train", "control")
    return d.take(first, labels[0]), d.take(second, labels[1])


def exact_match(a: Record, b: Record, numeric_tolerance: float = 0.0, schema: Optional[AttributeSchema] = None) -> bool:
    """Categorical values equal, numeric values within tolerance, Missing only matches Missing."""
    if len(a) != len(b) or (schema is not None and len(a) != len(schema)):
        raise SchemaMismatch("records have different widths")
    for x, y in zip(a, b):
        if x is None or y is None:
            if x is not y:
                return False
            continue
        x_num, y_num = not isinstance(x, str), not isinstance(y, str)
        if x_num != y_num:
            raise SchemaMismatch(f"cannot compare {x!r} with {y!r}")
        if x_num:
            if abs(float(x) - float(y)) > numeric_tolerance:
                return False
        elif x != y:
            return False
    return True


def insert_canaries(d: Dataset, canaries: Sequence[Record], rng_seed: int) -> Tuple[Dataset, Tuple[int, ...]]:
    """Insert canary records at seeded positions; returns the new dataset and canary positions."""
    if not canaries:
        return d, ()
    checked = Dataset(d.schema, tuple(canaries), "canary").rows
    existing = set(d.rows)
    seen = set()
    for c in checked:
        if c in existing or c in seen:
            raise DuplicateCanary(f"canary {c} duplicates an existing record")
        seen.add(c)
    n_total = len(d) + len(checked)
    rng = np.random.Generator(np.random.PCG64(int(rng_seed)))
    positions = np.sort(rng.choice(n_total, size=len(checked), replace=False))
    rows: List[Record] = []
    it_orig, it_can = iter(d.rows), iter(checked)
    pos_set = set(int(p) for p in positions)
    for i in range(n_total):
        rows.append(next(it_can) if i in pos_set else next(it_orig))
    return Dataset(d.schema, tuple(rows), d.label, validate=False), tuple(int(p) for p in positions)
