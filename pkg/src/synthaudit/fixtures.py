"""Deterministic fixture datasets, also shipped as CSV under ``synthaudit/data``.

``write_all`` regenerates the shipped files; a test checks they agree.
"""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path
from typing import Tuple

import numpy as np

from .data import Attribute, AttributeSchema, Categorical, Dataset, Numeric, load_csv, load_schema, save_csv

DATA_DIR = Path(str(resources.files("synthaudit") / "data"))

OCCUPATIONS = ("account manager", "clerk", "engineer", "farmer", "nurse", "sales", "teacher", "technician")
EDUCATION = ("basic", "secondary", "vocational", "bachelor", "master")
REGIONS = ("east", "north", "south", "west")


def demo_schema() -> AttributeSchema:
    return AttributeSchema(
        (
            Attribute("age", Numeric(18.0, 90.0)),
            Attribute("income", Numeric(0.0, None)),
            Attribute("hours_per_week", Numeric(0.0, 100.0)),
            Attribute("sex", Categorical(("F", "M"))),
            Attribute("region", Categorical(REGIONS)),
            Attribute("education", Categorical(EDUCATION)),
            Attribute("occupation", Categorical(OCCUPATIONS)),
        )
    )


def demo_population(n: int = 1000, seed: int = 20240101) -> Dataset:
    """Mixed-type census-like records; income is continuous so every row is distinct."""
    rng = np.random.default_rng(seed)
    age = rng.integers(18, 91, size=n).astype(float)
    edu = rng.choice(len(EDUCATION), size=n, p=[0.15, 0.35, 0.2, 0.2, 0.1])
    income = np.round(np.exp(rng.normal(9.8 + 0.15 * edu + 0.004 * (age - 18), 0.4)), 2)
    hours = np.round(np.clip(rng.normal(38.0, 8.0, size=n), 0.0, 100.0), 1)
    hours_missing = rng.random(n) < 0.02
    sex = rng.choice(2, size=n)
    region = rng.choice(len(REGIONS), size=n, p=[0.2, 0.3, 0.3, 0.2])
    occ = rng.choice(len(OCCUPATIONS), size=n)
    rows = tuple(
        (
            float(age[i]),
            float(income[i]),
            None if hours_missing[i] else float(hours[i]),
            ("F", "M")[sex[i]],
            REGIONS[region[i]],
            EDUCATION[edu[i]],
            OCCUPATIONS[occ[i]],
        )
        for i in range(n)
    )
    return Dataset(demo_schema(), rows, "real")


def demo_config() -> dict:
    return {
        "paths": {"real": "demo_real.csv", "schema": "demo_schema.json"},
        "splits": {"holdout": {"fraction": 0.3, "seed": 11}, "control": {"fraction": 0.2, "seed": 12}},
        "distance": {"metric": "euclidean", "strategy": "embed"},
        "generator": {"kind": "independent_marginal", "seed": 7},
        "indicators": {
            "ims": {},
            "dcr": {"q": 5},
            "ks": {"alpha": 0.05, "seed": 0},
            "adversarial_accuracy": {},
            "tcap": {"keys": ["sex", "region", "education"], "target": "occupation"},
            "mmd": {"max_rows": 500, "seed": 0},
        },
        "anonymity": {"quasi_identifiers": ["age", "sex", "region"], "sensitive": "occupation", "n_bins": 8},
        "attacks": {
            "seed": 3,
            "n_attacks": 200,
            "suite": [
                {"kind": "singling_out", "mode": "univariate"},
                {"kind": "singling_out", "mode": "multivariate", "width": 3},
                {"kind": "linkage", "aux_a": ["age", "sex", "region"], "aux_b": ["education", "occupation"], "k": 1},
                {"kind": "inference", "secret": "occupation", "k": 1},
                {"kind": "mia_distance"},
            ],
        },
    }


# ------------------------------------------------------ planted outlier (2-D)


def outlier_schema() -> AttributeSchema:
    return AttributeSchema((Attribute("x", Numeric(None, None)), Attribute("y", Numeric(None, None))))


def outlier_fixture(seed: int = 6) -> Tuple[Dataset, Dataset, Dataset]:
    """(train, holdout, synthetic): a uniform bulk on the unit square plus one far outlier.

    The synthetic set is an independent draw from the same bulk plus a
    near copy of the outlier, which is the last row of both train and
    synthetic.
    """
    rng = np.random.default_rng(seed)
    train = rng.random((100, 2))
    holdout = rng.random((900, 2))
    synth = rng.random((100, 2))
    outlier = np.array([6.0, 6.0])
    near = outlier + np.array([0.02, -0.01])
    schema = outlier_schema()

    def ds(a, label):
        return Dataset(schema, tuple((float(round(x, 6)), float(round(y, 6))) for x, y in a), label)

    return ds(np.vstack([train, outlier]), "real"), ds(holdout, "holdout"), ds(np.vstack([synth, near]), "synthetic")


# ----------------------------------------------------- two-cluster collapse


def two_cluster_fixture(seed: int = 1, n_per_cluster: int = 200) -> Dataset:
    """Two well separated Gaussian clusters in the plane."""
    rng = np.random.default_rng(seed)
    a = rng.normal([-3.0, 0.0], 0.6, size=(n_per_cluster, 2))
    b = rng.normal([3.0, 0.0], 0.6, size=(n_per_cluster, 2))
    pts = np.vstack([a, b])
    return Dataset(outlier_schema(), tuple((float(round(x, 6)), float(round(y, 6))) for x, y in pts), "real")


# ------------------------------------------------------------------ shipping


def write_all(directory=DATA_DIR) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    save_csv(demo_population(), directory / "demo_real.csv")
    (directory / "demo_schema.json").write_text(json.dumps(demo_schema().to_json(), indent=2, sort_keys=True) + "\n")
    (directory / "demo_config.json").write_text(json.dumps(demo_config(), indent=2, sort_keys=True) + "\n")
    train, holdout, synth = outlier_fixture()
    save_csv(train, directory / "outlier_train.csv")
    save_csv(holdout, directory / "outlier_holdout.csv")
    save_csv(synth, directory / "outlier_synthetic.csv")
    save_csv(two_cluster_fixture(), directory / "two_clusters.csv")


def load_demo() -> Dataset:
    return load_csv(DATA_DIR / "demo_real.csv", load_schema(DATA_DIR / "demo_schema.json"))


def load_outlier() -> Tuple[Dataset, Dataset, Dataset]:
    schema = outlier_schema()
    return (
        load_csv(DATA_DIR / "outlier_train.csv", schema, "real"),
        load_csv(DATA_DIR / "outlier_holdout.csv", schema, "holdout"),
        load_csv(DATA_DIR / "outlier_synthetic.csv", schema, "synthetic"),
    )


def load_two_clusters() -> Dataset:
    return load_csv(DATA_DIR / "two_clusters.csv", outlier_schema())


if __name__ == "__main__":
    write_all()
