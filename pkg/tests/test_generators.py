import math

import numpy as np
import pytest
from scipy.integrate import quad

from helpers import cat, mixed_schema, num, random_dataset
from synthaudit import generators as gen
from synthaudit.anonymity import PdParams, pd_check
from synthaudit.data import AttributeSchema, Dataset, exact_match
from synthaudit.distance import Embed, Metric, MetricSpec, Raw, fit_preprocessor
from synthaudit.errors import BadParams, EmptyTrain, NotFitted, SchemaMismatch
from synthaudit.indicators import ims, seed_indicators
from synthaudit.nn import ProfileKind, profile


def distinct(n=100, seed=0):
    rng = np.random.default_rng(seed)
    return random_dataset(rng, mixed_schema(2, 2), n, missing=0.05)


def test_kind_validation():
    with pytest.raises(BadParams):
        gen.SeedBasedNoise(0.0)
    with pytest.raises(BadParams):
        gen.SeedBasedNoise(0.1, 1.0)
    with pytest.raises(BadParams):
        gen.ModeCollapsed(0)
    with pytest.raises(BadParams):
        gen.ModeCollapsed(2, -1.0)
    with pytest.raises(BadParams):
        gen.kind_named("gan")
    with pytest.raises(BadParams):
        gen.kind_named("memorizing", sigma=1.0)
    assert gen.kind_named("seed_based_noise", sigma=0.2) == gen.SeedBasedNoise(0.2)
    assert gen.kind_name(gen.ModeCollapsed(3)) == "mode_collapsed"


def test_fit_errors():
    d = distinct(5)
    with pytest.raises(EmptyTrain):
        gen.fit(gen.Memorizing(), d.take([]))
    with pytest.raises(BadParams):
        gen.fit(gen.ModeCollapsed(6), d)
    with pytest.raises(NotFitted):
        gen.sample(gen.Generator(gen.Memorizing(), d.schema, {}), 3, 0)
    with pytest.raises(BadParams):
        gen.fit(gen.Memorizing(), d).sample(0, 1)


def test_independent_marginal_single_row():
    schema = AttributeSchema((num("x"), cat("c", "a", "b")))
    d = Dataset(schema, ((4.5, "b"),))
    out = gen.fit(gen.IndependentMarginal(), d).sample(20, 3)
    assert set(out.rows) == {(4.5, "b")}


def test_independent_marginal_respects_marginals():
    rng = np.random.default_rng(1)
    schema = AttributeSchema((num("x", 0.0, 10.0), cat("c", "a", "b")))
    x = rng.uniform(0, 10, 4000)
    c = rng.choice(["a", "b"], 4000, p=[0.8, 0.2])
    d = Dataset.from_columns(schema, {"x": list(map(float, x)), "c": list(c)})
    out = gen.fit(gen.IndependentMarginal(), d).sample(4000, 2)
    assert abs(np.mean(out.column("c") == "a") - 0.8) < 0.03
    xs = out.column("x")
    assert xs.min() >= 0 and xs.max() <= 10 and abs(xs.mean() - 5) < 0.2


def test_memorizing_stores_and_reproduces():
    d = distinct()
    g = gen.fit(gen.Memorizing(), d)
    assert g.state["rows"] == d.rows
    out = g.sample(10 * len(d), 4)
    assert out.label == "synthetic" and ims(d, out) == 1.0


def test_mode_collapsed():
    d = distinct()
    g = gen.fit(gen.ModeCollapsed(2), d, rng_seed=5)
    assert len(set(g.state["modes"])) == 2
    out = g.sample(50, 1)
    assert set(out.rows) <= set(g.state["modes"])
    syn = out
    p = fit_preprocessor(Raw(), MetricSpec(Metric.GOWER), syn, syn)
    ssd = profile(syn, syn, ProfileKind.SSD, p)
    assert (ssd.values == 0).all()
    jittered = gen.fit(gen.ModeCollapsed(2, 0.1), d, rng_seed=5).sample(50, 1)
    assert len(set(jittered.rows)) > 2


def test_sampling_is_deterministic_and_valid():
    d = distinct()
    for kind in (gen.IndependentMarginal(), gen.Memorizing(), gen.ModeCollapsed(3, 0.2), gen.SeedBasedNoise(0.1, 0.2)):
        a = gen.fit(kind, d, 7).sample(80, 9)
        b = gen.fit(kind, d, 7).sample(80, 9)
        assert a.rows == b.rows
        assert gen.fit(kind, d, 7).sample(80, 10).rows != a.rows
        # re-validate against the training schema
        Dataset(d.schema, a.rows, "synthetic")


def test_seed_generate_zero_noise():
    d = distinct(60, 2)
    g = gen.fit(gen.SeedBasedNoise(1e-12, 0.0), d)
    out = gen.seed_generate(g, d, 3)
    assert len(out) == len(d)
    assert all(exact_match(a, b, 1e-9) for a, b in zip(d.rows, out.rows))
    p = fit_preprocessor(Embed(), MetricSpec(Metric.EUCLIDEAN), d, out)
    assert seed_indicators(d, out, p).hidden_rate == 0.0


def test_seed_generate_preserves_pairing():
    schema = AttributeSchema((num("x"), num("y")))
    seeds = Dataset(schema, ((100.0, 0.0), (0.0, 100.0), (-100.0, 0.0), (0.0, -100.0)))
    g = gen.fit(gen.SeedBasedNoise(0.01), seeds)
    out = gen.seed_generate(g, seeds, 1)
    for s, o in zip(seeds.rows, out.rows):
        assert abs(s[0] - o[0]) < 5 and abs(s[1] - o[1]) < 5


def test_seed_generate_schema_mismatch():
    d = distinct(10)
    g = gen.fit(gen.SeedBasedNoise(0.1), d)
    other = Dataset(AttributeSchema((num("z"),)), ((1.0,),))
    with pytest.raises(SchemaMismatch):
        gen.seed_generate(g, other, 0)
    with pytest.raises(BadParams):
        gen.seed_generate(gen.fit(gen.Memorizing(), d), d, 0)


def test_density_peak_and_symmetry():
    schema = AttributeSchema((num("x"), num("y")))
    seeds = Dataset(schema, ((0.0, 0.0), (2.0, 0.0), (-2.0, 0.0), (1.0, 3.0)))
    g = gen.fit(gen.SeedBasedNoise(0.5), seeds)
    sx = 0.5 * np.std([0, 2, -2, 1])
    sy = 0.5 * np.std([0, 0, 0, 3])
    peak = 1 / (sx * math.sqrt(2 * math.pi)) / (sy * math.sqrt(2 * math.pi))
    assert gen.density(g, seeds.rows[0], (0.0, 0.0)) == pytest.approx(peak, rel=1e-12)
    assert gen.density(g, seeds.rows[1], (0.0, 0.0)) == gen.density(g, seeds.rows[2], (0.0, 0.0))


def test_density_integrates_to_one():
    schema = AttributeSchema((num("x"),))
    seeds = Dataset(schema, ((0.0,), (1.0,), (3.0,)))
    g = gen.fit(gen.SeedBasedNoise(0.3), seeds)
    for s in seeds.rows:
        total, _ = quad(lambda t: gen.density(g, s, (t,)), -50, 50, points=[s[0]], limit=200)
        assert abs(total - 1.0) < 1e-4


def test_density_categorical_mass_sums_to_one():
    schema = AttributeSchema((cat("c", "a", "b", "c"),))
    seeds = Dataset(schema, (("a",), ("a",), ("b",), ("c",)))
    g = gen.fit(gen.SeedBasedNoise(0.1, 0.3), seeds)
    assert sum(gen.density(g, ("a",), (v,)) for v in "abc") == pytest.approx(1.0)
    assert gen.density(g, ("a",), ("a",)) == pytest.approx(0.7 + 0.3 * 0.5)
    assert gen.density(g, ("a",), ("b",)) == pytest.approx(0.3 * 0.25)


def test_density_missing_values():
    schema = AttributeSchema((num("x"),))
    seeds = Dataset(schema, ((0.0,), (None,), (1.0,)))
    g = gen.fit(gen.SeedBasedNoise(0.3), seeds)
    assert gen.density(g, (None,), (0.0,)) == 0.0
    assert gen.density(g, (None,), (None,)) == 1.0


def test_pd_all_equal_seeds():
    schema = AttributeSchema((num("x"),))
    seeds = Dataset(schema, tuple((1.0,) for _ in range(6)))
    g = gen.fit(gen.SeedBasedNoise(0.5), seeds)
    out = gen.seed_generate(g, seeds, 0).rows[0]
    density = lambda s, o: gen.density(g, s, o)  # noqa: E731
    for k in range(2, 6):
        assert pd_check(density, seeds, out, 0, PdParams(k, 1.0001)).releasable
