import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import cat, mixed_schema, num, random_dataset
from synthaudit.anonymity import PdParams, equivalence_classes, k_anonymity, l_diversity, pd_check, pd_check_densities
from synthaudit.data import AttributeSchema, Dataset
from synthaudit.errors import BadAttribute, BadParams, TooFewSeeds, ZeroDensity

SCHEMA = AttributeSchema((cat("sex", "F", "M"), cat("country", "NL", "DE"), cat("job", "a", "b", "c")))


def people(rows):
    return Dataset(SCHEMA, tuple(rows))


def test_classes_example():
    d = people([("F", "NL", "a"), ("F", "NL", "b"), ("M", "DE", "a")])
    part = equivalence_classes(d, ["sex", "country"])
    assert sorted(part.sizes) == [1, 2]
    assert part.classes[0] == (("F", "NL"), (0, 1))


def test_classes_constant_and_empty_qi():
    d = people([("F", "NL", "a"), ("F", "DE", "b")])
    assert equivalence_classes(d, ["sex"]).sizes == [2]
    with pytest.raises(BadAttribute):
        equivalence_classes(d, [])
    with pytest.raises(BadAttribute):
        equivalence_classes(d, ["height"])


def test_k_anonymity_examples():
    d = people([("F", "NL", "a"), ("F", "NL", "a"), ("M", "DE", "a"), ("M", "DE", "b"), ("M", "DE", "c")])
    assert k_anonymity(d, ["sex", "country"]) == 2
    assert k_anonymity(d, ["sex", "country", "job"]) == 1
    same = people([("F", "NL", "a")] * 4)
    assert k_anonymity(same, ["sex", "country", "job"]) == 4


def test_l_diversity_examples():
    d = people([("F", "NL", "a"), ("F", "NL", "b"), ("M", "DE", "a"), ("M", "DE", "b"), ("M", "DE", "c")])
    assert l_diversity(d, ["sex", "country"], "job") == 2
    const = people([("F", "NL", "a"), ("M", "DE", "a")])
    assert l_diversity(const, ["sex"], "job") == 1
    with pytest.raises(BadAttribute):
        l_diversity(d, ["sex", "job"], "job")


def test_l_diversity_singletons():
    d = people([("F", "NL", "a"), ("M", "DE", "b")])
    assert l_diversity(d, ["sex", "country"], "job") == 1


def _brute_k(d, qi):
    cols = [d.schema.index(a) for a in qi]
    best = len(d)
    for i, r in enumerate(d.rows):
        size = sum(all(r[j] == s[j] for j in cols) for s in d.rows)
        best = min(best, size)
    return best


def test_k_anonymity_matches_double_loop():
    rng = np.random.default_rng(0)
    schema = mixed_schema(2, 3, domain=("a", "b", "c"))
    for seed in range(5):
        d = random_dataset(np.random.default_rng(seed), schema, int(rng.integers(20, 300)), missing=0.05, grid=3.0)
        for qi in (["c0"], ["c0", "c1"], ["x0", "c2"], ["x0", "x1", "c0", "c1", "c2"]):
            assert k_anonymity(d, qi) == _brute_k(d, qi)


def test_k_anonymity_monotone_in_qi():
    d = random_dataset(np.random.default_rng(1), mixed_schema(2, 3), 200, grid=2.0)
    names = d.schema.names
    ks = [k_anonymity(d, names[: i + 1]) for i in range(len(names))]
    assert ks == sorted(ks, reverse=True)


def test_binning_coarsens():
    schema = AttributeSchema((num("age"),))
    d = Dataset(schema, tuple((float(v),) for v in range(20)))
    assert k_anonymity(d, ["age"]) == 1
    assert k_anonymity(d, ["age"], n_bins=4) == 5


# -- plausible deniability


def test_pd_params():
    with pytest.raises(BadParams):
        PdParams(1, 2.0)
    with pytest.raises(BadParams):
        PdParams(2, 1.0)


def test_pd_examples():
    r = pd_check_densities([1.0, 0.6, 0.55, 0.1], 0, PdParams(3, 2.0))
    assert r.releasable and set(r.witnesses) == {0, 1, 2} and r.witnesses[0] == 0
    assert pd_check_densities([0.4] * 6, 2, PdParams(5, 1.01)).releasable
    assert not pd_check_densities([1.0, 1e-9, 1e-9, 1e-10], 0, PdParams(2, 2.0)).releasable


def test_pd_errors():
    with pytest.raises(TooFewSeeds):
        pd_check_densities([1.0, 1.0], 0, PdParams(2, 2.0))
    with pytest.raises(ZeroDensity):
        pd_check_densities([0.0, 1.0, 1.0], 0, PdParams(2, 2.0))


def _exhaustive(dens, true, k, gamma):
    others = [i for i in range(len(dens)) if i != true]
    for combo in itertools.combinations(others, k - 1):
        vals = [dens[true]] + [dens[i] for i in combo]
        if min(vals) > 0 and all(gamma ** -1 <= a / b <= gamma for a in vals for b in vals):
            return True
    return False


@settings(max_examples=300, deadline=None)
@given(
    dens=st.lists(st.sampled_from([0.0, 0.05, 0.1, 0.2, 0.3, 0.45, 0.5, 0.8, 1.0, 1.3, 2.0, 3.7]), min_size=3, max_size=12),
    k=st.integers(2, 6),
    gamma=st.sampled_from([1.5, 2.0, 4.0]),
    data=st.data(),
)
def test_pd_window_matches_exhaustive(dens, k, gamma, data):
    if len(dens) <= k:
        return
    candidates = [i for i, v in enumerate(dens) if v > 0]
    if not candidates:
        return
    true = data.draw(st.sampled_from(candidates))
    got = pd_check_densities(dens, true, PdParams(k, gamma))
    assert got.releasable == _exhaustive(dens, true, k, gamma)
    if got.releasable:
        w = [dens[i] for i in got.witnesses]
        assert len(set(got.witnesses)) == k and got.witnesses[0] == true
        assert max(w) / min(w) <= gamma


@settings(max_examples=100, deadline=None)
@given(
    dens=st.lists(st.floats(1e-3, 10.0), min_size=4, max_size=10),
    scale=st.integers(-12, 12).map(lambda e: 2.0**e),  # exact rescaling
)
def test_pd_scale_invariant(dens, scale):
    params = PdParams(3, 2.0)
    a = pd_check_densities(dens, 0, params)
    b = pd_check_densities([v * scale for v in dens], 0, params)
    assert a.releasable == b.releasable


def test_pd_check_with_oracle():
    seeds = Dataset(AttributeSchema((num("x"),)), ((0.0,), (0.1,), (0.2,), (5.0,)))

    def density(seed, out):
        return float(np.exp(-((seed[0] - out[0]) ** 2) / 2))

    assert pd_check(density, seeds, (0.05,), 0, PdParams(3, 2.0)).releasable
    assert not pd_check(density, seeds, (0.05,), 0, PdParams(3, 1.001)).releasable
    with pytest.raises(TooFewSeeds):
        pd_check(density, seeds.take([0, 1]), (0.0,), 0, PdParams(2, 2.0))
