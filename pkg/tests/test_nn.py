import numpy as np
import pytest

from helpers import mixed_schema, num, random_dataset
from synthaudit.data import AttributeSchema, Dataset
from synthaudit.distance import Bin, Embed, Metric, MetricSpec, Raw, fit_preprocessor
from synthaudit.errors import EmptyReference, IncompatibleMetric, KTooLarge, LabelMismatch
from synthaudit.nn import ProfileKind, knn, nearest, nn_search, profile

L1 = MetricSpec(Metric.L1)
EUC = MetricSpec(Metric.EUCLIDEAN)


def line(values, label="real"):
    return Dataset(AttributeSchema((num("x"),)), tuple((float(v),) for v in values), label)


def prep(*sets, spec=L1, strategy=Raw()):
    return fit_preprocessor(strategy, spec, sets[0], sets[-1])


def test_nearest_self():
    ref = line([5, 2, 9, 4, 7])
    p = prep(ref)
    assert nearest((4.0,), ref, p) == (3, 0.0)


def test_nearest_tie_goes_to_smallest_index():
    ref = line([10, 2, 20, 30, 4])
    p = prep(ref)
    assert nearest((3.0,), ref, p) == (1, 1.0)


def test_nearest_exclusion_on_single_row():
    ref = line([1])
    with pytest.raises(EmptyReference):
        nearest((1.0,), ref, prep(ref), exclude_index=0)


def test_nearest_wrong_spec():
    ref = line([1, 2])
    with pytest.raises(IncompatibleMetric):
        nearest((1.0,), ref, prep(ref), spec=EUC)


def test_knn_exhaustive_and_consistent():
    ref = line([5, 1, 3, 1, 8])
    p = prep(ref)
    got = knn((2.0,), ref, 5, p)
    assert got == [(1, 1.0), (2, 1.0), (3, 1.0), (0, 3.0), (4, 6.0)]
    assert knn((2.0,), ref, 1, p)[0] == nearest((2.0,), ref, p)
    with pytest.raises(KTooLarge):
        knn((2.0,), ref, 6, p)


def test_rrd_holdout_form():
    d1, d2 = line([0]), line([3, 7], "holdout")
    prof = profile(d1, d2, ProfileKind.RRD, prep(d1, d2))
    assert prof.values.tolist() == [3.0] and not prof.same_set


def test_ssd_three_points():
    s = line([0, 1, 10], "synthetic")
    prof = profile(s, s, ProfileKind.SSD, prep(s))
    assert prof.values.tolist() == [1.0, 1.0, 9.0]
    assert prof.argmin_index.tolist() == [1, 0, 1]


def test_srd_of_copy_is_zero():
    rng = np.random.default_rng(0)
    real = random_dataset(rng, mixed_schema(), 50)
    syn = real.relabel("synthetic")
    p = fit_preprocessor(Raw(), MetricSpec(Metric.GOWER), real, syn)
    assert not profile(syn, real, ProfileKind.SRD, p).values.any()


def test_same_set_rrd_excludes_self():
    real = line([0, 2, 5])
    prof = profile(real, real, ProfileKind.RRD, prep(real))
    assert prof.same_set and prof.values.tolist() == [2.0, 2.0, 3.0]
    assert all(prof.argmin_index != np.arange(3))


@pytest.mark.parametrize(
    "q,r,kind",
    [("real", "real", ProfileKind.SRD), ("synthetic", "real", ProfileKind.RSD), ("synthetic", "synthetic", ProfileKind.RRD), ("real", "synthetic", ProfileKind.SSD)],
)
def test_label_mismatch(q, r, kind):
    a, b = line([1, 2], q), line([3, 4], r)
    with pytest.raises(LabelMismatch):
        profile(a, b, kind, prep(a, b))


def test_ssd_needs_one_set():
    a, b = line([1, 2], "synthetic"), line([3, 4], "synthetic")
    with pytest.raises(LabelMismatch):
        profile(a, b, ProfileKind.SSD, prep(a, b))


def test_empty_reference():
    a = line([1], "synthetic")
    with pytest.raises(EmptyReference):
        profile(a, a, ProfileKind.SSD, prep(a))


CASES = [
    (MetricSpec(Metric.EUCLIDEAN), Embed()),
    (MetricSpec(Metric.L1), Embed()),
    (MetricSpec(Metric.MAHALANOBIS), Embed()),
    (MetricSpec(Metric.GOWER), Raw()),
    (MetricSpec(Metric.HAMMING), Raw()),
    (MetricSpec(Metric.COSINE), Embed()),
    (MetricSpec(Metric.EUCLIDEAN), Bin(4)),
]


@pytest.mark.parametrize("spec,strategy", CASES)
def test_accelerated_equals_brute_force(spec, strategy):
    rng = np.random.default_rng(21)
    schema = mixed_schema(3, 2)
    # a coarse grid makes exact ties common, which exercises the tie-break
    real = random_dataset(rng, schema, 200, missing=0.05, grid=1.0)
    syn = random_dataset(rng, schema, 200, missing=0.05, grid=1.0).relabel("synthetic")
    p = fit_preprocessor(strategy, spec, real, syn)
    Q, R = p.encode(syn), p.encode(real)
    for k in (1, 3):
        fast = nn_search(p, Q, R, k=k, accelerate=True)
        slow = nn_search(p, Q, R, k=k, accelerate=False)
        assert np.array_equal(fast[0], slow[0]) and np.array_equal(fast[1], slow[1])
    fast = nn_search(p, R, R, exclude_self=True, accelerate=True)
    slow = nn_search(p, R, R, exclude_self=True, accelerate=False)
    assert np.array_equal(fast[0], slow[0]) and np.array_equal(fast[1], slow[1])


def test_brute_force_matches_direct_oracle():
    rng = np.random.default_rng(22)
    schema = mixed_schema(2, 2)
    real = random_dataset(rng, schema, 60, grid=1.0)
    syn = random_dataset(rng, schema, 40, grid=1.0).relabel("synthetic")
    p = fit_preprocessor(Raw(), MetricSpec(Metric.GOWER), real, syn)
    prof = profile(syn, real, ProfileKind.SRD, p, accelerate=False)
    for i, q in enumerate(syn.rows):
        dists = [nearest(q, real.take([j]), p)[1] for j in range(len(real))]
        best = min(dists)
        assert prof.values[i] == best
        assert prof.argmin_index[i] == dists.index(best)


def test_parallel_is_identical():
    rng = np.random.default_rng(23)
    schema = mixed_schema(3, 1)
    real = random_dataset(rng, schema, 1500)
    syn = random_dataset(rng, schema, 1300).relabel("synthetic")
    p = fit_preprocessor(Embed(), EUC, real, syn)
    a = profile(syn, real, ProfileKind.SRD, p, n_jobs=1)
    b = profile(syn, real, ProfileKind.SRD, p, n_jobs=4)
    assert np.array_equal(a.values, b.values) and np.array_equal(a.argmin_index, b.argmin_index)


def test_permutation_equivariance():
    rng = np.random.default_rng(24)
    schema = mixed_schema(2, 1)
    real = random_dataset(rng, schema, 80)
    syn = random_dataset(rng, schema, 30).relabel("synthetic")
    p = fit_preprocessor(Raw(), MetricSpec(Metric.GOWER), real, syn)
    perm = rng.permutation(80)
    base = profile(syn, real, ProfileKind.SRD, p)
    moved = profile(syn, real.take(perm), ProfileKind.SRD, p)
    assert np.array_equal(base.values, moved.values)
    assert np.array_equal(perm[moved.argmin_index], base.argmin_index)


def test_srd_zero_when_synthetic_contains_a_real_row():
    rng = np.random.default_rng(25)
    schema = mixed_schema(2, 2)
    real = random_dataset(rng, schema, 30)
    syn = Dataset(schema, random_dataset(rng, schema, 10).rows + (real.rows[7],), "synthetic")
    p = fit_preprocessor(Embed(), EUC, real, syn)
    assert (profile(syn, real, ProfileKind.SRD, p).values == 0).any()


def test_self_exclusion_positive_on_distinct_rows():
    rng = np.random.default_rng(26)
    schema = mixed_schema(2, 1)
    syn = random_dataset(rng, schema, 100).relabel("synthetic")
    p = fit_preprocessor(Embed(), EUC, syn, syn)
    prof = profile(syn, syn, ProfileKind.SSD, p)
    assert (prof.values > 0).all() and (prof.argmin_index != np.arange(100)).all()
