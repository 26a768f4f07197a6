import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import cat, mixed_schema, num, random_dataset
from synthaudit.data import (
    AttributeSchema,
    Categorical,
    Dataset,
    SplitPurpose,
    SplitSpec,
    exact_match,
    infer_schema,
    insert_canaries,
    load_csv,
    load_schema,
    save_csv,
    split,
    split_indices,
)
from synthaudit.errors import (
    BadAttribute,
    DataIOError,
    DuplicateCanary,
    EmptyDataset,
    SchemaMismatch,
    SchemaViolation,
    TooSmall,
)


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


# -- schema


def test_schema_rejects_duplicate_and_empty_names():
    with pytest.raises(SchemaViolation):
        AttributeSchema((num("a"), num("a")))
    with pytest.raises(SchemaViolation):
        AttributeSchema((num(""),))


def test_categorical_domain_nonempty():
    with pytest.raises(SchemaViolation):
        Categorical(())


def test_schema_json_round_trip(tmp_path):
    s = AttributeSchema((num("age", 0.0, 120.0), cat("sex", "F", "M")))
    assert AttributeSchema.from_json(s.to_json()) == s


def test_unknown_attribute_lookup():
    s = AttributeSchema((num("age"),))
    with pytest.raises(BadAttribute):
        s.index("income")


# -- loading


def test_infer_kinds(tmp_path):
    p = write(tmp_path, "d.csv", "age,sex\n30,F\n41,M\n25,F\n")
    d = load_csv(p)
    assert [a.is_numeric for a in d.schema.attributes] == [True, False]
    assert d.schema["sex"].kind.domain == ("F", "M")
    assert d.rows[0] == (30.0, "F")


def test_infer_treats_nonfinite_as_categorical():
    s = infer_schema(["a", "b"], [["1", "inf"], ["2", "3"]])
    assert s["a"].is_numeric and not s["b"].is_numeric


def test_out_of_domain_value_names_row(tmp_path):
    schema = AttributeSchema((num("age"), cat("sex", "F", "M")))
    p = write(tmp_path, "d.csv", "age,sex\n30,F\n41,X\n")
    with pytest.raises(SchemaViolation) as exc:
        load_csv(p, schema)
    assert exc.value.row == 1
    assert "row 1" in str(exc.value)


def test_numeric_bounds_enforced(tmp_path):
    schema = AttributeSchema((num("age", 0.0, 120.0),))
    with pytest.raises(SchemaViolation):
        load_csv(write(tmp_path, "d.csv", "age\n130\n"), schema)


def test_header_only_is_empty(tmp_path):
    with pytest.raises(EmptyDataset):
        load_csv(write(tmp_path, "d.csv", "age,sex\n"))


def test_missing_file():
    with pytest.raises(DataIOError):
        load_csv("/nonexistent/file.csv")


def test_ragged_row(tmp_path):
    with pytest.raises(SchemaViolation):
        load_csv(write(tmp_path, "d.csv", "a,b\n1,2\n3\n"))


def test_header_mismatch(tmp_path):
    schema = AttributeSchema((num("age"),))
    with pytest.raises(SchemaViolation):
        load_csv(write(tmp_path, "d.csv", "years\n3\n"), schema)


def test_empty_field_is_missing(tmp_path):
    d = load_csv(write(tmp_path, "d.csv", "a,b\n1,x\n,y\n"))
    assert d.rows[1] == (None, "y")


def test_schema_file(tmp_path):
    p = write(tmp_path, "s.json", '{"attributes": [{"name": "a", "kind": "numeric", "min": 0}, {"name": "b", "kind": "categorical", "domain": ["y", "x"]}]}')
    s = load_schema(p)
    assert s["a"].kind.min == 0 and s["b"].kind.domain == ("x", "y")


def test_csv_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    d = random_dataset(rng, mixed_schema(), 50, missing=0.1)
    save_csv(d, tmp_path / "d.csv")
    back = load_csv(tmp_path / "d.csv", d.schema)
    assert len(back) == len(d)
    for a, b in zip(d.rows, back.rows):
        assert exact_match(a, b, 1e-12)


# -- split


def test_split_even():
    d = Dataset(AttributeSchema((num("x"),)), tuple((float(i),) for i in range(10)))
    spec = SplitSpec(0.5, 7)
    a, b = split(d, spec)
    assert (len(a), len(b)) == (5, 5)
    a2, b2 = split(d, spec)
    assert a.rows == a2.rows and b.rows == b2.rows


def test_split_rounds_half_up():
    d = Dataset(AttributeSchema((num("x"),)), ((1.0,), (2.0,), (3.0,)))
    a, b = split(d, SplitSpec(0.5, 1))
    assert (len(a), len(b)) == (2, 1)


def test_split_too_small():
    d = Dataset(AttributeSchema((num("x"),)), ((1.0,),))
    with pytest.raises(TooSmall):
        split(d, SplitSpec(0.5, 1))


def test_split_fraction_bounds():
    for f in (0.0, 1.0, -0.1):
        with pytest.raises(ValueError):
            SplitSpec(f, 0)


def test_split_labels():
    d = Dataset(AttributeSchema((num("x"),)), tuple((float(i),) for i in range(6)), "real")
    assert [p.label for p in split(d, SplitSpec(0.5, 0, SplitPurpose.HOLDOUT))] == ["real", "holdout"]
    assert [p.label for p in split(d, SplitSpec(0.5, 0, SplitPurpose.CONTROL))] == ["train", "control"]


@settings(max_examples=60, deadline=None)
@given(n=st.integers(2, 300), f=st.floats(0.01, 0.99), seed=st.integers(0, 2**64 - 1))
def test_split_is_a_partition(n, f, seed):
    first, second = split_indices(n, SplitSpec(f, seed))
    assert len(first) == min(max(int(np.floor(f * n + 0.5)), 1), n - 1)
    assert np.array_equal(np.sort(np.concatenate([first, second])), np.arange(n))


# -- exact match


def test_exact_match_examples():
    assert exact_match((1.0, "a"), (1.0, "a"))
    assert exact_match((1.0, "a"), (1.0 + 1e-9, "a"), 1e-6)
    assert not exact_match((1.0, "a"), (1.0, "b"))
    assert exact_match((None, "a"), (None, "a"))
    assert not exact_match((None, "a"), (0.0, "a"))


def test_exact_match_width_mismatch():
    with pytest.raises(SchemaMismatch):
        exact_match((1.0,), (1.0, "a"))


@settings(max_examples=100, deadline=None)
@given(st.lists(st.sampled_from([None, 0.0, 1.0, "a", "b"]), min_size=3, max_size=3).map(tuple))
def test_exact_match_reflexive(r):
    assert exact_match(r, r)


def test_exact_match_symmetric_and_transitive_on_corpus():
    rng = np.random.default_rng(3)
    d = random_dataset(rng, mixed_schema(domain=("a", "b")), 40, missing=0.2, grid=2.0)
    rows = d.rows
    for a in rows:
        for b in rows:
            assert exact_match(a, b) == exact_match(b, a)
            if exact_match(a, b):
                assert all(exact_match(a, c) == exact_match(b, c) for c in rows)


# -- canaries


def test_insert_canaries():
    schema = AttributeSchema((num("x"), cat("c", "a", "b")))
    d = Dataset(schema, tuple((float(i), "a") for i in range(10)))
    canaries = [(100.0, "b"), (200.0, "b")]
    out, pos = insert_canaries(d, canaries, 5)
    assert len(out) == 12
    assert sorted(out.rows[i] for i in pos) == sorted(canaries)
    rest = [r for i, r in enumerate(out.rows) if i not in pos]
    assert rest == list(d.rows)
    assert insert_canaries(d, canaries, 5) == (out, pos)


def test_insert_duplicate_canary():
    schema = AttributeSchema((num("x"),))
    d = Dataset(schema, ((1.0,), (2.0,)))
    with pytest.raises(DuplicateCanary):
        insert_canaries(d, [(1.0,)], 0)
    with pytest.raises(DuplicateCanary):
        insert_canaries(d, [(5.0,), (5.0,)], 0)


def test_insert_invalid_canary():
    schema = AttributeSchema((cat("c", "a"),))
    d = Dataset(schema, (("a",),))
    with pytest.raises(SchemaViolation):
        insert_canaries(d, [("z",)], 0)


def test_insert_no_canaries_is_identity():
    schema = AttributeSchema((num("x"),))
    d = Dataset(schema, ((1.0,),))
    out, pos = insert_canaries(d, [], 0)
    assert out is d and pos == ()
