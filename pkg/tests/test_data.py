from __future__ import annotations

import math
from collections import Counter

import numpy as np
import pytest
from conftest import table_from
from hypothesis import given, settings
from hypothesis import strategies as st

from pmudetect.data import (
    ClassLabel,
    MeasurementTable,
    SampleSpec,
    load_csv,
    merge,
    stratified_sample,
    write_csv,
)
from pmudetect.errors import (
    EmptyFile,
    FractionOutOfRange,
    HeaderMismatch,
    MissingMarkerColumn,
    SchemaMismatch,
    UnknownLabel,
)


def write(path, text):
    path.write_text(text)
    return path


def test_three_row_file_gets_one_label_each(tmp_path):
    p = write(tmp_path / "a.csv",
              "x,y,marker\n1,2,Attack\n3,4,Natural\n5,6,NoEvents\n")
    t = load_csv(p)
    assert t.n_rows == 3
    assert t.labels.tolist() == [0, 1, 2]
    assert t.feature_names == ("x", "y")


def test_infinity_token_is_kept_as_nonfinite(tmp_path):
    p = write(tmp_path / "a.csv", "x,y,marker\nInfinity,2,Attack\n-inf,nan,Natural\n")
    t = load_csv(p)
    assert t.n_rows == 2
    assert math.isinf(t.values[0, 0]) and t.values[0, 0] > 0
    assert t.values[1, 0] == -math.inf
    assert math.isnan(t.values[1, 1])


def test_unparseable_cell_becomes_nan(tmp_path):
    t = load_csv(write(tmp_path / "a.csv", "x,marker\nabc,Attack\n"))
    assert math.isnan(t.values[0, 0])


def test_marker_column_found_by_name(tmp_path):
    t = load_csv(write(tmp_path / "a.csv", "marker,x\nNatural,7\n"))
    assert t.feature_names == ("x",)
    assert t.labels.tolist() == [1]


def test_label_aliases():
    for text in ("NoEvents", "no event", "No_Event", " NOEVENT "):
        assert ClassLabel.parse(text) is ClassLabel.NO_EVENT
    with pytest.raises(UnknownLabel):
        ClassLabel.parse("fault")


def test_comment_lines_skipped(tmp_path):
    t = load_csv(write(tmp_path / "a.csv", "# produced elsewhere\nx,marker\n1,Attack\n"))
    assert t.n_rows == 1


def test_errors(tmp_path):
    with pytest.raises(EmptyFile):
        load_csv(write(tmp_path / "e.csv", ""))
    with pytest.raises(MissingMarkerColumn):
        load_csv(write(tmp_path / "m.csv", "x\n1\n"))
    with pytest.raises(HeaderMismatch):
        load_csv(write(tmp_path / "h.csv", "x,marker\n1,Attack\n"), schema=("y",))
    with pytest.raises(SchemaMismatch):
        load_csv(write(tmp_path / "s.csv", "x,marker\n1,2,Attack\n"))
    with pytest.raises(UnknownLabel):
        load_csv(write(tmp_path / "u.csv", "x,marker\n1,Storm\n"))


def test_numeric_markers_need_scenario_map(tmp_path):
    p = write(tmp_path / "a.csv", "x,marker\n1,41\n2,1\n")
    with pytest.raises(UnknownLabel):
        load_csv(p)
    t = load_csv(p, scenario_map={41: ClassLabel.NO_EVENT, 1: ClassLabel.NATURAL})
    assert t.labels.tolist() == [2, 1]


def test_merge_concatenates_in_order():
    a = table_from(np.ones((10, 2)), [0] * 10)
    b = table_from(np.zeros((5, 2)), [1] * 5)
    m = merge([a, b])
    assert m.n_rows == 15
    assert m.provenance.tolist() == [0] * 10 + [1] * 5
    assert m.values[:10].tolist() == a.values.tolist()
    assert merge([a]).n_rows == 10


def test_merge_schema_mismatch():
    a = table_from(np.ones((2, 2)), [0, 1], names=("p", "q"))
    b = table_from(np.ones((2, 2)), [0, 1], names=("p", "r"))
    with pytest.raises(SchemaMismatch):
        merge([a, b])


def test_merge_associative():
    rng = np.random.default_rng(1)
    parts = [table_from(rng.normal(size=(n, 3)), rng.integers(0, 3, n)) for n in (4, 7, 2)]
    left = merge([merge(parts[:2]), parts[2]])
    right = merge([parts[0], merge(parts[1:])])
    assert np.array_equal(left.values, right.values)
    assert np.array_equal(left.labels, right.labels)


def test_tables_are_read_only():
    t = table_from(np.ones((2, 1)), [0, 1])
    with pytest.raises(ValueError):
        t.values[0, 0] = 5.0


def _labelled(counts, seed=0):
    labels = np.repeat(np.arange(3), counts)
    values = np.random.default_rng(seed).normal(size=(len(labels), 2))
    return table_from(values, labels)


def test_full_fraction_is_a_permutation():
    t = _labelled((20, 10, 5))
    s = stratified_sample(t, SampleSpec(1.0, seed=3))
    assert s.n_rows == t.n_rows
    assert sorted(map(tuple, s.values.tolist())) == sorted(map(tuple, t.values.tolist()))


def test_sample_size_on_full_dataset_scale():
    # oracle: sum over classes of round-half-up(0.02 * count)
    counts = (55663, 13374, 4000)
    t = _labelled(counts)
    s = stratified_sample(t, SampleSpec(0.02, seed=7))
    expected = sum(math.floor(0.02 * c + 0.5) for c in counts)
    assert s.n_rows == expected
    assert abs(s.n_rows - 1460.74) <= 2
    got = Counter(s.labels.tolist())
    for code, c in enumerate(counts):
        assert got[code] == math.floor(0.02 * c + 0.5)


def test_sample_is_deterministic():
    t = _labelled((50, 30, 20))
    a = stratified_sample(t, SampleSpec(0.3, seed=11))
    b = stratified_sample(t, SampleSpec(0.3, seed=11))
    c = stratified_sample(t, SampleSpec(0.3, seed=12))
    assert np.array_equal(a.values, b.values)
    assert not np.array_equal(a.values, c.values)


def test_fraction_out_of_range():
    with pytest.raises(FractionOutOfRange):
        SampleSpec(0.0)
    with pytest.raises(FractionOutOfRange):
        SampleSpec(1.5)


@settings(max_examples=40, deadline=None)
@given(st.tuples(*(st.integers(1, 200),) * 3), st.floats(0.05, 1.0), st.integers(0, 2**32))
def test_stratified_proportions_within_one_row(counts, fraction, seed):
    t = _labelled(counts)
    s = stratified_sample(t, SampleSpec(fraction, seed=seed))
    got = np.bincount(s.labels, minlength=3)
    for code, c in enumerate(counts):
        assert abs(got[code] - fraction * c) <= 1


finite_floats = st.floats(allow_nan=False, allow_infinity=False, width=64)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.tuples(finite_floats, finite_floats, st.integers(0, 2)),
                min_size=1, max_size=20))
def test_write_load_round_trip_is_bit_exact(tmp_path_factory, rows):
    path = tmp_path_factory.mktemp("rt") / "t.csv"
    values = np.array([[a, b] for a, b, _ in rows])
    t = table_from(values, [c for _, _, c in rows], names=("R1-PA1:VH", "snort_log1"))
    write_csv(t, path)
    back = load_csv(path)
    assert back.feature_names == t.feature_names
    assert back.values.tobytes() == t.values.tobytes()
    assert np.array_equal(back.labels, t.labels)


def test_round_trip_keeps_nonfinite(tmp_path):
    t = table_from([[np.inf, np.nan], [-np.inf, 1.5]], [0, 2])
    write_csv(t, tmp_path / "t.csv")
    back = load_csv(tmp_path / "t.csv")
    assert back.values[0, 0] == np.inf and np.isnan(back.values[0, 1])
    assert back.values[1, 0] == -np.inf and back.values[1, 1] == 1.5


def test_measurement_table_validation():
    with pytest.raises(SchemaMismatch):
        MeasurementTable(("a", "a"), np.ones((1, 2)), np.array([0]))
    with pytest.raises(UnknownLabel):
        MeasurementTable(("a",), np.ones((1, 1)), np.array([3]))
