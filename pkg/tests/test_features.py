import math

import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from homophily.features import (
    ACTIVITY_COLUMNS,
    FEATURE_COLUMNS,
    FEATURE_GROUPS,
    FeatureTableError,
    filter_active_users,
    read_feature_csv,
    transform_features,
    validate_table,
)


def make_table(n, seed=0):
    rng = np.random.Generator(np.random.PCG64(seed))
    data = {c: rng.integers(0, 50, n) for c in FEATURE_COLUMNS}
    for c in ("spec_web", "spec_functional", "spec_scientific"):
        data[c] = rng.random(n)
    data["registration_year"] = rng.integers(2007, 2015, n)
    df = pd.DataFrame(data)
    df.insert(0, "user", [f"u{i}" for i in range(n)])
    return df


def test_groups_cover_eighteen_columns():
    assert [len(v) for v in FEATURE_GROUPS.values()] == [4, 4, 2, 4, 4]
    assert len(set(FEATURE_COLUMNS)) == 18


def test_activity_filter_boundaries():
    df = make_table(3)
    for c in ACTIVITY_COLUMNS:
        df[c] = 0
    df.loc[1, "issues_opened"] = 10
    df.loc[2, "comments_written"] = 4
    df.loc[2, "commits_to_others"] = 5
    kept = filter_active_users(df)
    assert kept["user"].tolist() == ["u1"]


def test_activity_filter_counts_every_commit_kind():
    df = make_table(1)
    for c in ACTIVITY_COLUMNS:
        df[c] = 2
    assert len(filter_active_users(df)) == 1  # 5 columns x 2 = 10


def test_activity_filter_empty_table():
    df = make_table(0)
    assert len(filter_active_users(df)) == 0


def test_shift_of_zero_is_ln5():
    df = make_table(2)
    df["followers"] = [0, 10]
    tm = transform_features(df)
    col = FEATURE_COLUMNS.index("followers")
    # standardized back to the logged scale
    assert tm.values[0, col] * tm.sd[col] + tm.mean[col] == pytest.approx(math.log(5), abs=1e-12)


def test_column_0_5_20_hand_computed():
    df = make_table(3)
    df["followers"] = [0, 5, 20]
    tm = transform_features(df)
    logs = [math.log(5), math.log(10), math.log(25)]
    m = sum(logs) / 3
    sd = math.sqrt(sum((v - m) ** 2 for v in logs) / 2)
    expected = [(v - m) / sd for v in logs]
    np.testing.assert_allclose(tm.values[:, FEATURE_COLUMNS.index("followers")], expected, atol=1e-12)


def test_constant_column_is_rejected_by_name():
    df = make_table(5)
    df["forked_by"] = 3
    with pytest.raises(FeatureTableError, match="zero variance.*forked_by"):
        transform_features(df)


def test_negative_input_rejected():
    df = make_table(5)
    df.loc[0, "followers"] = -1
    with pytest.raises(FeatureTableError, match="negative"):
        transform_features(df)


def test_standardized_moments():
    tm = transform_features(make_table(300, seed=4))
    np.testing.assert_allclose(tm.values.mean(axis=0), 0, atol=1e-9)
    np.testing.assert_allclose(tm.values.std(axis=0, ddof=1), 1, atol=1e-9)


def test_inverse_round_trip():
    tm = transform_features(make_table(100, seed=2))
    again = transform_features(tm.inverse())
    np.testing.assert_allclose(again.values, tm.values, atol=1e-9)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(0, 10_000), min_size=3, max_size=40, unique=True))
def test_transform_is_monotone(col):
    df = make_table(len(col))
    df["followers"] = col
    z = transform_features(df).values[:, FEATURE_COLUMNS.index("followers")]
    order = np.argsort(col)
    assert np.all(np.diff(z[order]) > 0)


def test_validation_errors(tmp_path):
    df = make_table(4)
    with pytest.raises(FeatureTableError, match="missing columns"):
        validate_table(df.drop(columns=["followers"]))
    bad = df.copy()
    bad.loc[0, "spec_web"] = 1.5
    with pytest.raises(FeatureTableError, match="fractions"):
        validate_table(bad)
    bad = df.copy()
    bad.loc[0, "registration_year"] = 2003
    with pytest.raises(FeatureTableError, match="registration_year"):
        validate_table(bad)
    path = tmp_path / "f.csv"
    bad = df.astype({"followers": float})
    bad.loc[1, "followers"] = np.nan
    bad.to_csv(path, index=False)
    with pytest.raises(FeatureTableError, match="missing values"):
        read_feature_csv(path)
