"""Per-user development features: grouping, activity filter, log-shift standardization."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

FEATURE_GROUPS: dict[str, tuple[str, ...]] = {
    "reputation": ("followers", "stars_obtained", "eigenvector_centrality", "forked_by"),
    "reciprocity": ("followed", "forks_made", "stars_given", "commits_to_others"),
    "communication": ("comments_written", "issues_opened"),
    "standardization": ("language_count", "spec_web", "spec_functional", "spec_scientific"),
    "information": ("repository_count", "registration_year", "commits_base", "commits_forked"),
}
FEATURE_COLUMNS: tuple[str, ...] = tuple(c for cols in FEATURE_GROUPS.values() for c in cols)
FRACTION_COLUMNS = ("spec_web", "spec_functional", "spec_scientific")
ID_COLUMN = "user"

ACTIVITY_COLUMNS = ("issues_opened", "comments_written", "commits_base", "commits_forked", "commits_to_others")
REGISTRATION_SPAN = (2007, 2014)


class FeatureTableError(ValueError):
    pass


def validate_table(table: pd.DataFrame, span: tuple[int, int] | None = REGISTRATION_SPAN) -> pd.DataFrame:
    """Check columns, missing values and value ranges; returns the table unchanged."""
    missing = [c for c in (ID_COLUMN, *FEATURE_COLUMNS) if c not in table.columns]
    if missing:
        raise FeatureTableError(f"missing columns: {', '.join(missing)}")
    feats = table[list(FEATURE_COLUMNS)]
    if feats.isna().any().any():
        bad = feats.columns[feats.isna().any()].tolist()
        raise FeatureTableError(f"missing values in: {', '.join(bad)}")
    if (feats < 0).any().any():
        bad = feats.columns[(feats < 0).any()].tolist()
        raise FeatureTableError(f"negative values in: {', '.join(bad)}")
    fr = table[list(FRACTION_COLUMNS)]
    if (fr > 1).any().any():
        raise FeatureTableError("specialization fractions must lie in [0, 1]")
    if span is not None and len(table):
        years = table["registration_year"]
        if years.min() < span[0] or years.max() > span[1]:
            raise FeatureTableError(f"registration_year outside {span[0]}-{span[1]}")
    if table[ID_COLUMN].duplicated().any():
        raise FeatureTableError("duplicate user ids")
    return table


def read_feature_csv(path: str | Path, span: tuple[int, int] | None = REGISTRATION_SPAN) -> pd.DataFrame:
    table = pd.read_csv(path, dtype={ID_COLUMN: str}, keep_default_na=True)
    return validate_table(table, span)


def filter_active_users(table: pd.DataFrame, threshold: int = 10,
                        activity_columns: tuple[str, ...] = ACTIVITY_COLUMNS) -> pd.DataFrame:
    """Keep users whose summed activity is at least ``threshold`` and non-zero."""
    activity = table[list(activity_columns)].sum(axis=1)
    keep = (activity >= threshold) & (activity > 0)
    return table.loc[keep].reset_index(drop=True)


@dataclass(frozen=True)
class TransformedMatrix:
    """Standardized ``ln(x + shift)`` features, row-aligned with ``users``."""

    values: np.ndarray
    columns: tuple[str, ...]
    users: tuple[str, ...]
    mean: np.ndarray
    sd: np.ndarray
    shift: float

    def __len__(self) -> int:
        return self.values.shape[0]

    def inverse(self) -> pd.DataFrame:
        # raw features are non-negative; clamp round-off just below zero
        raw = np.maximum(np.exp(self.values * self.sd + self.mean) - self.shift, 0.0)
        df = pd.DataFrame(raw, columns=list(self.columns))
        df.insert(0, ID_COLUMN, list(self.users))
        return df


def transform_features(table: pd.DataFrame, shift: float = 5.0,
                       columns: tuple[str, ...] = FEATURE_COLUMNS) -> TransformedMatrix:
    """ln(x + shift) per cell, then z-scores per column with the sample (n-1) sd."""
    x = table[list(columns)].to_numpy(dtype=float)
    if np.any(x < 0):
        bad = [c for c, neg in zip(columns, (x < 0).any(axis=0)) if neg]
        raise FeatureTableError(f"negative input in: {', '.join(bad)}")
    logged = np.log(x + shift)
    if len(logged) < 2:
        raise FeatureTableError("need at least 2 rows to standardize")
    mean = logged.mean(axis=0)
    sd = logged.std(axis=0, ddof=1)
    zero = [c for c, s in zip(columns, sd) if s == 0]
    if zero:
        raise FeatureTableError(f"zero variance in column(s): {', '.join(zero)}")
    users = tuple(table[ID_COLUMN].astype(str)) if ID_COLUMN in table else tuple(map(str, range(len(x))))
    return TransformedMatrix((logged - mean) / sd, tuple(columns), users, mean, sd, float(shift))
