"""Aggregate benchmark rows into accuracy tables and decision-rate curves."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import pandas as pd

from src.models import Decision, Family

ROW_COLUMNS = [
    "family",
    "N",
    "repetition",
    "architecture",
    "decision",
    "R",
    "correct",
    "confidence",
    "loglik_forward",
    "loglik_backward",
    "true_decision",
    "flipped",
    "seed",
    "additive_only",
    "noise_kind",
    "error",
]
GROUP_KEYS = ["family", "architecture", "N"]
DEFAULT_FRACTIONS = tuple(np.round(np.linspace(0.1, 1.0, 10), 2))

_FAMILY_ORDER = {family.value: code for code, family in enumerate(Family)}


@dataclass
class BenchmarkSummary:
    rows: pd.DataFrame
    accuracy: pd.DataFrame
    curves: pd.DataFrame

    @property
    def overall_accuracy(self) -> float:
        return float(self.rows["correct"].mean()) if len(self.rows) else 0.0


def results_to_dataframe(rows: Sequence[dict]) -> pd.DataFrame:
    """One row per repetition, sorted by family, architecture, N, repetition."""
    df = pd.DataFrame(list(rows), columns=ROW_COLUMNS)
    if df.empty:
        return df
    df["_family_order"] = df["family"].map(_FAMILY_ORDER)
    df = df.sort_values(
        ["_family_order", "architecture", "N", "repetition"], kind="mergesort"
    ).drop(columns="_family_order")
    return df.reset_index(drop=True)


def accuracy_table(df: pd.DataFrame) -> pd.DataFrame:
    """Decision accuracy per family, architecture and N.

    Undecided and failed repetitions count as wrong.
    """
    grouped = df.groupby(GROUP_KEYS, sort=False)
    table = pd.DataFrame(
        {
            "accuracy": grouped["correct"].mean(),
            "n": grouped["correct"].size(),
            "undecided": grouped["decision"].apply(
                lambda d: int((d == Decision.UNDECIDED.value).sum())
            ),
            "errors": grouped["decision"].apply(lambda d: int((d == "error").sum())),
        }
    )
    return table.reset_index()


def decision_rate_curve(
    df: pd.DataFrame,
    fractions: Sequence[float] = DEFAULT_FRACTIONS,
) -> pd.DataFrame:
    """Accuracy of the most confident decisions, confidence = |R|.

    For every fraction f the top ceil(f * n) repetitions of a group by
    confidence are scored; ties keep repetition order.
    """
    records = []
    for keys, group in df.groupby(GROUP_KEYS, sort=False):
        ranked = group.assign(_conf=group["confidence"].fillna(-np.inf)).sort_values(
            "_conf", ascending=False, kind="mergesort"
        )
        for fraction in fractions:
            k = max(1, math.ceil(fraction * len(ranked) - 1e-9))
            top = ranked.head(k)
            records.append(
                {
                    **dict(zip(GROUP_KEYS, keys)),
                    "fraction": float(fraction),
                    "n_decisions": k,
                    "accuracy": float(top["correct"].mean()),
                }
            )
    return pd.DataFrame.from_records(
        records, columns=[*GROUP_KEYS, "fraction", "n_decisions", "accuracy"]
    )


def summarize(rows: Sequence[dict], fractions: Sequence[float] = DEFAULT_FRACTIONS) -> BenchmarkSummary:
    df = results_to_dataframe(rows)
    return BenchmarkSummary(df, accuracy_table(df), decision_rate_curve(df, fractions))


# ---- query sweeps ------------------------------------------------------------

SWEEP_COLUMNS = [
    "query",
    "N",
    "repetition",
    "architecture",
    "target",
    "response",
    "value",
    "predicted",
    "truth",
    "sq_error",
    "c1",
    "c2",
    "seed",
    "error",
]
SWEEP_KEYS = ["query", "target", "response", "architecture", "N"]


@dataclass
class SweepSummary:
    rows: pd.DataFrame
    mse: pd.DataFrame

    @property
    def worst_mse(self) -> float:
        return float(self.mse["mse"].max()) if len(self.mse) else math.nan


def sweep_to_dataframe(rows: Sequence[dict]) -> pd.DataFrame:
    """One row per (cell, query, value), in the order the sweep produced them."""
    return pd.DataFrame(list(rows), columns=SWEEP_COLUMNS)


def mse_table(df: pd.DataFrame) -> pd.DataFrame:
    """Mean squared error over values and repetitions per query, pair and N.

    Failed fits are excluded from the means and counted in ``errors``.
    """
    grouped = df.groupby(SWEEP_KEYS, sort=False)
    table = pd.DataFrame(
        {
            "mse": grouped["sq_error"].mean(),
            "max_abs_error": grouped["sq_error"].max() ** 0.5,
            "n_values": grouped["value"].nunique(),
            "reps": grouped["repetition"].nunique(),
            "errors": grouped["error"].apply(lambda e: int((e != "").sum())),
        }
    )
    return table.reset_index()


def summarize_sweep(rows: Sequence[dict]) -> SweepSummary:
    df = sweep_to_dataframe(rows)
    return SweepSummary(df, mse_table(df))
