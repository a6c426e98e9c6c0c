"""
This module provides trace-specific functionality for Polars DataFrames.

Frames built by ``tracekit.trace.model.events_frame`` (one row per event) gain a
``trace`` namespace with the aggregations the kernel-level tools share.

Example:
    >>> timeline.frame.trace.kernels().trace.busy_by("name").head(1)
"""

import polars as pl

from tracekit.trace.model import KERNEL_CLASSES, EventClass


@pl.api.register_dataframe_namespace("trace")
class TraceMethods:
    def __init__(self, df: pl.DataFrame):
        self._df = df

    def kernels(self) -> pl.DataFrame:
        """
        Keep device kernel rows (Compute, Collective, MemTransfer).
        """
        return self._df.filter(pl.col("klass").is_in([str(k) for k in KERNEL_CLASSES]))

    def of_class(self, *klasses: EventClass) -> pl.DataFrame:
        return self._df.filter(pl.col("klass").is_in([str(k) for k in klasses]))

    def busy_by(self, col: str = "name") -> pl.DataFrame:
        """
        Total duration per group, largest first; ties ordered by group name.
        """
        return (
            self._df.group_by(col)
            .agg(pl.col("duration").sum().alias("busy"))
            .sort(["busy", col], descending=[True, False])
        )

    def with_occupancy(self) -> pl.DataFrame:
        return self._df.filter(pl.col("occupancy").is_not_null())

    def weighted_occupancy(self) -> float | None:
        """
        Duration-weighted mean occupancy over rows that report one.
        """
        df = self.with_occupancy()
        total = df["duration"].sum()
        if not total:
            return None
        return float((df["occupancy"] * df["duration"]).sum() / total)

    def matching(self, patterns: list[str], col: str = "name") -> pl.DataFrame:
        """
        Rows whose ``col`` matches any regex in ``patterns`` (case-insensitive).
        """
        if not patterns:
            return self._df.clear()
        joined = "|".join(f"(?:{p})" for p in patterns)
        return self._df.filter(pl.col(col).str.contains(f"(?i){joined}"))
