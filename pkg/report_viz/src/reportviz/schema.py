"""Reader for the aggregate trace CSV schema.

Expected columns (UTF-8, comma-separated, header required):

    round, group, n_trials,
    a_mean, a_stderr, q_mean, q_stderr, delta_mean, delta_stderr,
    qbar_mean, qbar_stderr, theta_mean, theta_stderr,
    unfairness_mean, unfairness_stderr, mode_flags

Blank unfairness cells mean the run had a single group.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass


class SchemaError(ValueError):
    """The CSV does not conform to the aggregate trace schema."""


REQUIRED_COLUMNS = [
    "round",
    "group",
    "n_trials",
    "a_mean",
    "a_stderr",
    "q_mean",
    "q_stderr",
    "delta_mean",
    "delta_stderr",
    "qbar_mean",
    "qbar_stderr",
    "theta_mean",
    "theta_stderr",
    "unfairness_mean",
    "unfairness_stderr",
    "mode_flags",
]


@dataclass
class AggregateRow:
    round: int
    group: str
    n_trials: int
    values: dict  # metric name -> (mean, stderr)
    unfairness: tuple[float, float] | None
    mode_flags: str


@dataclass
class AggregateTable:
    source: str
    rows: list[AggregateRow]

    @property
    def groups(self) -> list[str]:
        seen = []
        for r in self.rows:
            if r.group not in seen:
                seen.append(r.group)
        return seen

    def series(self, group: str, metric: str) -> tuple[list[int], list[float], list[float]]:
        """(rounds, means, stderrs) for one metric of one group."""
        picked = sorted((r for r in self.rows if r.group == group), key=lambda r: r.round)
        if not picked:
            raise SchemaError(f"group {group!r} not present in {self.source}")
        if metric == "unfairness":
            entries = [(r.round, r.unfairness) for r in picked if r.unfairness]
            if not entries:
                raise SchemaError(f"no unfairness values in {self.source}")
            return (
                [t for t, _ in entries],
                [v[0] for _, v in entries],
                [v[1] for _, v in entries],
            )
        try:
            triples = [(r.round, *r.values[metric]) for r in picked]
        except KeyError:
            raise SchemaError(f"unknown metric {metric!r}") from None
        return (
            [t for t, _, _ in triples],
            [m for _, m, _ in triples],
            [s for _, _, s in triples],
        )


def read_aggregate_csv(path) -> AggregateTable:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in REQUIRED_COLUMNS if c not in header]
        if missing:
            raise SchemaError(f"{path}: missing columns {missing}")
        rows = []
        for lineno, rec in enumerate(reader, start=2):
            try:
                values = {
                    m: (float(rec[f"{m}_mean"]), float(rec[f"{m}_stderr"]))
                    for m in ("a", "q", "delta", "qbar", "theta")
                }
                unf = None
                if rec["unfairness_mean"].strip():
                    unf = (float(rec["unfairness_mean"]), float(rec["unfairness_stderr"]))
                rows.append(
                    AggregateRow(
                        round=int(rec["round"]),
                        group=rec["group"],
                        n_trials=int(rec["n_trials"]),
                        values=values,
                        unfairness=unf,
                        mode_flags=rec["mode_flags"],
                    )
                )
            except (TypeError, ValueError) as exc:
                raise SchemaError(f"{path}:{lineno}: {exc}") from None
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return AggregateTable(source=str(path), rows=rows)
