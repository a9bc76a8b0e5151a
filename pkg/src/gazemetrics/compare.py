"""Compare two per-word metric exports: Pearson correlation and MAE per metric.

Rows are joined on word_index; a metric contributes a pair only when it is
defined (non-empty) in both files.  Pearson needs at least two pairs and
positive variance on both sides, otherwise it is reported as n/a.  FpR is
treated as 0/1 numeric.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

METRIC_COLUMNS = [
    "TFD",
    "AFD",
    "MiFD",
    "MaFD",
    "F_count",
    "TFF_ts",
    "FFD",
    "FpFFD",
    "FpD",
    "FpR",
    "RPD",
    "sRPD",
    "RRD",
]

_FIXATION_BLOCK = METRIC_COLUMNS[:7]
_READING_BLOCK = METRIC_COLUMNS[7:]


@dataclass(frozen=True, slots=True)
class MetricComparison:
    rho: float | None
    mae: float | None
    sd: float | None
    n: int

    def rho_str(self) -> str:
        return "n/a" if self.rho is None else f"{self.rho:.6g}"

    def mae_str(self) -> str:
        if self.mae is None:
            return "n/a"
        return f"{self.mae:.6g} ± {self.sd:.6g}"


@dataclass(frozen=True, slots=True)
class ComparisonReport:
    metrics: dict[str, MetricComparison]

    def render(self) -> str:
        lines = []
        for title, block in (("Fixation metrics", _FIXATION_BLOCK), ("Reading metrics", _READING_BLOCK)):
            cols = [m for m in block if m in self.metrics]
            if not cols:
                continue
            widths = [max(len(c), 18) for c in cols]
            lines.append(title)
            lines.append("  metric   " + "  ".join(c.rjust(w) for c, w in zip(cols, widths)))
            lines.append(
                "  Pearson  "
                + "  ".join(self.metrics[c].rho_str().rjust(w) for c, w in zip(cols, widths))
            )
            lines.append(
                "  MAE+sd   "
                + "  ".join(self.metrics[c].mae_str().rjust(w) for c, w in zip(cols, widths))
            )
            lines.append(
                "  n        "
                + "  ".join(str(self.metrics[c].n).rjust(w) for c, w in zip(cols, widths))
            )
        return "\n".join(lines)

    def to_dict(self) -> dict:
        return {
            m: {"rho": c.rho, "mae": c.mae, "sd": c.sd, "n": c.n}
            for m, c in self.metrics.items()
        }


def read_metrics_table(path: str | Path) -> dict[int, dict[str, float]]:
    """Parse a metrics CSV into {word_index: {column: value}}, skipping blanks."""
    table: dict[int, dict[str, float]] = {}
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames is None or "word_index" not in reader.fieldnames:
            raise ValueError(f"{path}: not a metrics CSV (no word_index column)")
        for row in reader:
            idx = int(row["word_index"])
            values: dict[str, float] = {}
            for col, raw in row.items():
                if col in ("word_index", "text") or raw is None or raw == "":
                    continue
                try:
                    values[col] = float(raw)
                except ValueError:
                    continue
            table[idx] = values
    return table


def pearson(a: np.ndarray, b: np.ndarray) -> float | None:
    if a.size < 2:
        return None
    da = a - a.mean()
    db = b - b.mean()
    ssa = float(np.dot(da, da))
    ssb = float(np.dot(db, db))
    if ssa == 0.0 or ssb == 0.0:
        return None
    return float(np.dot(da, db) / np.sqrt(ssa * ssb))


def compare_tables(
    a: dict[int, dict[str, float]],
    b: dict[int, dict[str, float]],
    metrics: list[str] | None = None,
) -> ComparisonReport:
    metrics = metrics if metrics is not None else METRIC_COLUMNS
    joined = sorted(set(a) & set(b))
    out: dict[str, MetricComparison] = {}
    for m in metrics:
        xs = []
        ys = []
        for w in joined:
            va = a[w].get(m)
            vb = b[w].get(m)
            if va is None or vb is None:
                continue
            xs.append(va)
            ys.append(vb)
        if not xs:
            out[m] = MetricComparison(rho=None, mae=None, sd=None, n=0)
            continue
        x = np.asarray(xs, dtype=np.float64)
        y = np.asarray(ys, dtype=np.float64)
        err = np.abs(x - y)
        mae = float(err.mean())
        sd = float(err.std(ddof=1)) if err.size > 1 else 0.0
        out[m] = MetricComparison(rho=pearson(x, y), mae=mae, sd=sd, n=len(xs))
    return ComparisonReport(metrics=out)


def compare(a_path: str | Path, b_path: str | Path, metrics: list[str] | None = None) -> ComparisonReport:
    return compare_tables(read_metrics_table(a_path), read_metrics_table(b_path), metrics)
