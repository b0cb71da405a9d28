"""Tabular and JSON report assembly for batch runs and study analyses."""

from __future__ import annotations

import math
from typing import Mapping, Sequence

from .fidelity import DB_CAP, summarize_db
from .study import MetricCorrelation


def format_db(value: float | None) -> str:
    if value is None:
        return "-"
    if math.isinf(value):
        return "inf"
    return f"{value:.2f}"


def method_table(
    methods: Sequence[str],
    fidelity_db: Mapping[str, float] | None = None,
    preference: Mapping[str, int] | None = None,
    traditional_db: Mapping[str, float] | None = None,
) -> str:
    """Aligned per-method summary: fidelity, preference count, traditional."""
    headers = ["method", "fidelity (dB)", "preference", "traditional (dB)"]
    rows = [
        [
            m,
            format_db(fidelity_db.get(m)) if fidelity_db else "-",
            str(preference.get(m, 0)) if preference is not None else "-",
            format_db(traditional_db.get(m)) if traditional_db else "-",
        ]
        for m in methods
    ]
    widths = [max(len(h), *(len(r[i]) for r in rows)) if rows else len(h) for i, h in enumerate(headers)]
    lines = [
        "  ".join(h.ljust(widths[i]) for i, h in enumerate(headers)),
        "  ".join("-" * widths[i] for i in range(len(headers))),
    ]
    lines += ["  ".join(r[i].ljust(widths[i]) for i in range(len(headers))) for r in rows]
    return "\n".join(lines)


def correlation_table(reports: Mapping[str, MetricCorrelation]) -> str:
    headers = ["metric", "agreement", "matches", "counted", "excluded"]
    rows = [
        [
            r.metric,
            f"{r.agreement:.4f}",
            str(r.matches),
            str(r.counted),
            str(r.excluded),
        ]
        for r in reports.values()
    ]
    widths = [max(len(h), *(len(r[i]) for r in rows)) if rows else len(h) for i, h in enumerate(headers)]
    lines = [
        "  ".join(h.ljust(widths[i]) for i, h in enumerate(headers)),
        "  ".join("-" * widths[i] for i in range(len(headers))),
    ]
    lines += ["  ".join(r[i].ljust(widths[i]) for i in range(len(headers))) for r in rows]
    return "\n".join(lines)


def db_summary(values: Sequence[float]) -> dict:
    """JSON-friendly mean with the infinite-entry cap made explicit."""
    mean, capped = summarize_db(values)
    return {"mean_db": mean, "count": len(values), "capped_at": DB_CAP, "capped": capped}
