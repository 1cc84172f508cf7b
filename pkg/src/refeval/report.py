"""Text rendering of evaluation results in the benchmark-table layout.

Percentages are shown to one decimal, rounded half away from zero; all
internal math stays full precision and rounding happens only here.
"""

from __future__ import annotations

from decimal import ROUND_HALF_UP, Decimal

from .metrics import EvalReport
from .synth import BucketStat


def fmt_pct(value: float | None) -> str:
    """One-decimal percentage, half away from zero; '-' when absent."""
    if value is None:
        return "-"
    return str(Decimal(repr(value)).quantize(Decimal("0.1"), rounding=ROUND_HALF_UP))


def render_table(report: EvalReport) -> str:
    """Subsets as columns, R/P/DF1 as rows, plus average and rejection score."""
    headers = [s.subset.value for s in report.per_subset] + ["average"]
    rows = [
        ("R", [s.recall for s in report.per_subset] + [report.avg_recall]),
        ("P", [s.precision for s in report.per_subset] + [report.avg_precision]),
        ("DF1", [s.density_f1 for s in report.per_subset] + [report.avg_density_f1]),
    ]
    widths = [max(len(h), 7) for h in headers]
    lines = ["     " + "  ".join(h.rjust(w) for h, w in zip(headers, widths))]
    for label, values in rows:
        cells = [fmt_pct(v).rjust(w) for v, w in zip(values, widths)]
        lines.append(label.ljust(5) + "  ".join(cells))
    lines.append(
        f"rejection score: {fmt_pct(report.rejection_score)}"
        f"  (over {report.n_rejection_referrings} referrings)"
    )
    if report.n_missing_predictions:
        lines.append(f"missing predictions scored as rejection: {report.n_missing_predictions}")
    return "\n".join(lines) + "\n"


def render_buckets(buckets: dict[int, BucketStat]) -> str:
    """Instance-count breakdown: recall/precision per ground-truth count."""
    lines = ["gt_count  n_referrings   recall  precision"]
    for count, stat in sorted(buckets.items()):
        lines.append(
            f"{count:>8}  {stat.n_referrings:>12}  {fmt_pct(100 * stat.recall):>7}"
            f"  {fmt_pct(100 * stat.precision):>9}"
        )
    return "\n".join(lines) + "\n"
