"""Per-lookahead evaluation and table-format reports."""

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from ..series import MetricReport, metrics
from .strategies import denormalize_target, predict_normalized

TABLE_COLUMNS = ("Variable", "RMSE", "MAE", "MAPE", "R^2")
LOOKAHEAD_COLUMNS = ("lookahead", "minutes", "RMSE", "MAE", "MAPE", "R^2")


class EvaluationError(ValueError):
    pass


def _mean_report(reports):
    if not reports:
        raise EvaluationError("no lookaheads to average")
    r2 = [r.r2 for r in reports]
    return MetricReport(float(np.mean([r.rmse for r in reports])),
                        float(np.mean([r.mae for r in reports])),
                        float(np.mean([r.mape for r in reports])),
                        None if any(v is None for v in r2) else float(np.mean(r2)))


@dataclass(frozen=True)
class LookaheadReport:
    """Metrics for each lookahead plus averages over the first 5 and 10."""

    per_lookahead: tuple
    step_minutes: float = 5.0
    label: str = ""
    aborted: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def horizon(self):
        return len(self.per_lookahead)

    def average(self, k):
        """Mean of the first ``min(k, H)`` lookahead rows."""
        return _mean_report(list(self.per_lookahead[:k]))

    @property
    def avg5(self):
        return self.average(5)

    @property
    def avg10(self):
        return self.average(10)


def lookahead_report(y_true, y_pred, step_minutes=5.0, label="", aborted=0):
    y = np.asarray(y_true, dtype=float)
    p = np.asarray(y_pred, dtype=float)
    if y.ndim != 2 or y.shape != p.shape:
        raise EvaluationError(f"expected matching (N, H) arrays, got {y.shape} and {p.shape}")
    if len(y) == 0:
        raise EvaluationError("empty validation set")
    full = metrics(y, p)
    per = tuple(full.per_lookahead[h + 1] for h in range(y.shape[1]))
    return LookaheadReport(per, step_minutes, label, aborted)


def predict_dataset(trained, dataset):
    """Denormalized ``(actual, predicted, aborted)`` for every example of ``dataset``."""
    H = trained.spec.horizon
    if len(dataset) == 0:
        raise EvaluationError("empty validation set")
    pred, aborted = predict_normalized(trained, dataset.inputs())
    actual = denormalize_target(trained, dataset.targets()[:, :H])
    return actual, denormalize_target(trained, pred), aborted


def evaluate(trained, dataset, step_minutes=5.0, label=None):
    """Score ``trained`` on held-out ``dataset`` in gwei.

    Examples whose recursive rollout diverged are left out of the metrics and
    counted in ``aborted``.
    """
    actual, pred, aborted = predict_dataset(trained, dataset)
    keep = ~aborted
    if not keep.any():
        raise EvaluationError("every forecast diverged")
    if label is None:
        label = trained.spec.label or trained.spec.kind
    return lookahead_report(actual[keep], pred[keep], step_minutes, label, int(aborted.sum()))


def average_reports(reports, label=None):
    """Average several spans (for example months or walk windows) lookahead by lookahead."""
    if not reports:
        raise EvaluationError("no reports to average")
    H = {r.horizon for r in reports}
    if len(H) != 1:
        raise EvaluationError(f"reports have different horizons: {sorted(H)}")
    per = tuple(_mean_report([r.per_lookahead[h] for r in reports]) for h in range(H.pop()))
    return LookaheadReport(per, reports[0].step_minutes,
                           reports[0].label if label is None else label,
                           sum(r.aborted for r in reports), {"spans": len(reports)})


def _fmt(v):
    return "" if v is None else repr(float(v))


def format_table(rows, delimiter="\t"):
    """Table-format text: one ``(label, MetricReport)`` per row."""
    buf = io.StringIO()
    w = csv.writer(buf, delimiter=delimiter, lineterminator="\n")
    w.writerow(TABLE_COLUMNS)
    for label, rep in rows:
        w.writerow((label,) + tuple(_fmt(v) for v in rep.row()))
    return buf.getvalue()


def format_lookahead(report, delimiter="\t"):
    """Per-lookahead rows followed by ``avg5`` and ``avg10`` summary rows."""
    buf = io.StringIO()
    w = csv.writer(buf, delimiter=delimiter, lineterminator="\n")
    w.writerow(LOOKAHEAD_COLUMNS)
    for h, rep in enumerate(report.per_lookahead, start=1):
        w.writerow((h, repr(h * report.step_minutes)) + tuple(_fmt(v) for v in rep.row()))
    for k in (5, 10):
        w.writerow((f"avg{k}", "") + tuple(_fmt(v) for v in report.average(k).row()))
    return buf.getvalue()


def parse_table(text, delimiter="\t"):
    """Read :func:`format_table` output back into ``{label: MetricReport}``."""
    rows = list(csv.reader(io.StringIO(text), delimiter=delimiter))
    if tuple(rows[0]) != TABLE_COLUMNS:
        raise EvaluationError(f"unexpected header {rows[0]}")
    out = {}
    for r in rows[1:]:
        vals = [float(v) if v else None for v in r[1:]]
        out[r[0]] = MetricReport(*vals)
    return out
