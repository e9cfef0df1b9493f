"""Classification reports, confusion matrices and A/B run comparison."""

from __future__ import annotations

import csv
import json
import os
from dataclasses import asdict, dataclass, field

import numpy as np

CLASS_NAMES = ("Benign", "Malign")


@dataclass
class ClassScores:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass
class EvalReport:
    confusion: list[list[int]]  # rows = true class, cols = predicted
    per_class: list[ClassScores]
    accuracy: float
    macro_avg: tuple[float, float, float]
    weighted_avg: tuple[float, float, float]
    zero_division: list[str] = field(default_factory=list)

    @property
    def support(self) -> list[int]:
        return [c.support for c in self.per_class]

    @property
    def n(self) -> int:
        return int(sum(self.support))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["macro_avg"] = list(self.macro_avg)
        d["weighted_avg"] = list(self.weighted_avg)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "EvalReport":
        return cls(confusion=[list(map(int, r)) for r in d["confusion"]],
                   per_class=[ClassScores(**c) for c in d["per_class"]],
                   accuracy=float(d["accuracy"]), macro_avg=tuple(d["macro_avg"]),
                   weighted_avg=tuple(d["weighted_avg"]),
                   zero_division=list(d.get("zero_division", [])))

    def to_json(self, path: str | os.PathLike) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    def confusion_csv(self, path: str | os.PathLike) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["true\\pred", *CLASS_NAMES])
            for name, row in zip(CLASS_NAMES, self.confusion):
                w.writerow([name, *row])

    def format(self) -> str:
        return format_report(self)


def _ratio(num: float, den: float, flag: str, flags: list[str]) -> float:
    if den == 0:
        flags.append(flag)
        return 0.0
    return num / den


def confusion_matrix(y_true, y_pred, n_classes: int = 2) -> np.ndarray:
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (np.asarray(y_true, dtype=np.int64), np.asarray(y_pred, dtype=np.int64)), 1)
    return cm


def report_from_predictions(y_true, y_pred) -> EvalReport:
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if len(y_true) == 0:
        raise ValueError("empty test set")
    if len(y_true) != len(y_pred):
        raise ValueError("prediction and label vectors differ in length")
    cm = confusion_matrix(y_true, y_pred)
    flags: list[str] = []
    scores = []
    for c in range(2):
        tp = cm[c, c]
        p = _ratio(tp, cm[:, c].sum(), f"precision[{CLASS_NAMES[c]}]", flags)
        r = _ratio(tp, cm[c, :].sum(), f"recall[{CLASS_NAMES[c]}]", flags)
        f = 0.0 if p + r == 0 else 2 * p * r / (p + r)
        scores.append(ClassScores(float(p), float(r), float(f), int(cm[c, :].sum())))
    support = np.array([s.support for s in scores], dtype=np.float64)
    table = np.array([[s.precision, s.recall, s.f1] for s in scores])
    macro = table.mean(axis=0)
    weighted = (table * support[:, None]).sum(axis=0) / support.sum()
    return EvalReport(
        confusion=cm.tolist(),
        per_class=scores,
        accuracy=float(np.trace(cm) / cm.sum()),
        macro_avg=tuple(float(v) for v in macro),
        weighted_avg=tuple(float(v) for v in weighted),
        zero_division=flags,
    )


def evaluate(model, images: np.ndarray, labels: np.ndarray) -> EvalReport:
    from .cnn import predict_classes

    if len(labels) == 0:
        raise ValueError("empty test set")
    return report_from_predictions(labels, predict_classes(model, images))


def format_report(report: EvalReport) -> str:
    """Single-run table: rows Benign, Malign, Acc, macro avg, weighted avg."""
    lines = [f"{'':>14}{'precision':>11}{'recall':>11}{'f1-score':>11}{'support':>9}"]
    for name, s in zip(CLASS_NAMES, report.per_class):
        lines.append(f"{name:>14}{s.precision:>11.4f}{s.recall:>11.4f}{s.f1:>11.4f}{s.support:>9d}")
    lines.append(f"{'Acc':>14}{'':>11}{'':>11}{report.accuracy:>11.4f}{report.n:>9d}")
    for name, avg in (("macro avg", report.macro_avg), ("weighted avg", report.weighted_avg)):
        lines.append(f"{name:>14}" + "".join(f"{v:>11.4f}" for v in avg) + f"{report.n:>9d}")
    return "\n".join(lines)


@dataclass
class Comparison:
    a: EvalReport
    b: EvalReport
    deltas: dict[str, float]
    notes: list[str]

    def to_dict(self) -> dict:
        return {"A": self.a.to_dict(), "B": self.b.to_dict(), "deltas": self.deltas,
                "notes": self.notes}

    def format(self) -> str:
        return format_comparison(self)


def compare_runs(report_a: EvalReport, report_b: EvalReport) -> Comparison:
    """Side-by-side A/B summary; deltas are A minus B."""
    if report_a.support != report_b.support:
        raise ValueError(f"supports differ: {report_a.support} vs {report_b.support}")
    deltas = {"accuracy": report_a.accuracy - report_b.accuracy}
    for c, name in enumerate(CLASS_NAMES):
        sa, sb = report_a.per_class[c], report_b.per_class[c]
        for metric in ("precision", "recall", "f1"):
            deltas[f"{name.lower()}_{metric}"] = getattr(sa, metric) - getattr(sb, metric)
    for label, ia in (("macro", report_a.macro_avg), ("weighted", report_a.weighted_avg)):
        ib = report_b.macro_avg if label == "macro" else report_b.weighted_avg
        for metric, va, vb in zip(("precision", "recall", "f1"), ia, ib):
            deltas[f"{label}_{metric}"] = va - vb

    notes = []
    fp_a, fp_b = report_a.confusion[0][1], report_b.confusion[0][1]
    pa, pb = report_a.per_class[1].precision, report_b.per_class[1].precision
    if pa != pb:
        better = "A" if pa > pb else "B"
        notes.append(f"{better}: higher malign precision, fewer false positives "
                     f"(FP A={fp_a}, B={fp_b})")
    ra, rb = report_a.per_class[1].recall, report_b.per_class[1].recall
    if ra != rb:
        notes.append(f"{'A' if ra > rb else 'B'}: higher malign recall (more sensitive)")
    if deltas["accuracy"] != 0:
        notes.append(f"{'A' if deltas['accuracy'] > 0 else 'B'}: accuracy higher by "
                     f"{abs(deltas['accuracy']) * 100:.2f} percentage points")
    return Comparison(report_a, report_b, deltas, notes)


def format_comparison(cmp: Comparison) -> str:
    """Two-run table with Precision/Recall/F1-score column pairs for A and B."""
    a, b = cmp.a, cmp.b
    w = 9
    head1 = f"{'':>14}" + "".join(f"{t:^{2 * w}}" for t in ("Precision", "Recall", "F1-score"))
    head2 = f"{'':>14}" + ("{:>{w}}{:>{w}}".format("A", "B", w=w)) * 3
    rows = [head1, head2]
    for c, name in enumerate(CLASS_NAMES):
        sa, sb = a.per_class[c], b.per_class[c]
        vals = (sa.precision, sb.precision, sa.recall, sb.recall, sa.f1, sb.f1)
        rows.append(f"{name:>14}" + "".join(f"{v:>{w}.4f}" for v in vals))
    rows.append(f"{'Acc':>14}" + " " * (4 * w) + f"{a.accuracy:>{w}.4f}{b.accuracy:>{w}.4f}")
    for label in ("macro avg", "weighted avg"):
        va = a.macro_avg if label == "macro avg" else a.weighted_avg
        vb = b.macro_avg if label == "macro avg" else b.weighted_avg
        vals = (va[0], vb[0], va[1], vb[1], va[2], vb[2])
        rows.append(f"{label:>14}" + "".join(f"{v:>{w}.4f}" for v in vals))
    rows.append(f"Support: {a.support[0]} benign and {a.support[1]} malign samples for both A and B")
    if cmp.notes:
        rows.append("")
        rows.extend(cmp.notes)
    return "\n".join(rows)
