"""Readout assembly, the strict accuracy metric, the measurement-unit
prior, and confusion-matrix evaluation tooling."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, List, Sequence, Tuple

import numpy as np

from .ensemble import EnsembleConfig
from .geometry import CLASS_ALPHABET, DECIMAL_POINT, Detection, DetectionSet, iou
from .postprocess import PostprocessConfig, suppress


class Unit(Enum):
    MG_DL = "mg_dL"
    MMOL_L = "mmol_L"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class Readout:
    text: str

    def __post_init__(self) -> None:
        bad = set(self.text) - set(CLASS_ALPHABET)
        if bad:
            raise ValueError(f"characters outside the class alphabet: {sorted(bad)}")


@dataclass(frozen=True)
class GroundTruth:
    text: str
    unit: Unit = Unit.UNKNOWN


def _contained_fraction(inner: Detection, outer: Detection) -> float:
    """Fraction of `inner`'s box area lying inside `outer`'s box."""
    a, b = inner.box, outer.box
    w = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
    h = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    area = (a.x_max - a.x_min) * (a.y_max - a.y_min)
    if w <= 0 or h <= 0 or area <= 0:
        return 0.0
    return (w * h) / area


def _drop_structural_artifacts(dets: List[Detection]) -> List[Detection]:
    """Remove detections that are display structure, not glyphs.

    Two real glyphs on one row never nest, so a digit box sitting
    almost entirely inside another, much larger digit box means one of
    the pair is wrong: either the inner box is the outer glyph's inner
    counter or a stroke fragment (same or lower confidence — drop it),
    or the outer box is a blur-merged blob around a genuine narrow
    glyph (the confident inner detection wins — drop the blob). A
    decimal point whose centre lies in the horizontal core of a digit
    box is a blur fleck, not a separator — real decimal points occupy
    the gaps between glyphs. Overlap suppression misses both cases
    because the boxes involved have low IoU.
    """
    digits = [d for d in dets if d.label != DECIMAL_POINT]

    def nested_in(inner: Detection, outer: Detection) -> bool:
        return (
            _contained_fraction(inner, outer) >= 0.85
            and _contained_fraction(outer, inner) <= 0.5
        )

    kept_digits = []
    for d in digits:
        drop = False
        for other in digits:
            if other is d:
                continue
            if nested_in(d, other) and (
                d.label == other.label or d.confidence <= other.confidence
            ):
                drop = True
                break
            if nested_in(other, d) and (
                other.label != d.label and other.confidence > d.confidence
            ):
                drop = True
                break
        if not drop:
            kept_digits.append(d)

    def in_core(dot: Detection) -> bool:
        cx = (dot.box.x_min + dot.box.x_max) / 2
        cy = (dot.box.y_min + dot.box.y_max) / 2
        for d in kept_digits:
            w = d.box.x_max - d.box.x_min
            if (
                d.box.x_min + 0.1 * w <= cx <= d.box.x_max - 0.1 * w
                and d.box.y_min <= cy <= d.box.y_max
            ):
                return True
        return False

    dots = [d for d in dets if d.label == DECIMAL_POINT and not in_core(d)]
    return kept_digits + dots


def finalize(dset: DetectionSet, cfg: EnsembleConfig, pcfg: PostprocessConfig) -> Readout:
    """Turn a detection set into the final string.

    Drops detections below the universal threshold (inclusive compare),
    suppresses redundant overlaps, removes structural artifacts (nested
    digit boxes, decimal points inside a digit's core), orders survivors
    left to right and concatenates their labels.
    """
    kept = [d for d in dset.detections if d.confidence >= cfg.universal_threshold]
    survivors = suppress(DetectionSet(kept, dset.source), pcfg)
    cleaned = _drop_structural_artifacts(list(survivors.detections))
    ordered = sorted(cleaned, key=lambda d: (d.box.x_min, d.box.y_min))
    return Readout("".join(d.label for d in ordered))


def is_correct(pred: Readout, truth: GroundTruth) -> bool:
    """Strict exact-match: equal length and character-wise equality."""
    return pred.text == truth.text


def apply_unit_prior(pred: Readout, unit: Unit) -> Readout:
    """Correct decimal-point placement from the known measurement unit.

    mg/dL readings are integers, so every '.' is dropped. mmol/L
    readings carry one decimal digit: a missing '.' is inserted before
    the last character, and surplus '.' characters collapse to the last
    one. Unknown unit leaves the readout untouched.
    """
    text = pred.text
    if unit is Unit.MG_DL:
        return Readout(text.replace(".", ""))
    if unit is Unit.MMOL_L:
        dots = text.count(".")
        if dots == 0:
            if len(text) >= 2:
                return Readout(text[:-1] + "." + text[-1])
            return pred
        if dots == 1:
            return pred
        last = text.rindex(".")
        kept = text[:last].replace(".", "") + text[last:]
        return Readout(kept)
    return pred


def corpus_accuracy(pairs: Iterable[Tuple[Readout, GroundTruth]]) -> float:
    pairs = list(pairs)
    if not pairs:
        return 0.0
    return sum(is_correct(p, t) for p, t in pairs) / len(pairs)


MISSED = "missed"
SPURIOUS = "spurious"
_MATRIX_LABELS = list(CLASS_ALPHABET)
_N = len(_MATRIX_LABELS)


@dataclass
class ConfusionMatrix:
    """Per-object confusion counts with an extra missed column and
    spurious row; rows are actual classes, columns predicted ones."""

    counts: np.ndarray  # (n+1, n+1) integer counts

    @classmethod
    def empty(cls) -> "ConfusionMatrix":
        return cls(np.zeros((_N + 1, _N + 1), dtype=np.int64))

    def add(self, actual: str | None, predicted: str | None) -> None:
        row = _MATRIX_LABELS.index(actual) if actual is not None else _N
        col = _MATRIX_LABELS.index(predicted) if predicted is not None else _N
        if row == _N and col == _N:
            raise ValueError("a pair must have an actual or a predicted class")
        self.counts[row, col] += 1

    def normalized(self) -> np.ndarray:
        sums = self.counts.sum(axis=1, keepdims=True).astype(float)
        with np.errstate(invalid="ignore", divide="ignore"):
            norm = np.where(sums > 0, self.counts / sums, 0.0)
        return norm

    def cell(self, actual: str, predicted: str) -> int:
        row = _N if actual == SPURIOUS else _MATRIX_LABELS.index(actual)
        col = _N if predicted == MISSED else _MATRIX_LABELS.index(predicted)
        return int(self.counts[row, col])

    def render(self) -> str:
        header = ["actual\\pred"] + _MATRIX_LABELS + [MISSED]
        rows = [header]
        row_names = _MATRIX_LABELS + [SPURIOUS]
        norm = self.normalized()
        for i, name in enumerate(row_names):
            rows.append([name] + [f"{norm[i, j]:.2f}" for j in range(_N + 1)])
        widths = [max(len(r[c]) for r in rows) for c in range(len(header))]
        return "\n".join(
            "  ".join(cellv.rjust(w) for cellv, w in zip(r, widths)) for r in rows
        )


def confusion_matrix(
    pairs: Sequence[Tuple[DetectionSet, Sequence[Detection]]],
    iou_threshold: float = 0.5,
) -> ConfusionMatrix:
    """Greedy highest-IoU matching of predictions to annotated objects.

    Matched pairs count into (actual, predicted); unmatched ground
    truth into the missed column, unmatched predictions into the
    spurious row.
    """
    matrix = ConfusionMatrix.empty()
    for predicted_set, truth in pairs:
        preds = list(predicted_set.detections)
        truths = list(truth)
        candidates: List[Tuple[float, int, int]] = []
        for ti, t in enumerate(truths):
            for pi, p in enumerate(preds):
                overlap = iou(t.box, p.box)
                if overlap >= iou_threshold:
                    candidates.append((overlap, ti, pi))
        candidates.sort(key=lambda c: (-c[0], c[1], c[2]))
        used_t: set[int] = set()
        used_p: set[int] = set()
        for overlap, ti, pi in candidates:
            if ti in used_t or pi in used_p:
                continue
            used_t.add(ti)
            used_p.add(pi)
            matrix.add(truths[ti].label, preds[pi].label)
        for ti, t in enumerate(truths):
            if ti not in used_t:
                matrix.add(t.label, None)
        for pi, p in enumerate(preds):
            if pi not in used_p:
                matrix.add(None, p.label)
    return matrix
