"""Fusion of cloud and mobile detection sets.

For every cloud detection we look for an unconsumed mobile detection
with the same label whose left and right edges agree within a tolerance,
take the mobile box, and combine the confidences: summed when both sides
clear their per-class thresholds, otherwise the maximum. Unmatched
detections from either side are carried over unchanged. Thresholding by
the universal threshold happens later, in readout assembly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Optional

from .geometry import (
    CLASS_ALPHABET,
    Detection,
    DetectionSet,
    Source,
    edge_distance,
    horizontal_match,
    validate_detections,
)

DEFAULT_EPSILON = 0.04
DEFAULT_CLASS_THRESHOLD = 0.5
DEFAULT_UNIVERSAL_THRESHOLD = 0.6
DEFAULT_MAX_ROIS = 64


def _default_thresholds() -> Dict[str, float]:
    return {label: DEFAULT_CLASS_THRESHOLD for label in CLASS_ALPHABET}


@dataclass
class EnsembleConfig:
    epsilon: float = DEFAULT_EPSILON
    per_class_thresholds_cloud: Dict[str, float] = field(default_factory=_default_thresholds)
    per_class_thresholds_mobile: Dict[str, float] = field(default_factory=_default_thresholds)
    universal_threshold: float = DEFAULT_UNIVERSAL_THRESHOLD
    max_rois: int = DEFAULT_MAX_ROIS
    # Optional stricter matching: additionally require the candidate
    # boxes to overlap vertically. Off by default; x-edge agreement plus
    # identical labels is the canonical rule.
    require_y_overlap: bool = False

    def __post_init__(self) -> None:
        if self.epsilon < 0:
            raise ValueError("epsilon must be non-negative")
        if self.max_rois < 1:
            raise ValueError("max_rois must be at least 1")
        for thresholds in (self.per_class_thresholds_cloud, self.per_class_thresholds_mobile):
            for label, t in thresholds.items():
                if not 0.0 <= t <= 1.0:
                    raise ValueError(f"threshold for {label!r} outside [0, 1]: {t}")


class ComparisonCounter:
    """Counts candidate-pair comparisons; used to check the O(N^2) bound."""

    def __init__(self) -> None:
        self.count = 0

    def tick(self) -> None:
        self.count += 1


def _y_overlap(a: Detection, b: Detection) -> bool:
    return min(a.box.y_max, b.box.y_max) - max(a.box.y_min, b.box.y_min) > 0.0


def fuse(
    cloud: DetectionSet,
    mobile: DetectionSet,
    cfg: EnsembleConfig,
    counter: Optional[ComparisonCounter] = None,
) -> DetectionSet:
    """Merge cloud and mobile detections into one ensemble set.

    Deterministic: cloud detections are processed in order; among
    matching mobile candidates the one with the smallest summed x-edge
    distance wins, ties broken by higher mobile confidence, then by
    input position. Each mobile detection is consumed at most once.
    """
    if cloud.source is not Source.CLOUD:
        raise ValueError("first argument must be the cloud detection set")
    if mobile.source is not Source.MOBILE:
        raise ValueError("second argument must be the mobile detection set")
    validate_detections(cloud.detections, cfg.max_rois)
    validate_detections(mobile.detections, cfg.max_rois)

    remaining = list(mobile.detections)
    fused: list[Detection] = []

    for c in cloud.detections:
        best_idx: Optional[int] = None
        best_key: Optional[tuple] = None
        for idx, m in enumerate(remaining):
            if counter is not None:
                counter.tick()
            if m.label != c.label:
                continue
            if not horizontal_match(c.box, m.box, cfg.epsilon):
                continue
            if cfg.require_y_overlap and not _y_overlap(c, m):
                continue
            key = (edge_distance(c.box, m.box), -m.confidence, idx)
            if best_key is None or key < best_key:
                best_key = key
                best_idx = idx
        if best_idx is None:
            fused.append(c)
            continue
        m = remaining.pop(best_idx)
        t_cloud = cfg.per_class_thresholds_cloud.get(c.label, DEFAULT_CLASS_THRESHOLD)
        t_mobile = cfg.per_class_thresholds_mobile.get(m.label, DEFAULT_CLASS_THRESHOLD)
        if c.confidence >= t_cloud and m.confidence >= t_mobile:
            confidence = c.confidence + m.confidence
        else:
            confidence = max(c.confidence, m.confidence)
        # The fused detection keeps the mobile partner's box.
        fused.append(Detection(box=m.box, label=c.label, confidence=confidence))

    fused.extend(remaining)
    return DetectionSet(detections=fused, source=Source.ENSEMBLE)


FUSE_ORACLE_MAX = 10


def fuse_oracle(cloud: DetectionSet, mobile: DetectionSet, cfg: EnsembleConfig) -> DetectionSet:
    """Brute-force reference for `fuse`, restated from the definition.

    Builds the complete candidate table (every cloud/mobile pair that
    matches on label and x-edges) up front, then resolves matches cloud
    detection by cloud detection, preferring the smallest edge distance,
    then the highest mobile confidence, then input order. No consumption
    list: eligibility is re-derived from the already-resolved matches on
    every step.
    """
    if len(cloud) > FUSE_ORACLE_MAX or len(mobile) > FUSE_ORACLE_MAX:
        raise ValueError(f"oracle limited to {FUSE_ORACLE_MAX} detections per side")
    validate_detections(cloud.detections, cfg.max_rois)
    validate_detections(mobile.detections, cfg.max_rois)

    pairs = {}
    for ci, c in enumerate(cloud.detections):
        for mi, m in enumerate(mobile.detections):
            ok = c.label == m.label and horizontal_match(c.box, m.box, cfg.epsilon)
            if ok and cfg.require_y_overlap and not _y_overlap(c, m):
                ok = False
            if ok:
                pairs[(ci, mi)] = (edge_distance(c.box, m.box), -m.confidence, mi)

    assigned: Dict[int, int] = {}
    for ci in range(len(cloud.detections)):
        options = [
            (key, mi)
            for (pc, mi), key in pairs.items()
            if pc == ci and mi not in assigned.values()
        ]
        if options:
            assigned[ci] = min(options)[1]

    fused: list[Detection] = []
    for ci, c in enumerate(cloud.detections):
        if ci not in assigned:
            fused.append(c)
            continue
        m = mobile.detections[assigned[ci]]
        t_cloud = cfg.per_class_thresholds_cloud.get(c.label, DEFAULT_CLASS_THRESHOLD)
        t_mobile = cfg.per_class_thresholds_mobile.get(m.label, DEFAULT_CLASS_THRESHOLD)
        if c.confidence >= t_cloud and m.confidence >= t_mobile:
            confidence = c.confidence + m.confidence
        else:
            confidence = max(c.confidence, m.confidence)
        fused.append(Detection(box=m.box, label=c.label, confidence=confidence))
    for mi, m in enumerate(mobile.detections):
        if mi not in assigned.values():
            fused.append(m)
    return DetectionSet(detections=fused, source=Source.ENSEMBLE)
