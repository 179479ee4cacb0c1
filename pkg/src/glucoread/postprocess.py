"""Modified non-max suppression with a decimal-point exemption.

The decimal point legitimately overlaps neighbouring digits, so those
detections are pulled out before the greedy suppression pass and merged
back afterwards. Suppression itself is label-agnostic: any two boxes
overlapping above the threshold keep only the more confident one.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import FrozenSet, List

from .geometry import DECIMAL_POINT, Detection, DetectionSet, iou

NMS_ORACLE_MAX = 12


@dataclass
class PostprocessConfig:
    t_nms: float = 0.5
    exempt_labels: FrozenSet[str] = field(default_factory=lambda: frozenset({DECIMAL_POINT}))
    dedupe_exempt: bool = True
    # Two real decimal points never overlap, so any IoU this high means
    # the same mark was reported twice (e.g. by both ensemble sides
    # with slightly shifted boxes).
    dedupe_exempt_threshold: float = 0.25

    def __post_init__(self) -> None:
        if not 0.0 <= self.t_nms <= 1.0:
            raise ValueError(f"t_nms outside [0, 1]: {self.t_nms}")


def _sort_key(d: Detection):
    # Confidence descending; ties broken by smaller x_min then y_min so
    # equal-confidence inputs suppress deterministically.
    return (-d.confidence, d.box.x_min, d.box.y_min)


def _greedy_nms(detections: List[Detection], threshold: float) -> List[Detection]:
    pending = sorted(detections, key=_sort_key)
    survivors: List[Detection] = []
    while pending:
        keep = pending.pop(0)
        survivors.append(keep)
        pending = [d for d in pending if iou(d.box, keep.box) < threshold]
    return survivors


def suppress(dset: DetectionSet, cfg: PostprocessConfig) -> DetectionSet:
    """Remove redundant overlapping detections, sparing exempt labels.

    Exempt-label detections (the decimal point by default) never enter
    the cross-label suppression; optionally they are deduplicated among
    themselves with a higher overlap threshold.
    """
    exempt = [d for d in dset.detections if d.label in cfg.exempt_labels]
    others = [d for d in dset.detections if d.label not in cfg.exempt_labels]

    survivors = _greedy_nms(others, cfg.t_nms)
    if cfg.dedupe_exempt:
        exempt = _greedy_nms(exempt, cfg.dedupe_exempt_threshold)

    return DetectionSet(detections=exempt + survivors, source=dset.source)


def nms_oracle(dset: DetectionSet, cfg: PostprocessConfig) -> DetectionSet:
    """Exhaustive reference implementation of `suppress` for tests.

    Repeatedly scans the full candidate list for the highest-confidence
    unprocessed detection (same tie-break as `suppress`) and eliminates
    every other candidate overlapping it; no sort-based shortcuts.
    """
    if len(dset) > NMS_ORACLE_MAX:
        raise ValueError(f"oracle limited to {NMS_ORACLE_MAX} detections, got {len(dset)}")

    def eliminate(cands: List[Detection], threshold: float) -> List[Detection]:
        alive = list(cands)
        kept: List[Detection] = []
        while alive:
            best = None
            for d in alive:
                if best is None or _sort_key(d) < _sort_key(best):
                    best = d
            kept.append(best)
            alive = [d for d in alive if d is not best and iou(d.box, best.box) < threshold]
        return kept

    exempt = [d for d in dset.detections if d.label in cfg.exempt_labels]
    others = [d for d in dset.detections if d.label not in cfg.exempt_labels]
    survivors = eliminate(others, cfg.t_nms)
    if cfg.dedupe_exempt:
        exempt = eliminate(exempt, cfg.dedupe_exempt_threshold)
    return DetectionSet(detections=exempt + survivors, source=dset.source)
