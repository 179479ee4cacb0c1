"""Box arithmetic shared by every stage of the pipeline.

Coordinates are normalized to [0, 1] with the origin at the top-left
corner, so IoU and edge tolerances are independent of the detector
input resolutions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Iterator, List

CLASS_ALPHABET = ("0", "1", "2", "3", "4", "5", "6", "7", "8", "9", ".")

DECIMAL_POINT = "."


class Source(Enum):
    MOBILE = "mobile"
    CLOUD = "cloud"
    ENSEMBLE = "ensemble"


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box in normalized image coordinates."""

    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self) -> None:
        coords = (self.x_min, self.y_min, self.x_max, self.y_max)
        if not all(math.isfinite(c) for c in coords):
            raise ValueError(f"non-finite box coordinates: {coords}")
        if not all(0.0 <= c <= 1.0 for c in coords):
            raise ValueError(f"box coordinates outside [0, 1]: {coords}")
        if self.x_min > self.x_max or self.y_min > self.y_max:
            raise ValueError(f"inverted box: {coords}")

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def area(self) -> float:
        return self.width * self.height


@dataclass(frozen=True)
class Detection:
    box: BoundingBox
    label: str
    confidence: float

    def __post_init__(self) -> None:
        if self.label not in CLASS_ALPHABET:
            raise ValueError(f"label {self.label!r} outside the class alphabet")
        if not (0.0 <= self.confidence <= 2.0):
            raise ValueError(f"confidence {self.confidence} outside [0, 2]")


@dataclass
class DetectionSet:
    detections: List[Detection] = field(default_factory=list)
    source: Source = Source.ENSEMBLE

    def __len__(self) -> int:
        return len(self.detections)

    def __iter__(self) -> Iterator[Detection]:
        return iter(self.detections)


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union of two boxes.

    Zero-area boxes yield 0 against anything (including themselves) to
    avoid the 0/0 case; such boxes are rejected upstream anyway.
    """
    inter_w = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
    inter_h = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    if inter_w <= 0.0 or inter_h <= 0.0:
        return 0.0
    inter = inter_w * inter_h
    union = a.area + b.area - inter
    if union <= 0.0:
        return 0.0
    return inter / union


def horizontal_match(a: BoundingBox, b: BoundingBox, epsilon: float) -> bool:
    """True when both vertical edges agree within epsilon.

    Only the x edges are compared: digits are horizontally arranged, so
    two corresponding character boxes from different detectors share
    their left/right extents even when the vertical crop differs.
    """
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")
    return (
        abs(a.x_min - b.x_min) <= epsilon and abs(a.x_max - b.x_max) <= epsilon
    )


def edge_distance(a: BoundingBox, b: BoundingBox) -> float:
    """Sum of absolute x-edge differences; the match tie-break key."""
    return abs(a.x_min - b.x_min) + abs(a.x_max - b.x_max)


def validate_detections(detections: Iterable[Detection], max_count: int | None = None) -> None:
    dets = list(detections)
    if max_count is not None and len(dets) > max_count:
        raise ValueError(f"{len(dets)} detections exceed the maximum of {max_count}")
