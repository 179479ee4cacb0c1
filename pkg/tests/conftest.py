"""Shared helpers: compact constructors and random instance generators."""

from __future__ import annotations

import numpy as np
import pytest

from glucoread.geometry import BoundingBox, Detection, DetectionSet, Source


def box(x0: float, y0: float, x1: float, y1: float) -> BoundingBox:
    return BoundingBox(x_min=x0, y_min=y0, x_max=x1, y_max=y1)


def det(label: str, conf: float, x0: float, y0: float, x1: float, y1: float) -> Detection:
    return Detection(box=box(x0, y0, x1, y1), label=label, confidence=conf)


def random_detection(rng: np.random.Generator, labels="0123456789.") -> Detection:
    x0 = rng.uniform(0.0, 0.9)
    y0 = rng.uniform(0.0, 0.9)
    w = rng.uniform(0.01, min(0.3, 1.0 - x0))
    h = rng.uniform(0.01, min(0.3, 1.0 - y0))
    return Detection(
        box=box(x0, y0, x0 + w, y0 + h),
        label=str(rng.choice(list(labels))),
        confidence=float(rng.uniform(0.0, 1.0)),
    )


def random_set(
    rng: np.random.Generator, source: Source, max_n: int, labels="0123456789."
) -> DetectionSet:
    n = int(rng.integers(0, max_n + 1))
    return DetectionSet([random_detection(rng, labels) for _ in range(n)], source)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)
