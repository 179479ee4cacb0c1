"""Generation knobs: jitter ranges, split ratios and retry limits."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Tuple


@dataclass
class GeometricRanges:
    rotation_deg: float = 15.0
    perspective_jitter: float = 0.08  # corner jitter as a canvas fraction
    scale_min: float = 0.8
    scale_max: float = 1.2
    translation: float = 0.10  # canvas fraction
    shear_deg: float = 5.0

    def half_width(self) -> "GeometricRanges":
        return GeometricRanges(
            rotation_deg=self.rotation_deg / 2,
            perspective_jitter=self.perspective_jitter / 2,
            scale_min=1.0 - (1.0 - self.scale_min) / 2,
            scale_max=1.0 + (self.scale_max - 1.0) / 2,
            translation=self.translation / 2,
            shear_deg=self.shear_deg / 2,
        )


@dataclass
class VisualRanges:
    brightness: float = 0.30
    contrast_min: float = 0.7
    contrast_max: float = 1.3
    noise_sigma: float = 8.0 / 255.0
    dropout: float = 0.02
    glare_probability: float = 0.2

    def half_width(self) -> "VisualRanges":
        return VisualRanges(
            brightness=self.brightness / 2,
            contrast_min=1.0 - (1.0 - self.contrast_min) / 2,
            contrast_max=1.0 + (self.contrast_max - 1.0) / 2,
            noise_sigma=self.noise_sigma / 2,
            dropout=self.dropout / 2,
            glare_probability=self.glare_probability / 2,
        )


@dataclass
class SynthConfig:
    n_samples: int = 0
    seed: int = 0
    split: Tuple[float, float, float] = (0.9, 0.1, 0.0)  # train, val, test
    item_presence: float = 0.7
    item_iou_epsilon: float = 0.05
    novel_color_probability: float = 0.05
    glyph_height_min: float = 0.80  # fraction of the value anchor height
    glyph_height_max: float = 1.00
    max_retry: int = 50
    geometric: GeometricRanges = field(default_factory=GeometricRanges)
    visual: VisualRanges = field(default_factory=VisualRanges)

    def __post_init__(self) -> None:
        if self.n_samples < 0:
            raise ValueError("n_samples must be non-negative")
        if not 0.0 <= self.item_presence <= 1.0:
            raise ValueError("item_presence must be a probability")
        if abs(sum(self.split) - 1.0) > 1e-9:
            raise ValueError("split ratios must sum to 1")
