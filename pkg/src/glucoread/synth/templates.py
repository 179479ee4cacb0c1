"""Procedural device templates.

Each template describes one synthetic medical device: canvas size, the
screen region, where the main value sits, slots for auxiliary items
(date, time, unit, symbols) and the colour palette. Templates stand in
for photographs of real devices, so annotations can be constructed
exactly instead of estimated.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np

Rect = Tuple[float, float, float, float]  # x0, y0, x1, y1 as canvas fractions
Color = Tuple[int, int, int]


@dataclass(frozen=True)
class ItemSlot:
    name: str
    kind: str  # date | time | unit | symbol
    rect: Rect


@dataclass(frozen=True)
class DeviceTemplate:
    template_id: str
    canvas_w: int
    canvas_h: int
    screen: Rect
    value_anchor: Rect
    item_slots: Tuple[ItemSlot, ...]
    body_colors: Tuple[Tuple[Color, float], ...]
    screen_colors: Tuple[Tuple[Color, float], ...]
    glyph_colors: Tuple[Tuple[Color, float], ...]
    segment_thickness: float = 0.14  # fraction of glyph height
    slant: float = 0.0

    def __post_init__(self) -> None:
        if not _contains(self.screen, self.value_anchor):
            raise ValueError(f"{self.template_id}: value anchor outside the screen")
        if not _contains((0.0, 0.0, 1.0, 1.0), self.screen):
            raise ValueError(f"{self.template_id}: screen outside the canvas")
        rects = [s.rect for s in self.item_slots]
        if len(set(rects)) != len(rects):
            raise ValueError(f"{self.template_id}: duplicate item slots")


def _contains(outer: Rect, inner: Rect) -> bool:
    return (
        outer[0] <= inner[0]
        and outer[1] <= inner[1]
        and inner[2] <= outer[2]
        and inner[3] <= outer[3]
    )


# Palettes loosely modelled on common glucometer screens: grey or green
# LCDs with dark digits, plus backlit variants with light digits.
_LCD_BACKGROUNDS: Sequence[Tuple[Color, float]] = (
    ((186, 196, 182), 0.40),  # pale green-grey LCD
    ((205, 205, 198), 0.35),  # grey LCD
    ((172, 186, 168), 0.25),
)

_BACKLIT_BACKGROUNDS: Sequence[Tuple[Color, float]] = (
    ((40, 46, 60), 0.45),  # dark backlit
    ((18, 60, 110), 0.30),  # blue backlit
    ((30, 30, 30), 0.25),
)

_DARK_GLYPHS: Sequence[Tuple[Color, float]] = (
    ((25, 28, 30), 0.6),
    ((40, 40, 48), 0.25),
    ((60, 30, 25), 0.15),
)

_LIGHT_GLYPHS: Sequence[Tuple[Color, float]] = (
    ((235, 238, 240), 0.55),
    ((250, 250, 245), 0.3),
    ((190, 230, 250), 0.15),
)

_BODY_COLORS: Sequence[Tuple[Color, float]] = (
    ((240, 240, 240), 0.3),
    ((40, 40, 40), 0.25),
    ((70, 110, 170), 0.2),
    ((150, 150, 155), 0.15),
    ((120, 40, 50), 0.1),
)


def _slots_for(layout_rng: np.random.Generator, screen: Rect) -> Tuple[ItemSlot, ...]:
    """Place item slots in the top and bottom strips of the screen,
    leaving the middle band to the value."""
    x0, y0, x1, y1 = screen
    w = x1 - x0
    h = y1 - y0
    slots: List[ItemSlot] = []
    strip_h = 0.16 * h

    top_kinds = ["date", "time", "symbol"]
    layout_rng.shuffle(top_kinds)
    n_top = int(layout_rng.integers(2, 4))
    for i in range(n_top):
        sw = w * float(layout_rng.uniform(0.18, 0.26))
        sx = x0 + w * (0.04 + 0.32 * i) + w * float(layout_rng.uniform(0.0, 0.04))
        sy = y0 + 0.04 * h
        slots.append(ItemSlot(f"top{i}", top_kinds[i % len(top_kinds)], (sx, sy, min(sx + sw, x1 - 0.01 * w), sy + strip_h)))

    bottom_kinds = ["unit", "symbol", "date"]
    layout_rng.shuffle(bottom_kinds)
    n_bottom = int(layout_rng.integers(1, 4))
    for i in range(n_bottom):
        sw = w * float(layout_rng.uniform(0.18, 0.26))
        sx = x0 + w * (0.06 + 0.33 * i) + w * float(layout_rng.uniform(0.0, 0.04))
        sy = y1 - strip_h - 0.04 * h
        slots.append(ItemSlot(f"bot{i}", bottom_kinds[i % len(bottom_kinds)], (sx, sy, min(sx + sw, x1 - 0.01 * w), sy + strip_h)))
    return tuple(slots)


def default_templates(count: int = 20, seed: int = 2024, canvas: int = 320) -> List[DeviceTemplate]:
    """Deterministic family of procedural templates."""
    templates: List[DeviceTemplate] = []
    for i in range(count):
        rng = np.random.default_rng((seed, i))
        sx0 = float(rng.uniform(0.08, 0.18))
        sy0 = float(rng.uniform(0.10, 0.22))
        sx1 = float(rng.uniform(0.82, 0.93))
        sy1 = float(rng.uniform(0.78, 0.90))
        screen = (sx0, sy0, sx1, sy1)
        w = sx1 - sx0
        h = sy1 - sy0
        # The value band sits in the vertical middle of the screen.
        anchor = (
            sx0 + 0.10 * w,
            sy0 + 0.30 * h,
            sx1 - 0.10 * w,
            sy1 - 0.28 * h,
        )
        backlit = bool(rng.random() < 0.3)
        screen_colors = tuple(_BACKLIT_BACKGROUNDS if backlit else _LCD_BACKGROUNDS)
        glyphs = tuple(_LIGHT_GLYPHS) if backlit else tuple(_DARK_GLYPHS)
        templates.append(
            DeviceTemplate(
                template_id=f"dev{i:03d}",
                canvas_w=canvas,
                canvas_h=canvas,
                screen=screen,
                value_anchor=anchor,
                item_slots=_slots_for(rng, screen),
                body_colors=tuple(_BODY_COLORS),
                screen_colors=screen_colors,
                glyph_colors=glyphs,
                segment_thickness=float(rng.uniform(0.12, 0.17)),
            )
        )
    return templates
