"""Rasterization of synthetic device screens.

Value glyphs are drawn as seven-segment bars from integer pixel
rectangles, so every character annotation is the exact union of the
rectangles that were drawn, never an estimate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..geometry import BoundingBox
from ..readout import Unit
from .config import SynthConfig
from .templates import Color, DeviceTemplate, ItemSlot
from .values import generate_value

PixelRect = Tuple[int, int, int, int]  # x0, y0, x1, y1; exclusive max edges

SEGMENTS: Dict[str, str] = {
    "0": "abcdef",
    "1": "bc",
    "2": "abged",
    "3": "abgcd",
    "4": "fgbc",
    "5": "afgcd",
    "6": "afgedc",
    "7": "abc",
    "8": "abcdefg",
    "9": "abcdfg",
}


class PlacementExhausted(RuntimeError):
    """Raised when a template cannot host a valid layout within the
    configured number of attempts."""

    def __init__(self, template_id: str, attempts: int):
        super().__init__(f"no valid placement for {template_id} after {attempts} attempts")
        self.template_id = template_id


@dataclass
class SynthSample:
    image: np.ndarray
    value_text: str
    value_rois: List[BoundingBox]
    item_rois: List[Tuple[str, BoundingBox]]
    unit: Unit
    template_id: str
    split: str = "train"
    # Screen corners after any geometric transform, normalized, in
    # (x, y) order: top-left, top-right, bottom-right, bottom-left.
    screen_quad: np.ndarray = field(default_factory=lambda: np.zeros((4, 2)))


def segment_rects(x: int, y: int, w: int, h: int, t: int) -> Dict[str, PixelRect]:
    """Integer pixel rectangles for the seven segments of one cell."""
    # Vertical bars run the full half height and share corner pixels
    # with the horizontal bars, so every digit stays one connected
    # component even after resize blur.
    mid_top = y + (h - t) // 2
    return {
        "a": (x + t, y, x + w - t, y + t),
        "g": (x + t, mid_top, x + w - t, mid_top + t),
        "d": (x + t, y + h - t, x + w - t, y + h),
        "f": (x, y, x + t, mid_top + t),
        "b": (x + w - t, y, x + w, mid_top + t),
        "e": (x, mid_top, x + t, y + h),
        "c": (x + w - t, mid_top, x + w, y + h),
    }


def _fill(canvas: np.ndarray, rect: PixelRect, color: Color) -> None:
    x0, y0, x1, y1 = rect
    canvas[max(y0, 0) : max(y1, 0), max(x0, 0) : max(x1, 0)] = color


def _union(rects: Sequence[PixelRect]) -> PixelRect:
    xs0, ys0, xs1, ys1 = zip(*rects)
    return min(xs0), min(ys0), max(xs1), max(ys1)


def draw_glyph(canvas: np.ndarray, char: str, x: int, y: int, w: int, h: int, t: int, color: Color) -> PixelRect:
    """Draw one character cell; returns the tight bbox of drawn pixels."""
    if char == ".":
        side = max(t, 2)
        rect = (x, y + h - side, x + side, y + h)
        _fill(canvas, rect, color)
        return rect
    rects = segment_rects(x, y, w, h, t)
    lit = [rects[s] for s in SEGMENTS[char]]
    for r in lit:
        _fill(canvas, r, color)
    return _union(lit)


def layout_value(text: str, anchor: PixelRect, glyph_h_frac: float) -> Tuple[List[Tuple[str, PixelRect]], int]:
    """Character cells for a value string inside a pixel anchor rect.

    Returns (char, cell-rect) pairs and the segment thickness.
    """
    ax0, ay0, ax1, ay1 = anchor
    anchor_w = ax1 - ax0
    anchor_h = ay1 - ay0
    h = int(anchor_h * glyph_h_frac)

    def widths(height: int) -> Tuple[int, int, int, int]:
        digit_w = max(int(0.52 * height), 6)
        dot_w = max(int(0.24 * height), 3)
        gap = max(int(0.16 * height), 2)
        t = max(int(0.14 * height), 2)
        return digit_w, dot_w, gap, t

    digit_w, dot_w, gap, t = widths(h)
    total = sum(dot_w if c == "." else digit_w for c in text) + gap * (len(text) - 1)
    if total > anchor_w:
        h = max(int(h * anchor_w / total), 10)
        digit_w, dot_w, gap, t = widths(h)
        total = sum(dot_w if c == "." else digit_w for c in text) + gap * (len(text) - 1)

    x = ax0 + (anchor_w - total) // 2
    y = ay0 + (anchor_h - h) // 2
    cells = []
    for c in text:
        w = dot_w if c == "." else digit_w
        cells.append((c, (x, y, x + w, y + h)))
        x += w + gap
    return cells, t


def _weighted_color(rng: np.random.Generator, choices: Sequence[Tuple[Color, float]]) -> Color:
    weights = np.array([w for _, w in choices], dtype=float)
    idx = rng.choice(len(choices), p=weights / weights.sum())
    return choices[int(idx)][0]


def _novel_color(rng: np.random.Generator, background: Color) -> Color:
    # Keep enough contrast against the screen background to stay legible.
    bg_luma = 0.299 * background[0] + 0.587 * background[1] + 0.114 * background[2]
    for _ in range(20):
        c = tuple(int(v) for v in rng.integers(0, 256, size=3))
        luma = 0.299 * c[0] + 0.587 * c[1] + 0.114 * c[2]
        if abs(luma - bg_luma) >= 90:
            return c
    return (0, 0, 0) if bg_luma > 127 else (255, 255, 255)


def _rects_intersect(a: PixelRect, b: PixelRect) -> bool:
    return a[0] < b[2] and b[0] < a[2] and a[1] < b[3] and b[1] < a[3]


def _rect_iou(a: PixelRect, b: PixelRect) -> float:
    ix = min(a[2], b[2]) - max(a[0], b[0])
    iy = min(a[3], b[3]) - max(a[1], b[1])
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    area_a = (a[2] - a[0]) * (a[3] - a[1])
    area_b = (b[2] - b[0]) * (b[3] - b[1])
    return inter / (area_a + area_b - inter)


def _draw_item(
    canvas: np.ndarray,
    slot: ItemSlot,
    rng: np.random.Generator,
    color: Color,
    canvas_w: int,
    canvas_h: int,
) -> Optional[PixelRect]:
    x0 = int(slot.rect[0] * canvas_w)
    y0 = int(slot.rect[1] * canvas_h)
    x1 = int(slot.rect[2] * canvas_w)
    y1 = int(slot.rect[3] * canvas_h)
    sw, sh = x1 - x0, y1 - y0
    if sw < 8 or sh < 6:
        return None
    gh = max(int(sh * 0.55), 5)
    gt = max(int(0.16 * gh), 1)
    gw = max(int(0.5 * gh), 3)
    gy = y0 + (sh - gh) // 2
    drawn: List[PixelRect] = []
    if slot.kind in ("date", "time"):
        n = int(rng.integers(3, 5))
        gap = max(int(0.3 * gw), 2)
        x = x0
        for k in range(n):
            if x + gw > x1:
                break
            ch = str(int(rng.integers(0, 10)))
            drawn.append(draw_glyph(canvas, ch, x, gy, gw, gh, gt, color))
            x += gw + gap
            if slot.kind == "time" and k == 1 and x + gt <= x1:
                # colon between hour and minute digits
                r1 = (x, gy + gh // 4, x + gt, gy + gh // 4 + gt)
                r2 = (x, gy + 3 * gh // 4, x + gt, gy + 3 * gh // 4 + gt)
                _fill(canvas, r1, color)
                _fill(canvas, r2, color)
                drawn.extend([r1, r2])
                x += gt + gap
    elif slot.kind == "unit":
        # Blocky unit marker: two bars and a slash-like notch.
        bar_h = max(gh // 3, 2)
        r1 = (x0, gy, min(x0 + sw // 2, x1), gy + bar_h)
        r2 = (x0, gy + gh - bar_h, min(x0 + sw // 3, x1), gy + gh)
        r3 = (min(x0 + sw // 2 + 2, x1 - 1), gy + bar_h, min(x0 + sw // 2 + 2 + gt, x1), gy + gh)
        for r in (r1, r2, r3):
            _fill(canvas, r, color)
        drawn.extend([r1, r2, r3])
    else:  # symbol: drop- or battery-like blob
        if rng.random() < 0.5:
            r = (x0, gy, min(x0 + gw, x1), gy + gh)
            _fill(canvas, r, color)
            drawn.append(r)
        else:
            body = (x0, gy + gh // 6, min(x0 + int(1.6 * gw), x1), gy + gh)
            tip = (x0 + (body[2] - body[0]) // 3, gy, x0 + 2 * (body[2] - body[0]) // 3, gy + gh // 6)
            _fill(canvas, body, color)
            _fill(canvas, tip, color)
            drawn.extend([body, tip])
    if not drawn:
        return None
    return _union(drawn)


def _normalize(rect: PixelRect, w: int, h: int) -> BoundingBox:
    return BoundingBox(
        x_min=max(rect[0] / w, 0.0),
        y_min=max(rect[1] / h, 0.0),
        x_max=min(rect[2] / w, 1.0),
        y_max=min(rect[3] / h, 1.0),
    )


def render_sample(
    template: DeviceTemplate,
    cfg: SynthConfig,
    rng: np.random.Generator,
    value: Optional[Tuple[str, Unit]] = None,
) -> SynthSample:
    """Draw one untransformed sample and its exact annotations.

    The whole placement is retried until the value boxes are disjoint
    from every item box and items overlap pairwise less than the
    configured IoU bound.
    """
    w, h = template.canvas_w, template.canvas_h
    text, unit = value if value is not None else generate_value(rng)

    for _ in range(cfg.max_retry):
        canvas = np.zeros((h, w, 3), dtype=np.uint8)
        canvas[:, :] = _weighted_color(rng, template.body_colors)
        screen_bg = _weighted_color(rng, template.screen_colors)
        sx0, sy0, sx1, sy1 = (
            int(template.screen[0] * w),
            int(template.screen[1] * h),
            int(template.screen[2] * w),
            int(template.screen[3] * h),
        )
        canvas[sy0:sy1, sx0:sx1] = screen_bg

        if rng.random() < cfg.novel_color_probability:
            glyph_color = _novel_color(rng, screen_bg)
        else:
            glyph_color = _weighted_color(rng, template.glyph_colors)

        ax0 = int(template.value_anchor[0] * w)
        ay0 = int(template.value_anchor[1] * h)
        ax1 = int(template.value_anchor[2] * w)
        ay1 = int(template.value_anchor[3] * h)
        # Small positional jitter inside the anchor keeps samples distinct.
        jx = int(rng.integers(-max((ax1 - ax0) // 20, 1), max((ax1 - ax0) // 20, 1) + 1))
        glyph_frac = float(rng.uniform(cfg.glyph_height_min, cfg.glyph_height_max))
        cells, t = layout_value(text, (ax0 + jx, ay0, ax1 + jx, ay1), glyph_frac)

        value_rects: List[Tuple[str, PixelRect]] = []
        for c, (cx0, cy0, cx1, cy1) in cells:
            roi = draw_glyph(canvas, c, cx0, cy0, cx1 - cx0, cy1 - cy0, t, glyph_color)
            value_rects.append((c, roi))

        item_color = tuple(
            int(np.clip(v * 0.9 + b * 0.1, 0, 255)) for v, b in zip(glyph_color, screen_bg)
        )
        item_rects: List[Tuple[str, PixelRect]] = []
        for slot in template.item_slots:
            if rng.random() > cfg.item_presence:
                continue
            roi = _draw_item(canvas, slot, rng, item_color, w, h)
            if roi is not None:
                item_rects.append((slot.name, roi))

        ok = all(
            not _rects_intersect(vr, ir)
            for _, vr in value_rects
            for _, ir in item_rects
        ) and all(
            _rect_iou(item_rects[i][1], item_rects[j][1]) < cfg.item_iou_epsilon
            for i in range(len(item_rects))
            for j in range(i + 1, len(item_rects))
        )
        if not ok:
            continue

        quad = np.array(
            [[sx0 / w, sy0 / h], [sx1 / w, sy0 / h], [sx1 / w, sy1 / h], [sx0 / w, sy1 / h]]
        )
        return SynthSample(
            image=canvas,
            value_text=text,
            value_rois=[_normalize(r, w, h) for _, r in value_rects],
            item_rois=[(name, _normalize(r, w, h)) for name, r in item_rects],
            unit=unit,
            template_id=template.template_id,
            screen_quad=quad,
        )
    raise PlacementExhausted(template.template_id, cfg.max_retry)
