"""Classical seven-segment detector with two quality profiles.

The cloud profile works at a higher input resolution with finer
binarization; the mobile profile is deliberately coarser, which yields
systematically noisier detections. Per-class confidence weights model
the complementary per-class weaknesses of the two sides: the cloud side
underrates the decimal point and '1', the mobile side underrates
'0', '4' and '9'. The weights are calibrated once against the synthetic
corpus and frozen here.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy import ndimage

from .geometry import BoundingBox, Detection, DetectionSet, Source
from .imaging import resize_bilinear, to_grayscale

_PATTERNS: Dict[str, frozenset] = {
    "0": frozenset("abcdef"),
    "2": frozenset("abged"),
    "3": frozenset("abgcd"),
    "4": frozenset("fgbc"),
    "5": frozenset("afgcd"),
    "6": frozenset("afgedc"),
    "7": frozenset("abc"),
    "8": frozenset("abcdefg"),
    "9": frozenset("abcdfg"),
}

# Canonical glyph masks for template matching, all normalized to one
# comparison size. A component is classified by the best pixelwise
# agreement between its binarized mask and these templates.
_TEMPLATE_W, _TEMPLATE_H = 24, 40


def _segment_cells(w: int, h: int, t: int) -> Dict[str, Tuple[int, int, int, int]]:
    mid = (h - t) // 2
    return {
        "a": (t, 0, w - t, t),
        "g": (t, mid, w - t, mid + t),
        "d": (t, h - t, w - t, h),
        "f": (0, 0, t, mid + t),
        "b": (w - t, 0, w, mid + t),
        "e": (0, mid, t, h),
        "c": (w - t, mid, w, h),
    }


def _build_templates() -> Dict[str, np.ndarray]:
    h = 96
    w = int(0.52 * h)
    t = int(0.14 * h)
    cells = _segment_cells(w, h, t)
    templates: Dict[str, np.ndarray] = {}
    for label, lit in _PATTERNS.items():
        canvas = np.zeros((h, w), dtype=bool)
        for seg in lit:
            x0, y0, x1, y1 = cells[seg]
            canvas[y0:y1, x0:x1] = True
        ys, xs = np.nonzero(canvas)
        tight = canvas[ys.min() : ys.max() + 1, xs.min() : xs.max() + 1]
        resized = resize_bilinear(tight.astype(np.uint8) * 255, _TEMPLATE_H, _TEMPLATE_W)
        templates[label] = resized >= 128
    return templates


_TEMPLATES = _build_templates()

# Digits missing the left column ('3', '7') have bbox aspect ~0.38 while
# a '1' is just the segment thickness, ~0.15; the cut sits between.
_ONE_ASPECT = 0.26

# Candidate shear corrections tried before template matching. Camera
# rotation tilts tall glyphs, which at component scale looks like a
# horizontal shear; scoring each hypothesis and keeping the best makes
# classification tolerant to the geometric jitter range.
_SHEAR_STEPS = (-0.30, -0.20, -0.10, 0.0, 0.10, 0.20, 0.30)


def _shear_mask(mask: np.ndarray, shear: float) -> np.ndarray:
    h, w = mask.shape
    if shear == 0.0:
        return mask
    shift = np.round(shear * (np.arange(h) - (h - 1) / 2.0)).astype(int)
    pad = int(np.abs(shift).max())
    if pad == 0:
        return mask
    out = np.zeros((h, w + 2 * pad), dtype=bool)
    for y in range(h):
        out[y, pad - shift[y] : pad - shift[y] + w] = mask[y]
    xs = np.nonzero(out.any(axis=0))[0]
    return out[:, xs[0] : xs[-1] + 1]


@dataclass
class DetectorProfile:
    name: str
    input_resolution: int
    block_size: int
    threshold_offset: float
    min_height_ratio: float
    confidence_floor: float
    # Minimum raw template-match score (before class weighting) for a
    # digit to be emitted. Merged multi-glyph blobs on heavily blurred
    # frames still resemble *some* template at ~0.6; genuine glyphs
    # score clearly higher even through compression.
    min_template_score: float = 0.0
    class_weights: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.input_resolution <= 0:
            raise ValueError("input_resolution must be positive")


CLOUD_PROFILE = DetectorProfile(
    name="cloud",
    input_resolution=416,
    block_size=33,
    threshold_offset=12.0,
    min_height_ratio=0.55,
    confidence_floor=0.25,
    min_template_score=0.63,
    class_weights={".": 0.70, "1": 0.80},
)

MOBILE_PROFILE = DetectorProfile(
    name="mobile",
    input_resolution=350,
    block_size=57,
    threshold_offset=14.0,
    min_height_ratio=0.55,
    confidence_floor=0.25,
    min_template_score=0.63,
    class_weights={"0": 0.72, "4": 0.69, "9": 0.69},
)


def _binarize(gray: np.ndarray, profile: DetectorProfile) -> np.ndarray:
    mean = ndimage.uniform_filter(gray, size=profile.block_size, mode="nearest")
    diff = gray - mean
    bright = diff > profile.threshold_offset
    dark = diff < -profile.threshold_offset
    # Glyphs are the minority polarity on a mostly uniform screen.
    if 0 < bright.sum() <= dark.sum() or dark.sum() == 0:
        chosen = bright
    else:
        chosen = dark
    # Resize blur opens one-pixel seams at segment junctions; closing
    # restores glyph connectivity before labeling.
    closed = ndimage.binary_closing(
        chosen, structure=np.ones((3, 3), dtype=bool), iterations=2
    )
    return closed


def _segment_score(mask: np.ndarray) -> Tuple[str, float]:
    """Classify a digit mask; returns (label, confidence).

    Each shear hypothesis is applied, and the deskewed mask is matched
    against the canonical glyph templates. A deskewed mask that is
    still segment-thin is a '1'. Upscaling a heavily downsampled frame
    fattens strokes until neighbouring segments merge, so an eroded
    variant of the mask competes as a second hypothesis.
    """
    variants = [mask]
    eroded = ndimage.binary_erosion(mask, structure=np.ones((3, 3), dtype=bool))
    if eroded.any():
        ys, xs = np.nonzero(eroded)
        variants.append(eroded[ys.min() : ys.max() + 1, xs.min() : xs.max() + 1])
    best_label, best_score = "8", -1.0
    for variant in variants:
        label, score = _segment_score_one(variant)
        if score > best_score:
            best_label, best_score = label, score
    return best_label, min(best_score, 1.0)


def _segment_score_one(mask: np.ndarray) -> Tuple[str, float]:
    best_label, best_score = "8", -1.0
    for shear in _SHEAR_STEPS:
        sheared = _shear_mask(mask, shear)
        h, w = sheared.shape
        if w / h < _ONE_ASPECT:
            score = float(sheared.mean()) * 1.05
            if score > best_score:
                best_label, best_score = "1", score
            continue
        scaled = (
            resize_bilinear(sheared.astype(np.uint8) * 255, _TEMPLATE_H, _TEMPLATE_W) >= 128
        )
        for label, template in _TEMPLATES.items():
            score = float((scaled == template).mean())
            if score > best_score:
                best_label, best_score = label, score
    return best_label, min(best_score, 1.0)


@dataclass(eq=False)
class _Component:
    x0: int
    y0: int
    x1: int
    y1: int
    mask: np.ndarray

    @property
    def w(self) -> int:
        return self.x1 - self.x0

    @property
    def h(self) -> int:
        return self.y1 - self.y0

    @property
    def fill(self) -> float:
        return float(self.mask.mean())


def _components(binary: np.ndarray) -> List[_Component]:
    labeled, count = ndimage.label(binary, structure=np.ones((3, 3), dtype=int))
    comps: List[_Component] = []
    for idx, sl in enumerate(ndimage.find_objects(labeled), start=1):
        if sl is None:
            continue
        mask = labeled[sl] == idx
        y0, y1 = sl[0].start, sl[0].stop
        x0, x1 = sl[1].start, sl[1].stop
        if mask.sum() < 4:
            continue
        comps.append(_Component(x0, y0, x1, y1, mask))
    return comps


def detect(img: np.ndarray, profile: DetectorProfile) -> DetectionSet:
    """Run the classical pipeline; never raises on hard content, only
    on non-image input."""
    if not isinstance(img, np.ndarray) or img.ndim not in (2, 3):
        raise ValueError("detect expects an HxW or HxWx3 uint8 array")
    res = profile.input_resolution
    # Grayscale first so the expensive resize runs on one channel.
    gray = resize_bilinear(to_grayscale(img), res, res)
    # 3x3 median kills dropout speckle and sensor-style noise before
    # thresholding. Run it on uint8 (a median of integers is an
    # integer) where the rank filter is much cheaper.
    gray = ndimage.median_filter(gray, size=3).astype(np.float64)
    binary = _binarize(gray, profile)
    comps = _components(binary)

    # Discard oversized structures (screen borders, glare rings) and
    # border line fragments, which are far thinner relative to their
    # height than any glyph (a '1' is about 7:1).
    comps = [c for c in comps if c.h < 0.6 * res and c.w < 0.6 * res]
    candidates = [
        c
        for c in comps
        if 0.08 * res <= c.h <= 0.42 * res
        and c.w <= 0.35 * res
        and c.h / c.w <= 10
        and c.w / c.h <= 0.85
        and c.w >= 3
    ]
    if not candidates:
        return DetectionSet([], _source_for(profile))

    # Partition the candidates into height clusters (tallest first) and
    # keep the cluster that looks most like the value row: large glyphs
    # with strong template matches. A plain median height fails when
    # small clutter (date strip, icons) outnumbers the value digits,
    # and a plain max when one merged blur artifact towers over them.
    scores: Dict[int, Tuple[str, float]] = {}

    def scored(c: _Component) -> Tuple[str, float]:
        key = id(c)
        if key not in scores:
            scores[key] = _segment_score(c.mask)
        return scores[key]

    remaining = sorted(candidates, key=lambda c: -c.h)
    best_digits: List[_Component] = []
    best_value = -1.0
    while remaining:
        ref_h = remaining[0].h
        group = [c for c in remaining if c.h >= profile.min_height_ratio * ref_h]
        remaining = remaining[len(group):]
        group_max = max(c.h for c in group)
        # Glyphs of the value sit on one row; clutter lands well above
        # or below the group's median centre.
        mid = float(np.median([(c.y0 + c.y1) / 2 for c in group]))
        row = [c for c in group if abs((c.y0 + c.y1) / 2 - mid) <= 0.45 * group_max]
        value = sum(
            scored(c)[1] * c.h * c.h for c in row if scored(c)[1] >= 0.45
        )
        if value > best_value:
            best_value = value
            best_digits = row

    digits = best_digits
    if not digits or best_value <= 0.0:
        return DetectionSet([], _source_for(profile))
    # Glyphs of one value strip share a height; a member towering over
    # the row median is a display border or separator sliver that
    # happened to sit on the row.
    median_h = float(np.median([c.h for c in digits]))
    digits = [c for c in digits if c.h <= 1.35 * median_h]
    max_h = max(c.h for c in digits)

    baseline = float(np.median([c.y1 for c in digits]))
    # A decimal point can only sit between digits of the value strip.
    x_lo = min(c.x0 for c in digits)
    x_hi = max(c.x1 for c in digits)
    def in_digit_gap(c: _Component) -> bool:
        # A decimal point occupies the gap between glyphs, never the
        # horizontal core of a glyph (blur flecks under a digit do).
        cx = (c.x0 + c.x1) / 2
        return not any(
            d.x0 + 0.12 * d.w <= cx <= d.x1 - 0.12 * d.w for d in digits
        )

    dots = [
        c
        for c in comps
        if c not in digits
        and 0.10 * max_h <= c.h < 0.30 * max_h
        and 0.6 <= c.w / c.h <= 1.8
        and c.fill >= 0.6
        and abs(c.y1 - baseline) <= 0.25 * max_h
        and x_lo <= (c.x0 + c.x1) / 2 <= x_hi
        and in_digit_gap(c)
    ]

    detections: List[Detection] = []
    for c in digits:
        label, conf = scored(c)
        # Every seven-segment glyph except '1' spans the full glyph
        # width; a sliver that still matched some wide template is a
        # border or icon fragment, not that digit.
        if label != "1" and c.w / c.h < 0.30:
            continue
        if conf < profile.min_template_score:
            continue
        conf *= profile.class_weights.get(label, 1.0)
        conf = min(conf, 1.0)
        if conf < profile.confidence_floor:
            continue
        detections.append(Detection(box=_norm_box(c, res), label=label, confidence=conf))
    for c in dots:
        conf = min(c.fill * 1.05, 1.0) * profile.class_weights.get(".", 1.0)
        if conf < profile.confidence_floor:
            continue
        detections.append(Detection(box=_norm_box(c, res), label=".", confidence=min(conf, 1.0)))

    detections.sort(key=lambda d: (d.box.x_min, d.box.y_min))
    return DetectionSet(detections, _source_for(profile))


def _source_for(profile: DetectorProfile) -> Source:
    return Source.CLOUD if profile.name == "cloud" else Source.MOBILE


def _norm_box(c: _Component, res: int) -> BoundingBox:
    return BoundingBox(
        x_min=c.x0 / res,
        y_min=c.y0 / res,
        x_max=min(c.x1 / res, 1.0),
        y_max=min(c.y1 / res, 1.0),
    )


class UnknownId(KeyError):
    pass


@dataclass
class ReplayFixture:
    """Canned detection sets keyed by image id, for deterministic tests."""

    entries: Dict[str, DetectionSet] = field(default_factory=dict)

    def add(self, image_id: str, dset: DetectionSet) -> None:
        if image_id in self.entries:
            raise ValueError(f"duplicate image id {image_id!r}")
        self.entries[image_id] = dset


def replay_detect(image_id: str, fixture: ReplayFixture) -> DetectionSet:
    try:
        return fixture.entries[image_id]
    except KeyError:
        raise UnknownId(image_id) from None


def save_fixture(fixture: ReplayFixture, path: Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for image_id, dset in fixture.entries.items():
            record = {
                "image_id": image_id,
                "source": dset.source.value,
                "detections": [
                    {
                        "label": d.label,
                        "confidence": d.confidence,
                        "box": [d.box.x_min, d.box.y_min, d.box.x_max, d.box.y_max],
                    }
                    for d in dset.detections
                ],
            }
            fh.write(json.dumps(record, sort_keys=True) + "\n")


def load_fixture(path: Path) -> ReplayFixture:
    fixture = ReplayFixture()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            dets = [
                Detection(
                    box=BoundingBox(*d["box"]),
                    label=d["label"],
                    confidence=d["confidence"],
                )
                for d in record["detections"]
            ]
            fixture.add(record["image_id"], DetectionSet(dets, Source(record["source"])))
    return fixture
