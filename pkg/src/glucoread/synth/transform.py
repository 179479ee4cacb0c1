"""Geometric and visual augmentation of rendered samples.

Geometric jitter is a single homography (scale, rotation, shear,
translation about the canvas centre, plus corner-jitter perspective);
boxes are mapped by transforming their corners and taking the
axis-aligned hull. The training split draws from the full ranges, the
validation and test splits from half-width ranges.
"""

from __future__ import annotations

import math
from typing import List, Tuple

import numpy as np

from ..geometry import BoundingBox
from ..imaging import apply_homography_points, homography_from_points, warp_homography
from .config import GeometricRanges, SynthConfig, VisualRanges
from .render import PlacementExhausted, SynthSample


def _affine_about_center(
    cx: float, cy: float, scale: float, rot_deg: float, shear_deg: float, tx: float, ty: float
) -> np.ndarray:
    rot = math.radians(rot_deg)
    shear = math.tan(math.radians(shear_deg))
    cos, sin = math.cos(rot), math.sin(rot)
    # scale, then shear in x, then rotate
    a = np.array([[scale, scale * shear, 0.0], [0.0, scale, 0.0], [0.0, 0.0, 1.0]])
    r = np.array([[cos, -sin, 0.0], [sin, cos, 0.0], [0.0, 0.0, 1.0]])
    to_origin = np.array([[1.0, 0.0, -cx], [0.0, 1.0, -cy], [0.0, 0.0, 1.0]])
    back = np.array([[1.0, 0.0, cx + tx], [0.0, 1.0, cy + ty], [0.0, 0.0, 1.0]])
    return back @ r @ a @ to_origin


def sample_homography(
    rng: np.random.Generator, w: int, h: int, ranges: GeometricRanges
) -> np.ndarray:
    scale = float(rng.uniform(ranges.scale_min, ranges.scale_max))
    rot = float(rng.uniform(-ranges.rotation_deg, ranges.rotation_deg))
    shear = float(rng.uniform(-ranges.shear_deg, ranges.shear_deg))
    tx = float(rng.uniform(-ranges.translation, ranges.translation)) * w
    ty = float(rng.uniform(-ranges.translation, ranges.translation)) * h
    affine = _affine_about_center(w / 2.0, h / 2.0, scale, rot, shear, tx, ty)

    corners = np.array([[0.0, 0.0], [w - 1.0, 0.0], [w - 1.0, h - 1.0], [0.0, h - 1.0]])
    jitter = rng.uniform(-ranges.perspective_jitter, ranges.perspective_jitter, size=(4, 2))
    jittered = corners + jitter * np.array([w, h])
    perspective = homography_from_points(corners, jittered)
    return perspective @ affine


def _map_box(box: BoundingBox, hmat: np.ndarray, w: int, h: int) -> Tuple[BoundingBox, bool]:
    """Axis-aligned hull of the transformed box corners.

    The second value is False when the hull leaves the canvas.
    """
    corners = np.array(
        [
            [box.x_min * w, box.y_min * h],
            [box.x_max * w, box.y_min * h],
            [box.x_max * w, box.y_max * h],
            [box.x_min * w, box.y_max * h],
        ]
    )
    mapped = apply_homography_points(hmat, corners)
    x0, y0 = mapped.min(axis=0)
    x1, y1 = mapped.max(axis=0)
    inside = x0 >= 0 and y0 >= 0 and x1 <= w - 1 and y1 <= h - 1
    hull = BoundingBox(
        x_min=float(np.clip(x0 / w, 0, 1)),
        y_min=float(np.clip(y0 / h, 0, 1)),
        x_max=float(np.clip(x1 / w, 0, 1)),
        y_max=float(np.clip(y1 / h, 0, 1)),
    )
    return hull, bool(inside)


def point_in_convex_quad(point: np.ndarray, quad: np.ndarray, tol: float = 1e-9) -> bool:
    """True when the point lies inside a convex quadrilateral given in
    winding order."""
    signs = []
    for i in range(4):
        a = quad[i]
        b = quad[(i + 1) % 4]
        cross = (b[0] - a[0]) * (point[1] - a[1]) - (b[1] - a[1]) * (point[0] - a[0])
        signs.append(cross)
    return all(s >= -tol for s in signs) or all(s <= tol for s in signs)


def box_in_quad(box: BoundingBox, quad: np.ndarray) -> bool:
    corners = np.array(
        [
            [box.x_min, box.y_min],
            [box.x_max, box.y_min],
            [box.x_max, box.y_max],
            [box.x_min, box.y_max],
        ]
    )
    return all(point_in_convex_quad(c, quad) for c in corners)


def _apply_visual(img: np.ndarray, rng: np.random.Generator, ranges: VisualRanges) -> np.ndarray:
    out = img.astype(np.float64)
    contrast = float(rng.uniform(ranges.contrast_min, ranges.contrast_max))
    brightness = float(rng.uniform(-ranges.brightness, ranges.brightness)) * 255.0
    out = (out - 127.5) * contrast + 127.5 + brightness
    if ranges.noise_sigma > 0:
        out += rng.normal(0.0, ranges.noise_sigma * 255.0, size=out.shape)
    if ranges.dropout > 0:
        rate = float(rng.uniform(0.0, ranges.dropout))
        mask = rng.random(out.shape[:2]) < rate
        out[mask] = rng.choice([0.0, 255.0])
    if rng.random() < ranges.glare_probability:
        h, w = out.shape[:2]
        cy = float(rng.uniform(0.2, 0.8)) * h
        cx = float(rng.uniform(0.2, 0.8)) * w
        radius = float(rng.uniform(0.05, 0.15)) * min(w, h)
        ys, xs = np.mgrid[0:h, 0:w]
        dist2 = (xs - cx) ** 2 + (ys - cy) ** 2
        glare = np.exp(-dist2 / (2 * radius**2)) * float(rng.uniform(40, 110))
        out += glare[:, :, None]
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)


def transform_sample(
    sample: SynthSample, cfg: SynthConfig, split: str, rng: np.random.Generator
) -> SynthSample:
    """Warp one sample; retried until the value boxes stay inside the
    transformed screen region."""
    geo = cfg.geometric if split == "train" else cfg.geometric.half_width()
    vis = cfg.visual if split == "train" else cfg.visual.half_width()
    h, w = sample.image.shape[:2]

    for _ in range(cfg.max_retry):
        hmat = sample_homography(rng, w, h, geo)
        quad_px = apply_homography_points(hmat, sample.screen_quad * np.array([w, h]))
        if not (
            (quad_px[:, 0] >= 0).all()
            and (quad_px[:, 1] >= 0).all()
            and (quad_px[:, 0] <= w - 1).all()
            and (quad_px[:, 1] <= h - 1).all()
        ):
            continue
        quad = quad_px / np.array([w, h])

        mapped_values: List[BoundingBox] = []
        valid = True
        for box in sample.value_rois:
            hull, inside = _map_box(box, hmat, w, h)
            if not inside or not box_in_quad(hull, quad):
                valid = False
                break
            mapped_values.append(hull)
        if not valid:
            continue

        mapped_items: List[Tuple[str, BoundingBox]] = []
        for name, box in sample.item_rois:
            hull, _ = _map_box(box, hmat, w, h)
            mapped_items.append((name, hull))

        fill = int(np.mean(sample.image[0, :, :]))
        warped = warp_homography(sample.image, hmat, fill=fill)
        warped = _apply_visual(warped, rng, vis)
        return SynthSample(
            image=warped,
            value_text=sample.value_text,
            value_rois=mapped_values,
            item_rois=mapped_items,
            unit=sample.unit,
            template_id=sample.template_id,
            split=split,
            screen_quad=quad,
        )
    raise PlacementExhausted(sample.template_id, cfg.max_retry)
