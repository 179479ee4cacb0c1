"""Shared raster helpers: bilinear resize and perspective warping.

Images are numpy uint8 arrays, HxW (single channel) or HxWx3 in RGB
order. The resize uses half-pixel-center sampling with edge clamping so
that independent implementations agree within one intensity level.
"""

from __future__ import annotations

import numpy as np


def _sample_coords(out_size: int, in_size: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    # Half-pixel centers: output pixel i samples input at (i+0.5)*scale-0.5.
    scale = in_size / out_size
    pos = (np.arange(out_size) + 0.5) * scale - 0.5
    lo = np.floor(pos).astype(np.int64)
    frac = pos - lo
    lo = np.clip(lo, 0, in_size - 1)
    hi = np.clip(lo + 1, 0, in_size - 1)
    return lo, hi, frac


def resize_bilinear(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resize to (out_h, out_w), preserving channel count."""
    if out_h <= 0 or out_w <= 0:
        raise ValueError("output dimensions must be positive")
    if img.ndim not in (2, 3):
        raise ValueError("expected an HxW or HxWxC array")
    in_h, in_w = img.shape[:2]
    if in_h == 0 or in_w == 0:
        raise ValueError("input image has a zero dimension")

    y_lo, y_hi, fy = _sample_coords(out_h, in_h)
    x_lo, x_hi, fx = _sample_coords(out_w, in_w)

    data = img.astype(np.float32)
    if data.ndim == 3:
        fy_col = fy[:, None, None].astype(np.float32)
        fx_row = fx[None, :, None].astype(np.float32)
    else:
        fy_col = fy[:, None].astype(np.float32)
        fx_row = fx[None, :].astype(np.float32)
    rows_lo = data[y_lo]
    rows_hi = data[y_hi]
    top = rows_lo[:, x_lo] * (1 - fx_row) + rows_lo[:, x_hi] * fx_row
    bottom = rows_hi[:, x_lo] * (1 - fx_row) + rows_hi[:, x_hi] * fx_row
    out = top * (1 - fy_col) + bottom * fy_col
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)


def to_grayscale(img: np.ndarray) -> np.ndarray:
    """Luma conversion (Rec. 601 weights) for 3-channel input; identity
    for single-channel."""
    if img.ndim == 2:
        return img
    weights = np.array([0.299, 0.587, 0.114])
    return np.clip(np.rint(img.astype(np.float64) @ weights), 0, 255).astype(np.uint8)


def homography_from_points(src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """3x3 homography mapping four src points onto four dst points."""
    if src.shape != (4, 2) or dst.shape != (4, 2):
        raise ValueError("need exactly four source and destination points")
    rows = []
    for (x, y), (u, v) in zip(src, dst):
        rows.append([x, y, 1, 0, 0, 0, -u * x, -u * y])
        rows.append([0, 0, 0, x, y, 1, -v * x, -v * y])
    a = np.array(rows, dtype=np.float64)
    b = np.asarray(dst, dtype=np.float64).reshape(-1)
    coeffs = np.linalg.solve(a, b)
    return np.append(coeffs, 1.0).reshape(3, 3)


def apply_homography_points(h: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Map an (n, 2) point array through a homography."""
    pts = np.concatenate([points, np.ones((len(points), 1))], axis=1)
    mapped = pts @ h.T
    return mapped[:, :2] / mapped[:, 2:3]


def warp_homography(img: np.ndarray, h: np.ndarray, fill: int = 0) -> np.ndarray:
    """Inverse-map warp with bilinear sampling; out-of-range pixels get
    the fill value. Output has the input's shape."""
    out_h, out_w = img.shape[:2]
    inv = np.linalg.inv(h)
    ys, xs = np.mgrid[0:out_h, 0:out_w]
    coords = np.stack([xs.ravel(), ys.ravel(), np.ones(out_h * out_w)], axis=0)
    mapped = inv @ coords
    sx = mapped[0] / mapped[2]
    sy = mapped[1] / mapped[2]

    in_h, in_w = img.shape[:2]
    valid = (sx >= 0) & (sx <= in_w - 1) & (sy >= 0) & (sy <= in_h - 1)
    sx_c = np.clip(sx, 0, in_w - 1)
    sy_c = np.clip(sy, 0, in_h - 1)
    x0 = np.floor(sx_c).astype(np.int64)
    y0 = np.floor(sy_c).astype(np.int64)
    x1 = np.clip(x0 + 1, 0, in_w - 1)
    y1 = np.clip(y0 + 1, 0, in_h - 1)
    fx = sx_c - x0
    fy = sy_c - y0

    data = img.astype(np.float64)
    if data.ndim == 3:
        fx = fx[:, None]
        fy = fy[:, None]
    top = data[y0, x0] * (1 - fx) + data[y0, x1] * fx
    bottom = data[y1, x0] * (1 - fx) + data[y1, x1] * fx
    vals = top * (1 - fy) + bottom * fy
    if data.ndim == 3:
        vals[~valid] = fill
        out = vals.reshape(out_h, out_w, data.shape[2])
    else:
        vals[~valid] = fill
        out = vals.reshape(out_h, out_w)
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)
