"""Lossy channel-drop compression and its wire envelope.

The client down-scales the capture, converts to HSV and transmits only
the value (V) plane. The server rebuilds an HSV image with constant hue
and saturation, converts back to RGB and up-scales to the original
dimensions. The wire envelope (GLV1) is a fixed little-endian header
followed by the raw V plane.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .imaging import resize_bilinear

MAGIC = b"GLV1"
VERSION = 1
_HEADER = struct.Struct("<4sBHHHHBB")


class CodecError(ValueError):
    """Base class for malformed payloads."""


class BadMagic(CodecError):
    pass


class BadVersion(CodecError):
    pass


class TruncatedPayload(CodecError):
    pass


@dataclass
class CodecConfig:
    out_height: int = 64
    out_width: int = 128
    fill_h: int = 0
    fill_s: int = 0

    def __post_init__(self) -> None:
        if self.out_height < 8 or self.out_width < 8:
            raise ValueError("output dimensions must be at least 8 pixels")
        for k in (self.fill_h, self.fill_s):
            if not 0 <= k <= 255:
                raise ValueError("fill constants must be 8-bit")


@dataclass(frozen=True)
class CompressedPayload:
    comp_w: int
    comp_h: int
    orig_w: int
    orig_h: int
    k_h: int
    k_s: int
    v_plane: bytes

    def __post_init__(self) -> None:
        if min(self.comp_w, self.comp_h, self.orig_w, self.orig_h) <= 0:
            raise ValueError("payload dimensions must be nonzero")
        if len(self.v_plane) != self.comp_w * self.comp_h:
            raise ValueError(
                f"v_plane has {len(self.v_plane)} bytes, expected {self.comp_w * self.comp_h}"
            )


def rgb_to_hsv(pixel: tuple[int, int, int]) -> tuple[int, int, int]:
    """8-bit HSV of one RGB pixel; hue scaled so 360 degrees spans 255."""
    r, g, b = (int(c) for c in pixel)
    v = max(r, g, b)
    mn = min(r, g, b)
    delta = v - mn
    s = 0 if v == 0 else round(255 * delta / v)
    if delta == 0:
        angle = 0.0
    elif v == r:
        angle = (60.0 * (g - b) / delta) % 360.0
    elif v == g:
        angle = 120.0 + 60.0 * (b - r) / delta
    else:
        angle = 240.0 + 60.0 * (r - g) / delta
    h = round(angle / 360.0 * 255.0)
    return h, s, v


def hsv_to_rgb(pixel: tuple[int, int, int]) -> tuple[int, int, int]:
    """Inverse of `rgb_to_hsv` up to 8-bit quantization."""
    h, s, v = (int(c) for c in pixel)
    if s == 0:
        return v, v, v
    angle = h / 255.0 * 360.0
    c = v * s / 255.0
    sector = (angle / 60.0) % 6.0
    x = c * (1.0 - abs(sector % 2.0 - 1.0))
    m = v - c
    if sector < 1:
        rgb = (c, x, 0.0)
    elif sector < 2:
        rgb = (x, c, 0.0)
    elif sector < 3:
        rgb = (0.0, c, x)
    elif sector < 4:
        rgb = (0.0, x, c)
    elif sector < 5:
        rgb = (x, 0.0, c)
    else:
        rgb = (c, 0.0, x)
    return tuple(int(np.clip(round(ch + m), 0, 255)) for ch in rgb)


def value_plane(img: np.ndarray) -> np.ndarray:
    """The HSV value channel of an RGB image: per-pixel channel max."""
    return img.max(axis=2)


def compress(img: np.ndarray, cfg: CodecConfig) -> CompressedPayload:
    """Down-scale, move to HSV and keep only the V plane."""
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError("compress expects an HxWx3 RGB image")
    orig_h, orig_w = img.shape[:2]
    small = resize_bilinear(img, cfg.out_height, cfg.out_width)
    v = value_plane(small)
    return CompressedPayload(
        comp_w=cfg.out_width,
        comp_h=cfg.out_height,
        orig_w=orig_w,
        orig_h=orig_h,
        k_h=cfg.fill_h,
        k_s=cfg.fill_s,
        v_plane=v.astype(np.uint8).tobytes(),
    )


def decompress(p: CompressedPayload) -> np.ndarray:
    """Rebuild an RGB image from the V plane and the fill constants."""
    v = np.frombuffer(p.v_plane, dtype=np.uint8).reshape(p.comp_h, p.comp_w)
    if p.k_s == 0:
        rgb_small = np.repeat(v[:, :, None], 3, axis=2)
    else:
        lut = np.array(
            [hsv_to_rgb((p.k_h, p.k_s, val)) for val in range(256)], dtype=np.uint8
        )
        rgb_small = lut[v]
    return resize_bilinear(rgb_small, p.orig_h, p.orig_w)


def serialize(p: CompressedPayload) -> bytes:
    header = _HEADER.pack(
        MAGIC, VERSION, p.comp_w, p.comp_h, p.orig_w, p.orig_h, p.k_h, p.k_s
    )
    return header + p.v_plane


def deserialize(data: bytes) -> CompressedPayload:
    if len(data) < _HEADER.size:
        if data[:4] != MAGIC and len(data) >= 4:
            raise BadMagic(f"bad magic {data[:4]!r}")
        raise TruncatedPayload(f"header needs {_HEADER.size} bytes, got {len(data)}")
    magic, version, comp_w, comp_h, orig_w, orig_h, k_h, k_s = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise BadMagic(f"bad magic {magic!r}")
    if version != VERSION:
        raise BadVersion(f"unsupported version {version}")
    body = data[_HEADER.size :]
    expected = comp_w * comp_h
    if len(body) != expected:
        raise TruncatedPayload(f"body has {len(body)} bytes, expected {expected}")
    return CompressedPayload(
        comp_w=comp_w,
        comp_h=comp_h,
        orig_w=orig_w,
        orig_h=orig_h,
        k_h=k_h,
        k_s=k_s,
        v_plane=body,
    )


def bandwidth_ratio(orig_w: int, orig_h: int, comp_w: int, comp_h: int) -> Fraction:
    """Raw-RGB bytes of the original over transmitted V-plane bytes."""
    return Fraction(orig_w * orig_h * 3, comp_w * comp_h)
