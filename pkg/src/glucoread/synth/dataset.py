"""Dataset assembly: deterministic sample streams and on-disk layout.

Templates (devices), not individual samples, are partitioned into
train/val/test so no device leaks across splits. Every sample draws its
randomness from a stream derived from (seed, index), which makes the
generation order-independent and reruns byte-identical.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Dict, Iterator, List, Sequence

import numpy as np
from PIL import Image as PILImage

from ..geometry import BoundingBox
from .config import SynthConfig
from .render import SynthSample, render_sample
from .templates import DeviceTemplate
from .transform import transform_sample

SPLITS = ("train", "val", "test")


def split_templates(
    templates: Sequence[DeviceTemplate], cfg: SynthConfig
) -> Dict[str, List[DeviceTemplate]]:
    """Device-level split assignment, deterministic in the seed."""
    if not templates:
        raise ValueError("at least one template is required")
    order = list(templates)
    rng = np.random.default_rng((cfg.seed, 0x5B117))
    rng.shuffle(order)
    n = len(order)
    n_train = round(cfg.split[0] * n)
    n_val = round(cfg.split[1] * n)
    n_train = min(n_train, n)
    n_val = min(n_val, n - n_train)
    return {
        "train": order[:n_train],
        "val": order[n_train : n_train + n_val],
        "test": order[n_train + n_val :],
    }


def generate_samples(
    templates: Sequence[DeviceTemplate], cfg: SynthConfig
) -> Iterator[SynthSample]:
    """Yield n_samples rendered-and-transformed samples in index order."""
    by_split = split_templates(templates, cfg)
    assignment = {t.template_id: split for split, ts in by_split.items() for t in ts}
    pool = list(templates)
    for index in range(cfg.n_samples):
        rng = np.random.default_rng((cfg.seed, index))
        template = pool[int(rng.integers(0, len(pool)))]
        split = assignment[template.template_id]
        sample = render_sample(template, cfg, rng)
        sample = transform_sample(sample, cfg, split, rng)
        yield sample


def _box_json(box: BoundingBox) -> List[float]:
    return [round(box.x_min, 6), round(box.y_min, 6), round(box.x_max, 6), round(box.y_max, 6)]


def sample_record(index: int, image_path: str, sample: SynthSample) -> dict:
    return {
        "index": index,
        "image_path": image_path,
        "value_text": sample.value_text,
        "unit": sample.unit.value,
        "split": sample.split,
        "template_id": sample.template_id,
        "value_rois": [_box_json(b) for b in sample.value_rois],
        "item_rois": [[name, _box_json(b)] for name, b in sample.item_rois],
    }


def synthesize(
    templates: Sequence[DeviceTemplate], cfg: SynthConfig, out_dir: Path
) -> Path:
    """Write images/ and manifest.jsonl under out_dir; returns the
    manifest path."""
    out_dir = Path(out_dir)
    images_dir = out_dir / "images"
    images_dir.mkdir(parents=True, exist_ok=True)
    manifest_path = out_dir / "manifest.jsonl"
    with open(manifest_path, "w", encoding="utf-8") as fh:
        for index, sample in enumerate(generate_samples(templates, cfg)):
            rel = f"images/{index:06d}.png"
            PILImage.fromarray(sample.image).save(out_dir / rel, format="PNG")
            fh.write(json.dumps(sample_record(index, rel, sample), sort_keys=True) + "\n")
    return manifest_path


def load_manifest(manifest_path: Path) -> List[dict]:
    records = []
    with open(manifest_path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    return records
