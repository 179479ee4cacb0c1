import hashlib
import json
from pathlib import Path

import numpy as np
import pytest

from glucoread.geometry import BoundingBox
from glucoread.readout import Unit
from glucoread.synth.config import SynthConfig
from glucoread.synth.dataset import (
    generate_samples,
    load_manifest,
    split_templates,
    synthesize,
)
from glucoread.synth.render import SEGMENTS, render_sample
from glucoread.synth.templates import default_templates
from glucoread.synth.values import (
    INTEGER_FRACTION,
    ONE_DECIMAL_FRACTION,
    generate_value,
)


@pytest.fixture(scope="module")
def templates():
    return default_templates(count=6, seed=2024)


class TestValueGeneration:
    def test_form_fractions_over_ten_thousand(self):
        rng = np.random.default_rng(1234)
        counts = {"int": 0, "one": 0, "two": 0}
        for _ in range(10_000):
            text, _ = generate_value(rng)
            if "." not in text:
                counts["int"] += 1
            elif len(text.split(".")[1]) == 1:
                counts["one"] += 1
            else:
                counts["two"] += 1
        assert abs(counts["int"] / 10_000 - INTEGER_FRACTION) < 0.03
        assert abs(counts["one"] / 10_000 - ONE_DECIMAL_FRACTION) < 0.03
        assert abs(counts["two"] / 10_000 - 0.15) < 0.03

    def test_units_follow_value_form(self):
        rng = np.random.default_rng(5)
        for _ in range(500):
            text, unit = generate_value(rng)
            assert unit is (Unit.MG_DL if "." not in text else Unit.MMOL_L)

    def test_decimal_values_are_capped(self):
        rng = np.random.default_rng(6)
        for _ in range(2000):
            text, _ = generate_value(rng)
            if "." in text:
                assert float(text) < 55.0

    def test_alphabet_is_digits_and_dot(self):
        rng = np.random.default_rng(7)
        for _ in range(500):
            text, _ = generate_value(rng)
            assert set(text) <= set("0123456789.")


class TestSegments:
    def test_all_ten_digits_have_distinct_patterns(self):
        assert len(SEGMENTS) == 10
        assert len({frozenset(v) for v in SEGMENTS.values()}) == 10


class TestRenderInvariants:
    def test_annotations_match_text_and_are_disjoint(self, templates):
        cfg = SynthConfig(n_samples=0, seed=9)
        for i in range(40):
            rng = np.random.default_rng((9, i))
            t = templates[int(rng.integers(0, len(templates)))]
            s = render_sample(t, cfg, rng)
            assert len(s.value_rois) == len(s.value_text)
            # glyphs are annotated left to right
            xs = [b.x_min for b in s.value_rois]
            assert xs == sorted(xs)
            for b in s.value_rois:
                assert isinstance(b, BoundingBox) and b.area > 0
            # no value glyph may intersect any item overlay
            for vb in s.value_rois:
                for _, ib in s.item_rois:
                    no_x = vb.x_max <= ib.x_min or ib.x_max <= vb.x_min
                    no_y = vb.y_max <= ib.y_min or ib.y_max <= vb.y_min
                    assert no_x or no_y

    def test_forced_value_is_honored(self, templates):
        rng = np.random.default_rng(11)
        s = render_sample(templates[0], SynthConfig(), rng, value=("12.5", Unit.MMOL_L))
        assert s.value_text == "12.5"
        assert len(s.value_rois) == 4


class TestSplits:
    def test_device_level_partition(self, templates):
        cfg = SynthConfig(n_samples=0, seed=3, split=(0.5, 0.3, 0.2))
        parts = split_templates(templates, cfg)
        ids = [t.template_id for ts in parts.values() for t in ts]
        assert sorted(ids) == sorted(t.template_id for t in templates)
        assert len(set(ids)) == len(ids)

    def test_split_is_seed_deterministic(self, templates):
        cfg = SynthConfig(n_samples=0, seed=3)
        a = split_templates(templates, cfg)
        b = split_templates(templates, cfg)
        assert {k: [t.template_id for t in v] for k, v in a.items()} == {
            k: [t.template_id for t in v] for k, v in b.items()
        }

    def test_rejects_empty_template_list(self):
        with pytest.raises(ValueError):
            split_templates([], SynthConfig())

    def test_rejects_bad_split_ratios(self):
        with pytest.raises(ValueError):
            SynthConfig(split=(0.5, 0.5, 0.5))


class TestDeterminism:
    def test_stream_is_order_independent(self, templates):
        cfg = SynthConfig(n_samples=6, seed=21)
        first = list(generate_samples(templates, cfg))
        second = list(generate_samples(templates, cfg))
        for a, b in zip(first, second):
            assert a.value_text == b.value_text
            assert np.array_equal(a.image, b.image)

    def test_rerun_is_byte_identical_on_disk(self, templates, tmp_path):
        cfg = SynthConfig(n_samples=5, seed=42)
        m1 = synthesize(templates, cfg, tmp_path / "a")
        m2 = synthesize(templates, cfg, tmp_path / "b")

        def digest(root: Path):
            out = {}
            for p in sorted(root.rglob("*")):
                if p.is_file():
                    out[str(p.relative_to(root))] = hashlib.sha256(
                        p.read_bytes()
                    ).hexdigest()
            return out

        assert digest(m1.parent) == digest(m2.parent)

    def test_manifest_round_trip(self, templates, tmp_path):
        cfg = SynthConfig(n_samples=4, seed=13)
        manifest = synthesize(templates, cfg, tmp_path / "d")
        records = load_manifest(manifest)
        assert len(records) == 4
        for rec in records:
            assert (tmp_path / "d" / rec["image_path"]).exists()
            assert rec["split"] in ("train", "val", "test")
            assert len(rec["value_rois"]) == len(rec["value_text"])
            json.dumps(rec)  # records stay JSON-serializable
