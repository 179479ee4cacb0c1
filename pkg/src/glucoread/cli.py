"""Batch entry points wiring the pipeline modules together.

Subcommands: synth, read, eval, serve, simulate, sweep-compression,
compress, decompress. Every run writes a RunManifest JSON next to its
outputs; pure commands are deterministic given (command, config, seed).

Config precedence is flags > config file > built-in defaults. The
config file is a flat `key = value` text document; keys are the flag
names with dashes replaced by underscores.
"""

from __future__ import annotations

import hashlib
import json
import os
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import click
import numpy as np
from PIL import Image as PILImage

from . import __version__
from .codec import CodecConfig, bandwidth_ratio, compress, decompress, deserialize, serialize
from .detector import CLOUD_PROFILE, MOBILE_PROFILE, detect
from .ensemble import EnsembleConfig, fuse
from .geometry import BoundingBox, Detection, DetectionSet, Source
from .netsim import (
    DEFAULT_CONDITIONS,
    ModelKind,
    ServiceModelSpec,
    SlaPolicy,
    compare_service_models,
)
from .orchestrator import ReadFailed, ReadPolicy, read as orchestrate_read
from .postprocess import PostprocessConfig
from .readout import GroundTruth, Readout, Unit, confusion_matrix, corpus_accuracy, finalize
from .synth.config import SynthConfig
from .synth.dataset import load_manifest, synthesize
from .synth.templates import default_templates

_ENDPOINT_ENV = "GLUCOREAD_ENDPOINT"


@dataclass
class RunManifest:
    command: str
    config: Dict[str, object]
    seed: Optional[int]
    inputs: List[str]
    outputs: List[str]
    wall_time_s: float
    artifact_hashes: Dict[str, str] = field(default_factory=dict)

    def write(self, path: Path) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(asdict(self), fh, indent=2, sort_keys=True)
            fh.write("\n")


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def hash_artifacts(paths: Sequence[Path]) -> Dict[str, str]:
    return {str(p): _sha256(p) for p in paths}


def load_config_file(path: Optional[Path]) -> Dict[str, str]:
    if path is None:
        return {}
    values: Dict[str, str] = {}
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise click.ClickException(f"{path}:{lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        values[key.strip().replace("-", "_")] = value.strip()
    return values


def _resolve(ctx: click.Context, name: str, value, cast=str):
    """flags > config file > defaults, using click's parameter sources."""
    source = ctx.get_parameter_source(name)
    file_values: Dict[str, str] = ctx.obj or {}
    if source is not None and source.name == "DEFAULT" and name in file_values:
        return cast(file_values[name])
    return value


@click.group()
@click.version_option(version=__version__)
@click.option(
    "--config",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    default=None,
    help="Flat key=value config file; flags still win.",
)
@click.pass_context
def cli(ctx: click.Context, config: Optional[Path]) -> None:
    """Seven-segment screen readout toolkit."""
    ctx.obj = load_config_file(config)


def _write_manifest(
    out_dir: Path,
    command: str,
    config: Dict[str, object],
    seed: Optional[int],
    inputs: Sequence[Path],
    outputs: Sequence[Path],
    started: float,
) -> None:
    manifest = RunManifest(
        command=command,
        config=config,
        seed=seed,
        inputs=[str(p) for p in inputs],
        outputs=[str(p) for p in outputs],
        wall_time_s=time.time() - started,
        artifact_hashes=hash_artifacts([p for p in outputs if p.is_file()]),
    )
    manifest.write(out_dir / "run_manifest.json")


@cli.command()
@click.option("--n", "n_samples", type=int, default=100, show_default=True)
@click.option("--seed", type=int, required=True)
@click.option("--out", type=click.Path(path_type=Path), required=True)
@click.option("--templates", "template_count", type=int, default=20, show_default=True)
@click.pass_context
def synth(ctx, n_samples: int, seed: int, out: Path, template_count: int) -> None:
    """Generate an annotated synthetic dataset."""
    n_samples = _resolve(ctx, "n_samples", n_samples, int)
    template_count = _resolve(ctx, "template_count", template_count, int)
    started = time.time()
    cfg = SynthConfig(n_samples=n_samples, seed=seed)
    templates = default_templates(count=template_count)
    try:
        manifest_path = synthesize(templates, cfg, out)
    except Exception as exc:
        raise click.ClickException(f"synthesis failed: {exc}") from exc
    click.echo(f"wrote {n_samples} samples under {out}")
    _write_manifest(
        out,
        "synth",
        {"n": n_samples, "seed": seed, "templates": template_count},
        seed,
        [],
        [manifest_path],
        started,
    )


def _load_image(path: Path) -> np.ndarray:
    with PILImage.open(path) as im:
        return np.asarray(im.convert("RGB"))


class _LoopbackClient:
    """In-process cloud: runs the cloud profile directly, no network."""

    def infer(self, payload: bytes, timeout_ms: float):
        from .orchestrator import InferOutcome
        from .service import decode_body

        return InferOutcome(detect(decode_body(payload), CLOUD_PROFILE))


@cli.command("read")
@click.argument("target", type=click.Path(exists=True, path_type=Path))
@click.option("--endpoint", default=None, envvar=_ENDPOINT_ENV, show_envvar=True)
@click.option(
    "--compression",
    type=click.Choice(["on", "off", "auto"]),
    default="on",
    show_default=True,
)
@click.option(
    "--unit",
    type=click.Choice([u.value for u in Unit]),
    default=Unit.UNKNOWN.value,
    show_default=True,
)
@click.pass_context
def read_cmd(ctx, target: Path, endpoint: Optional[str], compression: str, unit: str) -> None:
    """Read one image or every image in a directory."""
    endpoint = _resolve(ctx, "endpoint", endpoint)
    policy = ReadPolicy(
        compression=compression,
        cloud_endpoint=endpoint,
        unit_prior=None if unit == Unit.UNKNOWN.value else Unit(unit),
    )
    client = None if endpoint else _LoopbackClient()
    paths = (
        sorted(p for p in target.iterdir() if p.suffix.lower() in (".png", ".jpg", ".jpeg"))
        if target.is_dir()
        else [target]
    )
    if not paths:
        raise click.ClickException(f"no images under {target}")
    failures = 0
    for path in paths:
        try:
            result = orchestrate_read(_load_image(path), policy, client=client)
        except (ReadFailed, OSError, ValueError) as exc:
            click.echo(f"{path}\tERROR\t{exc}")
            failures += 1
            continue
        click.echo(
            f"{path}\t{result.readout.text}\t{result.source}"
            f"\tdegraded={str(result.degraded).lower()}"
        )
    if failures:
        raise click.ClickException(f"{failures}/{len(paths)} images failed")


def _truth_detections(record: dict) -> List[Detection]:
    return [
        Detection(box=BoundingBox(*box), label=label, confidence=1.0)
        for label, box in zip(record["value_text"], record["value_rois"])
    ]


@cli.command("eval")
@click.option(
    "--dataset", type=click.Path(exists=True, path_type=Path), required=True
)
@click.option("--detectors", default="mobile,cloud,ensemble", show_default=True)
@click.option("--report", type=click.Path(path_type=Path), default=None)
def eval_cmd(dataset: Path, detectors: str, report: Optional[Path]) -> None:
    """Exact-match accuracy, per-detector comparison and confusion matrix."""
    wanted = [d.strip() for d in detectors.split(",") if d.strip()]
    unknown = set(wanted) - {"mobile", "cloud", "ensemble"}
    if unknown:
        raise click.UsageError(f"unknown detectors: {sorted(unknown)}")
    manifest = dataset / "manifest.jsonl"
    if not manifest.exists():
        raise click.ClickException(f"no manifest.jsonl under {dataset}")
    records = load_manifest(manifest)
    if not records:
        raise click.ClickException("empty dataset")

    ecfg, pcfg = EnsembleConfig(), PostprocessConfig()
    pairs: Dict[str, List] = {name: [] for name in wanted}
    matrix_pairs = []
    item_errors = 0
    for record in records:
        try:
            img = _load_image(dataset / record["image_path"])
        except OSError as exc:
            click.echo(f"item {record['index']}: unreadable image ({exc})", err=True)
            item_errors += 1
            continue
        truth = GroundTruth(record["value_text"])
        sets: Dict[str, DetectionSet] = {}
        if {"mobile", "ensemble"} & set(wanted):
            sets["mobile"] = detect(img, MOBILE_PROFILE)
        if {"cloud", "ensemble"} & set(wanted):
            sets["cloud"] = detect(img, CLOUD_PROFILE)
        if "ensemble" in wanted:
            sets["ensemble"] = fuse(sets["cloud"], sets["mobile"], ecfg)
            matrix_pairs.append((sets["ensemble"], _truth_detections(record)))
        for name in wanted:
            pairs[name].append((finalize(sets[name], ecfg, pcfg), truth))

    lines = [f"dataset: {dataset}  items: {len(records)}"]
    for name in wanted:
        lines.append(f"accuracy[{name}] = {corpus_accuracy(pairs[name]):.4f}")
    if "ensemble" in wanted:
        lines.append("confusion matrix (row-normalized):")
        lines.append(confusion_matrix(matrix_pairs).render())
    text = "\n".join(lines)
    click.echo(text)
    if report is not None:
        report.parent.mkdir(parents=True, exist_ok=True)
        report.write_text(text + "\n", encoding="utf-8")
    if item_errors:
        raise click.ClickException(f"{item_errors} items failed")


@cli.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8080, show_default=True)
@click.option(
    "--feedback-log", type=click.Path(path_type=Path), default=Path("feedback.log")
)
def serve(host: str, port: int, feedback_log: Path) -> None:
    """Run the cloud inference service."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(feedback_path=feedback_log), host=host, port=port)


def _spec_from_record(record: dict) -> ServiceModelSpec:
    return ServiceModelSpec(
        kind=ModelKind(record["kind"]),
        payload_bytes=int(record.get("payload_bytes", 0)),
        local_accuracy=record.get("local_accuracy"),
        cloud_accuracy=record.get("cloud_accuracy"),
    )


@cli.command()
@click.option(
    "--scenario",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    default=None,
    help="JSONL of model specs; defaults to the built-in seven models.",
)
def simulate(scenario: Optional[Path]) -> None:
    """Availability/performability table across connection qualities."""
    specs: Sequence[ServiceModelSpec] = ()
    if scenario is not None:
        try:
            specs = [
                _spec_from_record(json.loads(line))
                for line in scenario.read_text(encoding="utf-8").splitlines()
                if line.strip()
            ]
        except (ValueError, KeyError) as exc:
            raise click.ClickException(f"bad scenario file: {exc}") from exc
    report = compare_service_models(specs, DEFAULT_CONDITIONS, SlaPolicy())
    click.echo(report.render())


@cli.command("sweep-compression")
@click.option("--dataset", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--sizes", default="128x64,64x64,128x128,256x256,350x350", show_default=True)
def sweep_compression(dataset: Path, sizes: str) -> None:
    """Bandwidth-reduction ratio vs ensemble accuracy per target size."""
    manifest = dataset / "manifest.jsonl"
    if not manifest.exists():
        raise click.ClickException(f"no manifest.jsonl under {dataset}")
    records = load_manifest(manifest)
    ecfg, pcfg = EnsembleConfig(), PostprocessConfig()
    click.echo("size      ratio     accuracy")
    for token in sizes.split(","):
        try:
            w_s, h_s = token.strip().lower().split("x")
            w, h = int(w_s), int(h_s)
        except ValueError:
            raise click.UsageError(f"bad size {token!r}; expected WxH")
        cfg = CodecConfig(out_width=w, out_height=h)
        pairs = []
        ratio = None
        for record in records:
            img = _load_image(dataset / record["image_path"])
            ratio = bandwidth_ratio(img.shape[1], img.shape[0], w, h)
            cloud = detect(decompress(compress(img, cfg)), CLOUD_PROFILE)
            mobile = detect(img, MOBILE_PROFILE)
            fused = fuse(cloud, mobile, ecfg)
            pairs.append((finalize(fused, ecfg, pcfg), GroundTruth(record["value_text"])))
        click.echo(f"{w}x{h:<6} {float(ratio):7.2f}x  {corpus_accuracy(pairs):.4f}")


@cli.command("compress")
@click.argument("src", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.argument("dst", type=click.Path(dir_okay=False, path_type=Path))
@click.option("--width", type=int, default=128, show_default=True)
@click.option("--height", type=int, default=64, show_default=True)
def compress_cmd(src: Path, dst: Path, width: int, height: int) -> None:
    """Compress an image file into the wire format."""
    img = _load_image(src)
    payload = serialize(compress(img, CodecConfig(out_width=width, out_height=height)))
    dst.write_bytes(payload)
    ratio = bandwidth_ratio(img.shape[1], img.shape[0], width, height)
    click.echo(f"{src} -> {dst} ({len(payload)} bytes, {float(ratio):.2f}x reduction)")


@cli.command("decompress")
@click.argument("src", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.argument("dst", type=click.Path(dir_okay=False, path_type=Path))
def decompress_cmd(src: Path, dst: Path) -> None:
    """Rebuild an image from a wire-format payload."""
    from .codec import CodecError

    try:
        img = decompress(deserialize(src.read_bytes()))
    except CodecError as exc:
        raise click.ClickException(f"bad payload: {exc}") from exc
    PILImage.fromarray(img).save(dst)
    click.echo(f"{src} -> {dst} ({img.shape[1]}x{img.shape[0]})")


def main() -> None:
    cli(prog_name="glucoread")


if __name__ == "__main__":
    sys.exit(main())
