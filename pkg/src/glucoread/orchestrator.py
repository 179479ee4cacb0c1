"""Client-side read flow: local inference plus a concurrent cloud call.

`read` starts the mobile-profile detector and the remote request at the
same logical instant. When the cloud answers within the hard deadline
the two detection sets are fused; otherwise the local result is
returned alone with `degraded=True`. A local failure with a cloud
success degrades the other way, to `cloud_only`.

All timing goes through a clock seam so tests can drive the flow with a
fake clock and a fake cloud client, making deadline-boundary behaviour
fully deterministic.
"""

from __future__ import annotations

import io
import threading
import time
from dataclasses import dataclass, field
from typing import Dict, Optional, Protocol

import numpy as np
from PIL import Image as PILImage

from .codec import CodecConfig, compress, serialize
from .detector import MOBILE_PROFILE, DetectorProfile, detect
from .ensemble import EnsembleConfig, fuse
from .geometry import BoundingBox, Detection, DetectionSet, Source
from .postprocess import PostprocessConfig
from .readout import Readout, Unit, apply_unit_prior, finalize

DEFAULT_SOFT_DEADLINE_MS = 500.0
DEFAULT_HARD_DEADLINE_MS = 5000.0
DEFAULT_AUTO_BANDWIDTH_THRESHOLD_BPS = 1_000_000.0
_JOIN_SLACK_S = 1.0


class Clock(Protocol):
    def monotonic_ms(self) -> float: ...


class SystemClock:
    def monotonic_ms(self) -> float:
        return time.monotonic() * 1000.0


class FakeClock:
    """Manually advanced clock for deterministic orchestration tests."""

    def __init__(self, start_ms: float = 0.0) -> None:
        self._now = float(start_ms)
        self._lock = threading.Lock()

    def monotonic_ms(self) -> float:
        with self._lock:
            return self._now

    def advance(self, delta_ms: float) -> None:
        if delta_ms < 0:
            raise ValueError("clock cannot run backwards")
        with self._lock:
            self._now += delta_ms


class CloudUnavailable(Exception):
    """The remote endpoint could not produce detections in time."""


@dataclass(frozen=True)
class InferOutcome:
    detections: DetectionSet
    server_ms: float = 0.0


class CloudClient(Protocol):
    def infer(self, payload: bytes, timeout_ms: float) -> InferOutcome: ...


class FakeCloudClient:
    """Deterministic stand-in: answers after a configured virtual delay.

    The call succeeds iff delay_ms <= timeout_ms (inclusive, so the
    deadline itself is still a hit); the attached clock, when given, is
    advanced by the virtual delay.
    """

    def __init__(
        self,
        detections: DetectionSet,
        delay_ms: float = 0.0,
        server_ms: float = 0.0,
        clock: Optional[FakeClock] = None,
        outage: bool = False,
    ) -> None:
        self.detections = detections
        self.delay_ms = delay_ms
        self.server_ms = server_ms
        self.clock = clock
        self.outage = outage
        self.calls = 0

    def infer(self, payload: bytes, timeout_ms: float) -> InferOutcome:
        self.calls += 1
        if self.outage:
            raise CloudUnavailable("injected endpoint outage")
        if self.delay_ms > timeout_ms:
            if self.clock is not None:
                self.clock.advance(timeout_ms)
            raise CloudUnavailable(
                f"no answer within {timeout_ms} ms (virtual delay {self.delay_ms} ms)"
            )
        if self.clock is not None:
            self.clock.advance(self.delay_ms)
        return InferOutcome(self.detections, server_ms=self.server_ms)


class HttpCloudClient:
    """Talks to the service's /v1/infer route."""

    def __init__(self, endpoint: str) -> None:
        self.endpoint = endpoint.rstrip("/")

    def infer(self, payload: bytes, timeout_ms: float) -> InferOutcome:
        import httpx

        try:
            resp = httpx.post(
                f"{self.endpoint}/v1/infer",
                content=payload,
                timeout=timeout_ms / 1000.0,
            )
        except httpx.HTTPError as exc:
            raise CloudUnavailable(str(exc)) from exc
        if resp.status_code != 200:
            raise CloudUnavailable(f"status {resp.status_code}: {resp.text[:200]}")
        body = resp.json()
        dets = [
            Detection(
                box=BoundingBox(*d["box"]),
                label=d["label"],
                confidence=d["confidence"],
            )
            for d in body["detections"]
        ]
        return InferOutcome(DetectionSet(dets, Source.CLOUD), server_ms=body["timing_ms"])


@dataclass
class ReadPolicy:
    soft_deadline_ms: float = DEFAULT_SOFT_DEADLINE_MS
    hard_deadline_ms: float = DEFAULT_HARD_DEADLINE_MS
    compression: str = "on"  # on | off | auto
    auto_bandwidth_threshold_bps: float = DEFAULT_AUTO_BANDWIDTH_THRESHOLD_BPS
    measured_bandwidth_bps: Optional[float] = None
    cloud_endpoint: Optional[str] = None
    unit_prior: Optional[Unit] = None
    codec: CodecConfig = field(default_factory=CodecConfig)
    ensemble: EnsembleConfig = field(default_factory=EnsembleConfig)
    postprocess: PostprocessConfig = field(default_factory=PostprocessConfig)

    def __post_init__(self) -> None:
        if self.soft_deadline_ms > self.hard_deadline_ms:
            raise ValueError("soft deadline must not exceed the hard deadline")
        if self.compression not in ("on", "off", "auto"):
            raise ValueError("compression must be on, off or auto")

    def use_compression(self) -> bool:
        if self.compression == "on":
            return True
        if self.compression == "off":
            return False
        if self.measured_bandwidth_bps is None:
            return True
        return self.measured_bandwidth_bps < self.auto_bandwidth_threshold_bps


@dataclass(frozen=True)
class ReadResult:
    readout: Readout
    source: str  # ensemble | mobile_only | cloud_only
    timings_ms: Dict[str, float]
    degraded: bool

    def __post_init__(self) -> None:
        if self.source not in ("ensemble", "mobile_only", "cloud_only"):
            raise ValueError(f"unknown source {self.source!r}")


class ReadFailed(Exception):
    def __init__(self, message: str, timings_ms: Dict[str, float]) -> None:
        super().__init__(message)
        self.timings_ms = dict(timings_ms)


def prepare_payload(img: np.ndarray, policy: ReadPolicy) -> bytes:
    if policy.use_compression():
        return serialize(compress(img, policy.codec))
    buf = io.BytesIO()
    PILImage.fromarray(img).save(buf, format="PNG")
    return buf.getvalue()


def read(
    img: np.ndarray,
    policy: ReadPolicy,
    client: Optional[CloudClient] = None,
    mobile_profile: DetectorProfile = MOBILE_PROFILE,
    clock: Optional[Clock] = None,
) -> ReadResult:
    if client is None:
        if policy.cloud_endpoint is None:
            raise ValueError("either a client or policy.cloud_endpoint is required")
        client = HttpCloudClient(policy.cloud_endpoint)
    clock = clock or SystemClock()
    started = clock.monotonic_ms()
    timings: Dict[str, float] = {}

    local_box: Dict[str, object] = {}
    remote_box: Dict[str, object] = {}

    def run_local() -> None:
        t0 = clock.monotonic_ms()
        try:
            local_box["result"] = detect(img, mobile_profile)
        except Exception as exc:  # noqa: BLE001 - reported via ReadFailed
            local_box["error"] = exc
        local_box["ms"] = clock.monotonic_ms() - t0

    def run_remote() -> None:
        t0 = clock.monotonic_ms()
        try:
            payload = prepare_payload(img, policy)
            remote_box["compress_ms"] = clock.monotonic_ms() - t0
            t1 = clock.monotonic_ms()
            outcome = client.infer(payload, timeout_ms=policy.hard_deadline_ms)
            remote_box["result"] = outcome.detections
            remote_box["server_ms"] = outcome.server_ms
            remote_box["network_ms"] = max(
                clock.monotonic_ms() - t1 - outcome.server_ms, 0.0
            )
        except Exception as exc:  # noqa: BLE001 - degraded path below
            remote_box["error"] = exc

    local_thread = threading.Thread(target=run_local, name="glucoread-local")
    remote_thread = threading.Thread(target=run_remote, name="glucoread-remote")
    local_thread.start()
    remote_thread.start()
    remote_thread.join(policy.hard_deadline_ms / 1000.0 + _JOIN_SLACK_S)
    local_thread.join()

    timings["local_ms"] = float(local_box.get("ms", 0.0))
    timings["compress_ms"] = float(remote_box.get("compress_ms", 0.0))
    timings["network_ms"] = float(remote_box.get("network_ms", 0.0))
    timings["server_ms"] = float(remote_box.get("server_ms", 0.0))

    mobile = local_box.get("result")
    cloud = remote_box.get("result") if not remote_thread.is_alive() else None

    if mobile is None and cloud is None:
        timings["total_ms"] = clock.monotonic_ms() - started
        raise ReadFailed(
            f"both paths failed: local={local_box.get('error')!r} "
            f"remote={remote_box.get('error')!r}",
            timings,
        )

    t_fuse = clock.monotonic_ms()
    if mobile is not None and cloud is not None:
        fused = fuse(cloud, mobile, policy.ensemble)
        readout = finalize(fused, policy.ensemble, policy.postprocess)
        source, degraded = "ensemble", False
    elif mobile is not None:
        readout = finalize(mobile, policy.ensemble, policy.postprocess)
        source, degraded = "mobile_only", True
    else:
        readout = finalize(cloud, policy.ensemble, policy.postprocess)
        source, degraded = "cloud_only", True
    if policy.unit_prior is not None:
        readout = apply_unit_prior(readout, policy.unit_prior)
    timings["fuse_ms"] = clock.monotonic_ms() - t_fuse
    timings["total_ms"] = clock.monotonic_ms() - started
    return ReadResult(readout=readout, source=source, timings_ms=timings, degraded=degraded)
