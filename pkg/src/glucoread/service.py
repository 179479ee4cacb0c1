"""Cloud-side inference service.

Three routes: POST /v1/infer runs the cloud-profile detector on either a
GLV1 compressed payload or a raw PNG/JPEG body; POST /v1/feedback
appends a user-labelled image to an append-only log; GET /v1/healthz
reports liveness and build info.

The inference path is stateless: identical bodies yield identical
detections (only the timing field varies). Feedback durability comes
from a length-prefixed record log guarded by a single writer lock, so
no database is needed.
"""

from __future__ import annotations

import io
import json
import struct
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Optional

import numpy as np
from fastapi import FastAPI, File, Form, Request, UploadFile
from fastapi.responses import JSONResponse
from PIL import Image as PILImage
from PIL import UnidentifiedImageError

from . import __version__
from .codec import BadMagic, BadVersion, TruncatedPayload, decompress, deserialize
from .detector import CLOUD_PROFILE, DetectorProfile, detect
from .geometry import CLASS_ALPHABET, DetectionSet

GLV1_MAGIC = b"GLV1"
DEFAULT_MAX_BODY_BYTES = 4 * 1024 * 1024

# Feedback log wire format: one u32 little-endian length prefix per
# record, followed by that many bytes of JSON (image bytes base16).
_LEN_PREFIX = struct.Struct("<I")


@dataclass(frozen=True)
class FeedbackRecord:
    image: bytes
    true_value: str
    client_id: str
    timestamp: float

    def __post_init__(self) -> None:
        if not self.true_value or any(ch not in CLASS_ALPHABET for ch in self.true_value):
            raise ValueError(f"true_value {self.true_value!r} outside the class alphabet")
        if self.timestamp < 0:
            raise ValueError("timestamp must be non-negative")


class FeedbackLog:
    """Append-only length-prefixed record store; single-writer append."""

    def __init__(self, path: Path) -> None:
        self.path = Path(path)
        self._lock = threading.Lock()
        self._count = sum(1 for _ in self.records()) if self.path.exists() else 0

    def append(self, record: FeedbackRecord) -> int:
        blob = json.dumps(
            {
                "image_hex": record.image.hex(),
                "true_value": record.true_value,
                "client_id": record.client_id,
                "timestamp": record.timestamp,
            },
            sort_keys=True,
        ).encode("utf-8")
        with self._lock:
            with open(self.path, "ab") as fh:
                fh.write(_LEN_PREFIX.pack(len(blob)))
                fh.write(blob)
                fh.flush()
            self._count += 1
            return self._count - 1

    def records(self) -> Iterator[FeedbackRecord]:
        if not self.path.exists():
            return
        with open(self.path, "rb") as fh:
            while True:
                head = fh.read(_LEN_PREFIX.size)
                if not head:
                    return
                if len(head) < _LEN_PREFIX.size:
                    raise IOError("feedback log ends mid length prefix")
                (length,) = _LEN_PREFIX.unpack(head)
                blob = fh.read(length)
                if len(blob) < length:
                    raise IOError("feedback log ends mid record")
                data = json.loads(blob.decode("utf-8"))
                yield FeedbackRecord(
                    image=bytes.fromhex(data["image_hex"]),
                    true_value=data["true_value"],
                    client_id=data["client_id"],
                    timestamp=data["timestamp"],
                )

    def __len__(self) -> int:
        return self._count


def _detections_json(dset: DetectionSet) -> list:
    return [
        {
            "label": d.label,
            "confidence": d.confidence,
            "box": [d.box.x_min, d.box.y_min, d.box.x_max, d.box.y_max],
        }
        for d in dset.detections
    ]


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": code, "message": message})


def decode_body(body: bytes) -> np.ndarray:
    """Decode an infer body into an RGB array.

    GLV1 payloads are recognized by their magic; anything else must be a
    decodable raster image.
    """
    if body[:4] == GLV1_MAGIC:
        return decompress(deserialize(body))
    try:
        with PILImage.open(io.BytesIO(body)) as im:
            return np.asarray(im.convert("RGB"))
    except (UnidentifiedImageError, OSError) as exc:
        raise ValueError(f"body is neither GLV1 nor a decodable image: {exc}") from exc


def create_app(
    profile: DetectorProfile = CLOUD_PROFILE,
    feedback_path: Optional[Path] = None,
    max_body_bytes: int = DEFAULT_MAX_BODY_BYTES,
    model_tag: str = "cloud-classical-v1",
) -> FastAPI:
    app = FastAPI(title="glucoread service", version=__version__)
    log = FeedbackLog(feedback_path) if feedback_path is not None else None

    @app.post("/v1/infer")
    async def infer(request: Request):  # pragma: no cover - thin route
        body = await request.body()
        return infer_bytes(body)

    def infer_bytes(body: bytes):
        if len(body) > max_body_bytes:
            return _error(413, "body_too_large", f"body exceeds {max_body_bytes} bytes")
        if not body:
            return _error(400, "empty_body", "empty request body")
        started = time.perf_counter()
        try:
            img = decode_body(body)
        except BadMagic as exc:
            return _error(400, "bad_magic", str(exc))
        except BadVersion as exc:
            return _error(400, "bad_version", str(exc))
        except TruncatedPayload as exc:
            return _error(400, "truncated_payload", str(exc))
        except ValueError as exc:
            return _error(400, "bad_image", str(exc))
        dset = detect(img, profile)
        timing_ms = (time.perf_counter() - started) * 1000.0
        return JSONResponse(
            {
                "detections": _detections_json(dset),
                "model_tag": model_tag,
                "timing_ms": timing_ms,
            }
        )

    # The synchronous core is exposed for in-process use (tests, the
    # loopback client) without spinning up a server.
    app.state.infer_bytes = infer_bytes
    app.state.feedback_log = log

    @app.post("/v1/feedback")
    async def feedback(
        image: UploadFile = File(...),
        true_value: str = Form(...),
        client_id: str = Form("anonymous"),
    ):
        if log is None:
            return _error(503, "feedback_disabled", "no feedback store configured")
        data = await image.read()
        try:
            record = FeedbackRecord(
                image=data,
                true_value=true_value,
                client_id=client_id,
                timestamp=time.time(),
            )
        except ValueError as exc:
            return _error(400, "bad_record", str(exc))
        try:
            record_id = log.append(record)
        except OSError as exc:  # pragma: no cover - disk failure
            return _error(503, "storage_unavailable", f"retriable: {exc}")
        return JSONResponse({"record_id": record_id})

    @app.get("/v1/healthz")
    async def healthz():
        return JSONResponse(
            {"status": "ok", "version": __version__, "model_tag": model_tag}
        )

    return app
