"""Binary checkpoint format.

Layout::

    b"EMTODCKP"                        8-byte magic
    uint32 little-endian               header length H
    H bytes of UTF-8 JSON              header (sorted keys)
    payload                            little-endian float32, manifest order

The header carries the format version, a digest of the model config, free
metadata, the payload SHA-256 and a sorted manifest of
``{"name", "shape", "offset", "count"}`` entries (offsets in elements).
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import ParamStore

MAGIC = b"EMTODCKP"
FORMAT_VERSION = 1
_PAYLOAD_DTYPE = np.dtype("<f4")


class CheckpointError(ValueError):
    """Corrupted, truncated or mismatched checkpoint."""


class CheckpointVersionError(CheckpointError):
    """Unknown format version or config digest mismatch."""


def config_digest(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()


@dataclass
class Checkpoint:
    params: dict[str, np.ndarray]
    config_digest: str
    metadata: dict = field(default_factory=dict)

    @classmethod
    def from_store(cls, store: ParamStore, config: dict, metadata: dict | None = None) -> "Checkpoint":
        return cls(
            params={n: store[n].astype(_PAYLOAD_DTYPE) for n in store.names()},
            config_digest=config_digest(config),
            metadata=dict(metadata or {}),
        )

    def to_bytes(self) -> bytes:
        manifest = []
        chunks = []
        offset = 0
        for name in sorted(self.params):
            arr = np.ascontiguousarray(self.params[name], dtype=_PAYLOAD_DTYPE)
            manifest.append({"name": name, "shape": list(arr.shape), "offset": offset, "count": int(arr.size)})
            chunks.append(arr.tobytes())
            offset += arr.size
        payload = b"".join(chunks)
        header = {
            "format_version": FORMAT_VERSION,
            "config_digest": self.config_digest,
            "metadata": self.metadata,
            "manifest": manifest,
            "payload_sha256": hashlib.sha256(payload).hexdigest(),
        }
        hbytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
        return MAGIC + struct.pack("<I", len(hbytes)) + hbytes + payload

    @classmethod
    def from_bytes(cls, blob: bytes) -> "Checkpoint":
        if len(blob) < len(MAGIC) + 4 or not blob.startswith(MAGIC):
            raise CheckpointError("not a checkpoint file (bad magic)")
        (hlen,) = struct.unpack_from("<I", blob, len(MAGIC))
        start = len(MAGIC) + 4
        if len(blob) < start + hlen:
            raise CheckpointError("truncated checkpoint header")
        try:
            header = json.loads(blob[start : start + hlen].decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise CheckpointError(f"unreadable checkpoint header: {exc}") from exc
        if header.get("format_version") != FORMAT_VERSION:
            raise CheckpointVersionError(f"unsupported checkpoint format version {header.get('format_version')!r}")
        payload = blob[start + hlen :]
        total = sum(e["count"] for e in header["manifest"])
        if len(payload) != total * _PAYLOAD_DTYPE.itemsize:
            raise CheckpointError(
                f"payload has {len(payload)} bytes, manifest expects {total * _PAYLOAD_DTYPE.itemsize}"
            )
        if hashlib.sha256(payload).hexdigest() != header["payload_sha256"]:
            raise CheckpointError("payload checksum mismatch")
        flat = np.frombuffer(payload, dtype=_PAYLOAD_DTYPE)
        params = {}
        expected_offset = 0
        for entry in header["manifest"]:
            shape = tuple(entry["shape"])
            count = int(np.prod(shape, dtype=np.int64)) if shape else 1
            if entry["offset"] != expected_offset or entry["count"] != count:
                raise CheckpointError(f"manifest offset/shape mismatch at {entry['name']!r}")
            params[entry["name"]] = flat[expected_offset : expected_offset + count].reshape(shape).copy()
            expected_offset += count
        return cls(params=params, config_digest=header["config_digest"], metadata=header["metadata"])

    def apply_to(self, store: ParamStore) -> None:
        """Copy tensors into ``store``; the manifest must match exactly."""
        ours = set(store.names())
        theirs = set(self.params)
        if ours != theirs:
            missing = sorted(ours - theirs)[:5]
            extra = sorted(theirs - ours)[:5]
            raise CheckpointError(f"parameter manifest mismatch: missing {missing}, unexpected {extra}")
        for name in sorted(ours):
            if store[name].shape != self.params[name].shape:
                raise CheckpointError(
                    f"{name}: checkpoint shape {self.params[name].shape} != model shape {store[name].shape}"
                )
        for name in sorted(ours):
            store.set(name, self.params[name])


def save_checkpoint(path: str | Path, ckpt: Checkpoint) -> None:
    Path(path).write_bytes(ckpt.to_bytes())


def load_checkpoint(path: str | Path, expected_digest: str | None = None) -> Checkpoint:
    ckpt = Checkpoint.from_bytes(Path(path).read_bytes())
    if expected_digest is not None and ckpt.config_digest != expected_digest:
        raise CheckpointVersionError(
            f"config digest mismatch: checkpoint {ckpt.config_digest[:12]}, expected {expected_digest[:12]}"
        )
    return ckpt
