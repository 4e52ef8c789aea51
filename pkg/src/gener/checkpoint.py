"""Binary checkpoint format.

Layout (all integers little-endian)::

    b"GENR" | u32 version (=1) | u64 header length | UTF-8 JSON header | f32 payload

The header carries the architecture, the model config, the training seed
and a manifest of ``{name, shape, offset}`` entries (byte offsets into the
payload, parameters first, then batch-norm running statistics).
"""

from __future__ import annotations

import json
import os
import struct
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .autonet import Network
from .core import DataError, IoFailure
from .model import GenerConfig, build_network

MAGIC = b"GENR"
VERSION = 1
_PREAMBLE = struct.Struct("<4sIQ")


class CheckpointError(DataError):
    pass


class BadMagic(CheckpointError):
    pass


class VersionUnsupported(CheckpointError):
    pass


class PayloadLengthMismatch(CheckpointError):
    pass


@dataclass
class Checkpoint:
    architecture: str
    config: GenerConfig
    seed: int
    tensors: dict[str, np.ndarray]  # float32, manifest order
    extra: dict = field(default_factory=dict)

    @classmethod
    def from_network(cls, network: Network, seed: int, extra: dict | None = None) -> "Checkpoint":
        tensors = {k: p.value.astype("<f4") for k, p in network.named_parameters().items()}
        tensors.update({k: b.astype("<f4") for k, b in network.named_buffers().items()})
        return cls(network.meta["architecture"], network.meta["config"], seed, tensors, dict(extra or {}))

    def to_network(self, dtype=np.float32) -> Network:
        net = build_network(self.architecture, self.config, dtype)
        params = net.named_parameters()
        buffers = net.named_buffers()
        for name, arr in self.tensors.items():
            target = params[name].value if name in params else buffers[name]
            if target.shape != arr.shape:
                raise CheckpointError(f"{name}: shape {arr.shape} != model {target.shape}")
            target[...] = arr
        net.meta["seed"] = self.seed
        return net

    def header(self) -> dict:
        manifest = []
        offset = 0
        for name, arr in self.tensors.items():
            manifest.append({"name": name, "shape": list(arr.shape), "offset": offset})
            offset += 4 * arr.size
        return {
            "format_version": VERSION,
            "architecture": self.architecture,
            "config": self.config.model_dump(),
            "seed": self.seed,
            "manifest": manifest,
            "extra": self.extra,
        }

    def to_bytes(self) -> bytes:
        head = json.dumps(self.header(), sort_keys=True, separators=(",", ":")).encode("utf-8")
        payload = b"".join(np.ascontiguousarray(a, dtype="<f4").tobytes() for a in self.tensors.values())
        return _PREAMBLE.pack(MAGIC, VERSION, len(head)) + head + payload

    @classmethod
    def from_bytes(cls, data: bytes) -> "Checkpoint":
        if len(data) < _PREAMBLE.size:
            raise BadMagic("file too short for a checkpoint")
        magic, version, head_len = _PREAMBLE.unpack_from(data)
        if magic != MAGIC:
            raise BadMagic(f"bad magic {magic!r}")
        if version != VERSION:
            raise VersionUnsupported(f"checkpoint version {version} not supported")
        start = _PREAMBLE.size
        if len(data) < start + head_len:
            raise PayloadLengthMismatch("truncated header")
        try:
            header = json.loads(data[start:start + head_len].decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise CheckpointError(f"corrupt header: {exc}") from None
        payload = data[start + head_len:]
        expected = sum(4 * int(np.prod(e["shape"], dtype=np.int64)) for e in header["manifest"])
        if len(payload) != expected:
            raise PayloadLengthMismatch(f"payload has {len(payload)} bytes, manifest needs {expected}")
        tensors = {}
        for e in header["manifest"]:
            n = int(np.prod(e["shape"], dtype=np.int64))
            arr = np.frombuffer(payload, dtype="<f4", count=n, offset=e["offset"])
            tensors[e["name"]] = arr.reshape(e["shape"]).copy()
        return cls(
            header["architecture"],
            GenerConfig.parse(header["config"]),
            int(header["seed"]),
            tensors,
            header.get("extra", {}),
        )


def write_atomic(path, data: bytes) -> None:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(data)
            os.replace(tmp, path)
        except BaseException:
            os.unlink(tmp)
            raise
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def save_checkpoint(checkpoint: Checkpoint, path) -> None:
    write_atomic(path, checkpoint.to_bytes())


def read_checkpoint(path) -> Checkpoint:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    return Checkpoint.from_bytes(data)


def load_checkpoint(path, dtype=np.float32) -> Network:
    return read_checkpoint(path).to_network(dtype)
