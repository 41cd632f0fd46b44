"""Versioned checkpoint container.

Layout: a magic line, one JSON header line, then the raw little-endian float64
payload. The header records every array's shape and offset plus the payload
length and SHA-256, so truncation or corruption fails loudly on load.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ..errors import CheckpointError
from ..pipeline.features import Normalizer
from .network import Architecture, NetworkState

MAGIC = b"SRSFP-CHECKPOINT\n"
VERSION = 1


@dataclass(frozen=True, eq=False)
class Checkpoint:
    state: NetworkState
    normalizer: Normalizer = field(default_factory=Normalizer)
    fourth_root: bool = True
    # session ids that touched the model: {"normalizer": [...], "train": [...], "validation": [...]}
    provenance: dict = field(default_factory=dict)

    def seen_sessions(self) -> set[str]:
        seen = set(self.normalizer.fitted_on)
        for ids in self.provenance.values():
            seen.update(ids)
        return seen


def _arrays(state: NetworkState) -> dict[str, np.ndarray]:
    out = {}
    for name in ("weights", "biases", "m_w", "v_w", "m_b", "v_b"):
        for k, a in enumerate(getattr(state, name)):
            out[f"{name}.{k}"] = a
    out["output_offset"] = state.output_offset
    return out


def _arch_dict(arch: Architecture) -> dict:
    d = asdict(arch)
    d["input_block"] = list(arch.input_block)
    d["positioning_block"] = list(arch.positioning_block)
    if not isinstance(arch.dropout, (int, float)):
        d["dropout"] = list(arch.dropout)
    return d


def _arch_from(d: dict) -> Architecture:
    dropout = d["dropout"]
    return Architecture(
        tuple(d["input_block"]),
        d["center_count"],
        d["center_width"],
        tuple(d["positioning_block"]),
        tuple(dropout) if isinstance(dropout, list) else dropout,
        d["constrained"],
    )


def dumps_checkpoint(ckpt: Checkpoint | NetworkState) -> bytes:
    if isinstance(ckpt, NetworkState):
        ckpt = Checkpoint(ckpt)
    state = ckpt.state
    manifest = []
    chunks = []
    offset = 0
    for name, arr in _arrays(state).items():
        data = np.ascontiguousarray(arr, dtype="<f8").tobytes()
        manifest.append({"name": name, "shape": list(arr.shape), "offset": offset, "nbytes": len(data)})
        chunks.append(data)
        offset += len(data)
    payload = b"".join(chunks)
    header = {
        "version": VERSION,
        "architecture": _arch_dict(state.arch),
        "n_layers": state.n_layers,
        "step": state.step,
        "seed": state.seed,
        "output_scale": state.output_scale,
        "normalizer_max": ckpt.normalizer.max_amplitude,
        "normalizer_fitted_on": list(ckpt.normalizer.fitted_on),
        "fourth_root": ckpt.fourth_root,
        "provenance": {k: list(v) for k, v in sorted(ckpt.provenance.items())},
        "arrays": manifest,
        "payload_bytes": len(payload),
        "payload_sha256": hashlib.sha256(payload).hexdigest(),
    }
    return MAGIC + json.dumps(header, sort_keys=True).encode() + b"\n" + payload


def loads_checkpoint(blob: bytes) -> Checkpoint:
    if not blob.startswith(MAGIC):
        raise CheckpointError("not a checkpoint (bad magic)")
    rest = blob[len(MAGIC) :]
    nl = rest.find(b"\n")
    if nl < 0:
        raise CheckpointError("truncated checkpoint header")
    try:
        header = json.loads(rest[:nl])
    except json.JSONDecodeError as exc:
        raise CheckpointError(f"corrupt checkpoint header: {exc}") from None
    if header.get("version") != VERSION:
        raise CheckpointError(f"checkpoint version {header.get('version')} unsupported (expected {VERSION})")
    payload = rest[nl + 1 :]
    if len(payload) != header["payload_bytes"]:
        raise CheckpointError(
            f"truncated checkpoint: payload has {len(payload)} bytes, expected {header['payload_bytes']}"
        )
    if hashlib.sha256(payload).hexdigest() != header["payload_sha256"]:
        raise CheckpointError("checkpoint payload checksum mismatch")
    arrays = {}
    for entry in header["arrays"]:
        raw = payload[entry["offset"] : entry["offset"] + entry["nbytes"]]
        arrays[entry["name"]] = np.frombuffer(raw, dtype="<f8").astype(np.float64).reshape(entry["shape"])
    n = header["n_layers"]
    get = lambda name: tuple(arrays[f"{name}.{k}"] for k in range(n))
    state = NetworkState(
        _arch_from(header["architecture"]),
        get("weights"),
        get("biases"),
        get("m_w"),
        get("v_w"),
        get("m_b"),
        get("v_b"),
        step=header["step"],
        seed=header["seed"],
        output_offset=arrays["output_offset"],
        output_scale=header["output_scale"],
    )
    norm = Normalizer(header["normalizer_max"], tuple(header["normalizer_fitted_on"]))
    prov = {k: tuple(v) for k, v in header["provenance"].items()}
    return Checkpoint(state, norm, header["fourth_root"], prov)


def save_checkpoint(ckpt: Checkpoint | NetworkState, sink) -> None:
    """Write to a path or a binary file object."""
    blob = dumps_checkpoint(ckpt)
    if isinstance(sink, (str, Path)):
        Path(sink).write_bytes(blob)
    else:
        sink.write(blob)


def load_checkpoint(source) -> Checkpoint:
    if isinstance(source, (str, Path)):
        path = Path(source)
        if not path.is_file():
            raise CheckpointError(f"checkpoint not found: {path}")
        blob = path.read_bytes()
    else:
        blob = source.read()
    return loads_checkpoint(blob)
