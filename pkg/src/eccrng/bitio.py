"""Bit-stream file formats and run manifests.

packed: raw bytes, 8 bits per byte, first bit of the stream in the most
significant bit of the first byte; the final byte is zero-padded and the
true bit count lives in the sidecar manifest.  ascii: '0'/'1' characters,
whitespace ignored on read.  Every produced artifact gets a
"<path>.manifest.json" sidecar carrying the reproduction recipe (argv,
seeds, digests, bit count).
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import asdict, dataclass
from datetime import datetime, timezone

import numpy as np

from .gf2 import as_bit_array

__all__ = [
    "PACKED",
    "ASCII",
    "MSB_FIRST",
    "LSB_FIRST",
    "RunManifest",
    "pack_bits",
    "unpack_bits",
    "write_bit_file",
    "read_bit_file",
    "manifest_path_for",
    "write_manifest",
    "load_manifest",
    "sha256_hex",
]

PACKED = "packed"
ASCII = "ascii"
MSB_FIRST = "msb"
LSB_FIRST = "lsb"

_ASCII_WRAP = 64  # characters per line when writing ascii streams


def pack_bits(bits, bit_order: str = MSB_FIRST) -> bytes:
    b = as_bit_array(bits)
    if bit_order not in (MSB_FIRST, LSB_FIRST):
        raise ValueError(f"unknown bit order {bit_order!r}")
    order = "big" if bit_order == MSB_FIRST else "little"
    return np.packbits(b, bitorder=order).tobytes()


def unpack_bits(payload: bytes, bit_count: int | None = None, bit_order: str = MSB_FIRST) -> np.ndarray:
    if bit_order not in (MSB_FIRST, LSB_FIRST):
        raise ValueError(f"unknown bit order {bit_order!r}")
    if bit_count is None:
        bit_count = 8 * len(payload)
    if bit_count > 8 * len(payload):
        raise ValueError(f"bit count {bit_count} exceeds payload capacity {8 * len(payload)}")
    order = "big" if bit_order == MSB_FIRST else "little"
    raw = np.frombuffer(payload, dtype=np.uint8)
    return np.unpackbits(raw, count=bit_count, bitorder=order)


def write_bit_file(path: str, bits, encoding: str = PACKED, bit_order: str = MSB_FIRST) -> bytes:
    """Write the stream; returns the payload bytes actually written."""
    b = as_bit_array(bits)
    if encoding == PACKED:
        payload = pack_bits(b, bit_order)
    elif encoding == ASCII:
        text = "".join("01"[v] for v in b.tolist())
        chunks = [text[i : i + _ASCII_WRAP] for i in range(0, len(text), _ASCII_WRAP)]
        payload = ("\n".join(chunks) + "\n").encode("ascii") if chunks else b""
    else:
        raise ValueError(f"unknown encoding {encoding!r}")
    with open(path, "wb") as fh:
        fh.write(payload)
    return payload


def read_bit_file(
    path: str,
    encoding: str = PACKED,
    bit_count: int | None = None,
    bit_order: str = MSB_FIRST,
) -> np.ndarray:
    with open(path, "rb") as fh:
        payload = fh.read()
    if encoding == ASCII:
        try:
            text = payload.decode("ascii")
        except UnicodeDecodeError as exc:
            raise ValueError(f"{path}: not an ascii bit file ({exc})") from None
        return as_bit_array(text)
    if encoding == PACKED:
        return unpack_bits(payload, bit_count, bit_order)
    raise ValueError(f"unknown encoding {encoding!r}")


def sniff_encoding(path: str) -> str:
    """Best-effort guess: a file of only 0/1/whitespace bytes is ascii."""
    with open(path, "rb") as fh:
        head = fh.read(4096)
    if head and all(c in b"01 \t\r\n" for c in head):
        return ASCII
    return PACKED


def sha256_hex(payload: bytes) -> str:
    return hashlib.sha256(payload).hexdigest()


@dataclass
class RunManifest:
    """Reproduction recipe for one produced artifact."""

    command: str
    argv: list[str]
    params: dict
    output_path: str
    output_sha256: str
    output_bits: int
    encoding: str
    input_path: str | None = None
    input_sha256: str | None = None
    tool_version: str = ""
    created_utc: str = ""

    def __post_init__(self):
        if not self.created_utc:
            self.created_utc = datetime.now(timezone.utc).isoformat(timespec="seconds")


def manifest_path_for(output_path: str) -> str:
    return output_path + ".manifest.json"


def write_manifest(manifest: RunManifest) -> str:
    path = manifest_path_for(manifest.output_path)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(asdict(manifest), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def load_manifest(path: str) -> RunManifest:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    return RunManifest(**data)


def manifest_for_file(path: str) -> RunManifest | None:
    """The sidecar manifest of path, if present and well-formed."""
    mpath = manifest_path_for(path)
    if not os.path.exists(mpath):
        return None
    try:
        return load_manifest(mpath)
    except (json.JSONDecodeError, TypeError, OSError):
        return None
