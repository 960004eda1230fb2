"""On-disk contract feature database.

One binary record file per contract plus a text manifest. Record layout:
magic ``CLFR``, version, row/column header, row-major little-endian float64
payload, then a footer with flags, optional per-vulnerability labels, the
exact contract name and an optional source path. Writes go through a
temp-file-then-rename so a record is either fully visible or absent.
"""
from __future__ import annotations

import hashlib
import re
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DuplicateRecord, RecordNotFound
from .fusion import ContractFeatures

_MAGIC = b"CLFR"
_VERSION = 1
_MANIFEST = "manifest.tsv"

#: Canonical label order in record files and manifests.
VULNERABILITIES = ("reentrancy", "access_control", "external_call", "delegatecall")


@dataclass
class StoreRecord:
    contract_name: str
    features: ContractFeatures
    labels: dict[str, bool] | None = None
    source_path: str | None = None


def _encode_record(record: StoreRecord) -> bytes:
    mat = record.features.F
    rows, cols = mat.shape
    out = struct.pack("<4sIII", _MAGIC, _VERSION, rows, cols)
    out += np.ascontiguousarray(mat, dtype="<f8").tobytes()
    flags = 1 if "no_comments" in record.features.flags else 0
    out += struct.pack("<B", flags)
    if record.labels is None:
        out += struct.pack("<B", 0)
    else:
        out += struct.pack("<B", 1)
        out += bytes(1 if record.labels.get(v, False) else 0 for v in VULNERABILITIES)
    for text in (record.contract_name, record.source_path or ""):
        data = text.encode("utf-8")
        out += struct.pack("<I", len(data)) + data
    return out


def _decode_record(raw: bytes) -> StoreRecord:
    magic, version, rows, cols = struct.unpack_from("<4sIII", raw, 0)
    if magic != _MAGIC or version != _VERSION:
        raise RecordNotFound("not a contractlens feature record")
    cursor = struct.calcsize("<4sIII")
    mat = np.frombuffer(raw, dtype="<f8", count=rows * cols, offset=cursor)
    mat = mat.reshape(rows, cols).astype(np.float64)
    cursor += 8 * rows * cols
    (flags,) = struct.unpack_from("<B", raw, cursor)
    cursor += 1
    (has_labels,) = struct.unpack_from("<B", raw, cursor)
    cursor += 1
    labels = None
    if has_labels:
        values = raw[cursor:cursor + len(VULNERABILITIES)]
        cursor += len(VULNERABILITIES)
        labels = {v: bool(b) for v, b in zip(VULNERABILITIES, values)}
    texts = []
    for _ in range(2):
        (n,) = struct.unpack_from("<I", raw, cursor)
        cursor += 4
        texts.append(raw[cursor:cursor + n].decode("utf-8"))
        cursor += n
    name, source_path = texts
    feature_flags = {"no_comments"} if flags & 1 else set()
    features = ContractFeatures(contract_name=name, f_cfg=mat[0], f_ast=mat[1],
                                f_com=mat[2], flags=feature_flags)
    return StoreRecord(contract_name=name, features=features, labels=labels,
                       source_path=source_path or None)


def _record_filename(name: str) -> str:
    safe = re.sub(r"[^A-Za-z0-9._-]", "_", name)
    digest = hashlib.blake2b(name.encode("utf-8"), digest_size=4).hexdigest()
    return f"{safe}-{digest}.rec"


def _labels_field(labels: dict[str, bool] | None) -> str:
    if labels is None:
        return "-"
    return ",".join(f"{v}={int(labels.get(v, False))}" for v in VULNERABILITIES)


def _parse_labels_field(text: str) -> dict[str, bool] | None:
    if text == "-":
        return None
    out = {}
    for part in text.split(","):
        key, _, value = part.partition("=")
        out[key] = value == "1"
    return out


class FeatureStore:
    """Single-writer, multi-reader store rooted at a directory."""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self._index: dict[str, tuple[str, dict[str, bool] | None]] = {}
        self._load_manifest()

    @property
    def manifest_path(self) -> Path:
        return self.directory / _MANIFEST

    def _load_manifest(self):
        self._index.clear()
        if not self.manifest_path.exists():
            return
        for line in self.manifest_path.read_text().splitlines():
            if not line.strip():
                continue
            name, filename, labels = line.split("\t")
            self._index[name] = (filename, _parse_labels_field(labels))

    def _write_manifest(self):
        lines = [f"{name}\t{filename}\t{_labels_field(labels)}"
                 for name, (filename, labels) in sorted(self._index.items())]
        tmp = self.manifest_path.with_suffix(".tmp")
        tmp.write_text("\n".join(lines) + ("\n" if lines else ""))
        tmp.replace(self.manifest_path)

    def __len__(self) -> int:
        return len(self._index)

    def names(self) -> list[str]:
        return sorted(self._index)

    def put(self, record: StoreRecord, overwrite: bool = False):
        if record.contract_name in self._index and not overwrite:
            raise DuplicateRecord(record.contract_name)
        filename = _record_filename(record.contract_name)
        payload = _encode_record(record)
        target = self.directory / filename
        tmp = target.with_suffix(".tmp")
        tmp.write_bytes(payload)
        tmp.replace(target)
        self._index[record.contract_name] = (filename, record.labels)
        self._write_manifest()

    def get(self, name: str) -> StoreRecord:
        entry = self._index.get(name)
        if entry is None:
            raise RecordNotFound(name)
        raw = (self.directory / entry[0]).read_bytes()
        return _decode_record(raw)

    def scan(self):
        """Records in deterministic order (contract name ascending)."""
        for name in sorted(self._index):
            yield self.get(name)
