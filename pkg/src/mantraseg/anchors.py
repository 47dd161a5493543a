"""Label anchor matrices and their on-disk formats.

An anchor is the latent-space embedding of one label name; the matrix of
all requested labels is what point embeddings are classified against.
Two interchangeable file formats exist so anchors exported from a real
pretrained text model can be imported:

* text:   header line ``mantra-anchors v1 <C> <D>``, then one line per
          label: the quoted name followed by D decimal floats.
* binary: 16-byte header (magic ``MANTRANC``, uint32 C, uint32 D), then
          C*D little-endian float32 values, then a uint32-length-prefixed
          UTF-8 JSON array of the label names.

Both round-trip bit-exactly for values representable at their precision.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from .errors import DimensionMismatch, ParseError, ZeroVector

_TEXT_HEADER = "mantra-anchors v1"
_BIN_MAGIC = b"MANTRANC"
_NORM_EPS = 1e-12


@dataclass
class AnchorMatrix:
    """Anchors for an ordered list of labels; row i embeds labels[i]."""

    labels: tuple[str, ...]
    T: torch.Tensor  # (C, D)

    def __post_init__(self):
        if self.T.ndim != 2 or self.T.shape[0] != len(self.labels):
            raise DimensionMismatch(
                f"anchor matrix {tuple(self.T.shape)} does not match {len(self.labels)} labels"
            )
        with torch.no_grad():
            if not torch.isfinite(self.T).all():
                raise ParseError("anchor matrix contains non-finite entries")
            norms = torch.linalg.vector_norm(self.T, dim=1)
            if (norms < _NORM_EPS).any():
                bad = int((norms < _NORM_EPS).nonzero()[0, 0])
                raise ZeroVector(f"anchor for {self.labels[bad]!r} is the zero vector")

    @property
    def dim(self) -> int:
        return int(self.T.shape[1])

    def __len__(self) -> int:
        return len(self.labels)


def write_anchors(matrix: AnchorMatrix, path: str | Path, binary: bool = False) -> None:
    path = Path(path)
    arr = matrix.T.detach().cpu().numpy()
    if binary:
        blob = json.dumps(list(matrix.labels)).encode("utf-8")
        with open(path, "wb") as fh:
            fh.write(struct.pack("<8sII", _BIN_MAGIC, len(matrix), matrix.dim))
            fh.write(arr.astype("<f4").tobytes())
            fh.write(struct.pack("<I", len(blob)))
            fh.write(blob)
        return
    lines = [f"{_TEXT_HEADER} {len(matrix)} {matrix.dim}"]
    for label, row in zip(matrix.labels, arr):
        lines.append(f'"{label}" ' + " ".join(repr(float(v)) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_precomputed_anchors(path: str | Path) -> AnchorMatrix:
    """Read an anchor file (either format, detected by its magic)."""
    raw = Path(path).read_bytes()
    if not raw.strip():
        raise ParseError(f"{path}: empty anchor file")
    if raw[:8] == _BIN_MAGIC:
        return _parse_binary(raw, str(path))
    return _parse_text(raw, str(path))


def _parse_binary(raw: bytes, path: str) -> AnchorMatrix:
    if len(raw) < 16:
        raise ParseError(f"{path}: truncated binary header")
    magic, c, d = struct.unpack_from("<8sII", raw, 0)
    body = 16 + 4 * c * d
    if len(raw) < body + 4:
        raise ParseError(f"{path}: truncated binary payload")
    mat = np.frombuffer(raw, dtype="<f4", count=c * d, offset=16).reshape(c, d)
    (blob_len,) = struct.unpack_from("<I", raw, body)
    try:
        labels = json.loads(raw[body + 4 : body + 4 + blob_len].decode("utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ParseError(f"{path}: bad label block: {exc}") from exc
    if len(labels) != c:
        raise ParseError(f"{path}: header says {c} labels, block has {len(labels)}")
    return AnchorMatrix(tuple(labels), torch.from_numpy(mat.astype(np.float64)))


def _parse_text(raw: bytes, path: str) -> AnchorMatrix:
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"{path}: not UTF-8: {exc}") from exc
    lines = [ln for ln in text.splitlines() if ln.strip()]
    head = lines[0].split()
    if len(head) != 4 or " ".join(head[:2]) != _TEXT_HEADER:
        raise ParseError(f"{path}: bad header {lines[0]!r}")
    try:
        c, d = int(head[2]), int(head[3])
    except ValueError as exc:
        raise ParseError(f"{path}: bad counts in header") from exc
    if len(lines) - 1 != c:
        raise ParseError(f"{path}: header says {c} rows, file has {len(lines) - 1}")
    labels, rows = [], []
    for ln in lines[1:]:
        if not ln.startswith('"'):
            raise ParseError(f"{path}: row does not start with a quoted label: {ln[:40]!r}")
        end = ln.find('"', 1)
        if end < 0:
            raise ParseError(f"{path}: unterminated label quote: {ln[:40]!r}")
        labels.append(ln[1:end])
        try:
            row = [float(v) for v in ln[end + 1 :].split()]
        except ValueError as exc:
            raise ParseError(f"{path}: bad float in row for {labels[-1]!r}") from exc
        if len(row) != d:
            raise DimensionMismatch(
                f"{path}: row for {labels[-1]!r} has {len(row)} values, expected {d}"
            )
        rows.append(row)
    return AnchorMatrix(tuple(labels), torch.tensor(rows, dtype=torch.float64))
