"""Binary model file.

Layout (all integers little-endian)::

    b"WVC1" | u32 version | u64 payload length | payload | u32 CRC32

The CRC covers everything before it.  The payload is a sequence of
u64-length-prefixed sections: config (JSON), bank, mask, features, hists,
labels (UTF-8, one per line).  Floats are little-endian float64.
"""

from __future__ import annotations

import io
import json
import os
import struct
import zlib
from pathlib import Path

import numpy as np

from .classify import FORMAT_VERSION, FeatureOptions, NNModel
from .errors import DataError
from .patches import Patch, PatchBank
from .wavelet import WaveletConfig

MAGIC = b"WVC1"
_HEADER = struct.Struct("<4sIQ")
_CRC = struct.Struct("<I")
_PATCH_HEAD = struct.Struct("<IqIII")


class ModelFormatError(DataError):
    pass


class BadMagicError(ModelFormatError):
    pass


class UnsupportedVersionError(ModelFormatError):
    pass


class TruncatedModelError(ModelFormatError):
    pass


class ChecksumMismatchError(ModelFormatError):
    pass


def _f64(a) -> bytes:
    return np.ascontiguousarray(a, dtype="<f8").tobytes()


def _matrix(a) -> bytes:
    if a is None:
        return struct.pack("<II", 0, 0)
    a = np.asarray(a)
    return struct.pack("<II", *a.shape) + _f64(a)


def _config_bytes(model: NNModel) -> bytes:
    cfg = {
        "levels": model.wavelet.levels,
        "epsilon": model.wavelet.epsilon,
        "hist_bins": model.options.hist_bins,
        "hist_weight": model.options.hist_weight,
        "periodic": model.options.periodic,
        "rng_seed": model.bank.rng_seed,
    }
    return json.dumps(cfg, sort_keys=True, separators=(",", ":")).encode("utf-8")


def _bank_bytes(bank: PatchBank) -> bytes:
    out = io.BytesIO()
    out.write(struct.pack("<I", len(bank)))
    for p in bank.patches:
        out.write(_PATCH_HEAD.pack(p.side, *p.source))
        out.write(_f64(p.values))
    if bank.variances is None:
        out.write(b"\x00")
    else:
        out.write(b"\x01" + _f64(bank.variances))
    return out.getvalue()


def dumps(model: NNModel) -> bytes:
    for lab in model.labels:
        if "\n" in lab or "\r" in lab:
            raise ValueError(f"label {lab!r} contains a line break")
    sections = [
        _config_bytes(model),
        _bank_bytes(model.bank),
        model.bank.selection.astype(np.uint8).tobytes(),
        _matrix(model.train_features),
        _matrix(model.train_hists),
        "\n".join(model.labels).encode("utf-8"),
    ]
    payload = b"".join(struct.pack("<Q", len(s)) + s for s in sections)
    body = _HEADER.pack(MAGIC, FORMAT_VERSION, len(payload)) + payload
    return body + _CRC.pack(zlib.crc32(body))


def save_model(model: NNModel, path) -> None:
    data = dumps(model)
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


class _Reader:
    def __init__(self, buf: bytes):
        self.buf = memoryview(buf)
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise ModelFormatError("section overruns its container")
        out = bytes(self.buf[self.pos : self.pos + n])
        self.pos += n
        return out

    def unpack(self, st: struct.Struct):
        return st.unpack(self.take(st.size))

    def f64(self, count: int) -> np.ndarray:
        return np.frombuffer(self.take(8 * count), dtype="<f8").astype(np.float64)

    def done(self) -> bool:
        return self.pos == len(self.buf)


def _read_matrix(r: _Reader):
    rows, cols = r.unpack(struct.Struct("<II"))
    if rows == 0 and cols == 0:
        return None
    return r.f64(rows * cols).reshape(rows, cols)


def loads(data: bytes, source: str = "<bytes>") -> NNModel:
    if len(data) < _HEADER.size:
        raise TruncatedModelError(f"{source}: file too short for a model header ({len(data)} bytes)")
    magic, version, length = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise BadMagicError(f"{source}: bad magic {magic!r}, expected {MAGIC!r}")
    if version != FORMAT_VERSION:
        raise UnsupportedVersionError(
            f"{source}: unsupported model format version {version} (this build reads version {FORMAT_VERSION})"
        )
    expected = _HEADER.size + length + _CRC.size
    if len(data) < expected:
        raise TruncatedModelError(f"{source}: truncated model file ({len(data)} of {expected} bytes)")
    if len(data) > expected:
        raise ModelFormatError(f"{source}: {len(data) - expected} trailing bytes after model")
    body = data[: -_CRC.size]
    (crc,) = _CRC.unpack_from(data, len(body))
    if zlib.crc32(body) != crc:
        raise ChecksumMismatchError(f"{source}: checksum mismatch")
    try:
        return _parse_payload(_Reader(body[_HEADER.size :]))
    except (ValueError, KeyError, struct.error) as exc:
        if isinstance(exc, ModelFormatError):
            raise
        raise ModelFormatError(f"{source}: malformed model payload ({exc})") from exc


def _parse_payload(outer: _Reader) -> NNModel:
    sections = []
    while not outer.done():
        (n,) = outer.unpack(struct.Struct("<Q"))
        sections.append(outer.take(n))
    if len(sections) != 6:
        raise ModelFormatError(f"expected 6 sections, found {len(sections)}")
    cfg_raw, bank_raw, mask_raw, feat_raw, hist_raw, label_raw = sections
    cfg = json.loads(cfg_raw.decode("utf-8"))

    r = _Reader(bank_raw)
    (count,) = r.unpack(struct.Struct("<I"))
    patches = []
    for _ in range(count):
        side, img_id, level, row, col = r.unpack(_PATCH_HEAD)
        vals = r.f64(side * side * 3).reshape(side, side, 3)
        patches.append(Patch(side, vals, (img_id, level, row, col)))
    variances = r.f64(count) if r.take(1) == b"\x01" else None
    mask = np.frombuffer(mask_raw, dtype=np.uint8).astype(bool)
    bank = PatchBank(tuple(patches), mask, int(cfg["rng_seed"]), variances)

    features = _read_matrix(_Reader(feat_raw))
    hists = _read_matrix(_Reader(hist_raw))
    text = label_raw.decode("utf-8")
    labels = tuple(text.split("\n")) if text else ()
    wavelet = WaveletConfig(int(cfg["levels"]), float(cfg["epsilon"]))
    opts = FeatureOptions(int(cfg["hist_bins"]), float(cfg["hist_weight"]), bool(cfg["periodic"]))
    return NNModel(bank, features, labels, hists, wavelet, opts)


def load_model(path) -> NNModel:
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise DataError(f"{path}: cannot read model ({exc.strerror})") from exc
    return loads(data, str(path))
