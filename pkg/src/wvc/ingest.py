"""Image and audio ingestion: decoding, resizing, tiling, resolution
simulation and WAV log-spectrograms."""

from __future__ import annotations

import csv
import math
import wave
from dataclasses import dataclass
from pathlib import Path

import cv2
import numpy as np
from scipy import ndimage

from .errors import DataError

LUMA = np.array([0.299, 0.587, 0.114])
MIN_DOWNSAMPLED_SIDE = 16


@dataclass(frozen=True)
class Image:
    """Grayscale image, row-major ``(height, width)`` float64 data in [0, 1]."""

    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 2 or data.shape[0] < 1 or data.shape[1] < 1:
            raise ValueError(f"image data must be a non-empty 2-D array, got shape {data.shape}")
        if not np.all(np.isfinite(data)):
            raise ValueError("image data contains non-finite values")
        if data.min() < 0.0 or data.max() > 1.0:
            raise ValueError("image data must lie in [0, 1]")
        object.__setattr__(self, "data", data)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]


# ---------------------------------------------------------------------------
# decoding / encoding


def _pgm_tokens(buf: bytes, count: int, pos: int):
    tokens = []
    n = len(buf)
    while len(tokens) < count:
        while pos < n and buf[pos : pos + 1].isspace():
            pos += 1
        if pos < n and buf[pos : pos + 1] == b"#":
            while pos < n and buf[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < n and not buf[pos : pos + 1].isspace() and buf[pos : pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise ValueError("truncated PGM header")
        tokens.append(buf[start:pos])
    return tokens, pos


def _decode_pgm(buf: bytes) -> np.ndarray:
    magic = buf[:2]
    (w, h, maxval), pos = _pgm_tokens(buf, 3, 2)
    w, h, maxval = int(w), int(h), int(maxval)
    if w < 1 or h < 1 or not 0 < maxval < 65536:
        raise ValueError(f"bad PGM header (width={w}, height={h}, maxval={maxval})")
    if magic == b"P5":
        pos += 1  # single whitespace after maxval
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        if len(buf) - pos < w * h * dtype.itemsize:
            raise ValueError("truncated PGM pixel data")
        vals = np.frombuffer(buf, dtype=dtype, count=w * h, offset=pos).astype(np.float64)
    else:
        toks = buf[pos:].split()
        if len(toks) < w * h:
            raise ValueError("truncated PGM pixel data")
        vals = np.array([int(t) for t in toks[: w * h]], dtype=np.float64)
    if vals.max(initial=0) > maxval:
        raise ValueError("PGM sample exceeds maxval")
    return vals.reshape(h, w) / maxval


def _decode_png(buf: bytes) -> np.ndarray:
    arr = cv2.imdecode(np.frombuffer(buf, dtype=np.uint8), cv2.IMREAD_UNCHANGED)
    if arr is None:
        raise ValueError("corrupt PNG")
    if arr.dtype == np.uint8:
        scale = 255.0
    elif arr.dtype == np.uint16:
        scale = 65535.0
    else:
        raise ValueError(f"unsupported PNG sample type {arr.dtype}")
    arr = arr.astype(np.float64) / scale
    if arr.ndim == 3:
        if arr.shape[2] == 2:  # gray + alpha
            arr = arr[:, :, 0]
        elif arr.shape[2] in (3, 4):
            # OpenCV hands back BGR(A)
            arr = arr[:, :, 2::-1] @ LUMA
        else:
            raise ValueError(f"unsupported PNG channel count {arr.shape[2]}")
    return arr


def decode_grayscale(path) -> Image:
    """Read a PGM (P2/P5) or PNG file as a grayscale :class:`Image`."""
    path = Path(path)
    try:
        buf = path.read_bytes()
    except OSError as exc:
        raise DataError(f"{path}: cannot read file ({exc.strerror})") from exc
    try:
        if buf[:2] in (b"P2", b"P5"):
            data = _decode_pgm(buf)
        elif buf[:8] == b"\x89PNG\r\n\x1a\n":
            data = _decode_png(buf)
        else:
            raise ValueError("unsupported format (expected PGM P2/P5 or PNG)")
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from exc
    return Image(np.clip(data, 0.0, 1.0))


def encode_pgm(img: Image, path, maxval: int = 255) -> None:
    """Write ``img`` as binary PGM, quantized to ``maxval`` levels."""
    q = np.rint(img.data * maxval)
    dtype = ">u2" if maxval > 255 else "u1"
    header = f"P5\n{img.width} {img.height}\n{maxval}\n".encode("ascii")
    Path(path).write_bytes(header + q.astype(dtype).tobytes())


def encode_png(img: Image, path, bits: int = 8) -> None:
    maxval = (1 << bits) - 1
    q = np.rint(img.data * maxval).astype(np.uint16 if bits == 16 else np.uint8)
    ok, enc = cv2.imencode(".png", q)
    if not ok:
        raise DataError(f"{path}: PNG encoding failed")
    Path(path).write_bytes(enc.tobytes())


def save_image(img: Image, path) -> None:
    """Write PNG when the suffix says so, PGM otherwise."""
    if str(path).lower().endswith(".png"):
        encode_png(img, path)
    else:
        encode_pgm(img, path)


# ---------------------------------------------------------------------------
# geometry


def _bilinear_axis(n_in: int, n_out: int):
    # pixel-centre alignment
    src = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
    src = np.clip(src, 0.0, n_in - 1)
    lo = np.floor(src).astype(np.int64)
    hi = np.minimum(lo + 1, n_in - 1)
    return lo, hi, src - lo


def resize_bilinear(data: np.ndarray, height: int, width: int) -> np.ndarray:
    r0, r1, fr = _bilinear_axis(data.shape[0], height)
    c0, c1, fc = _bilinear_axis(data.shape[1], width)
    top = data[r0][:, c0] * (1 - fc) + data[r0][:, c1] * fc
    bot = data[r1][:, c0] * (1 - fc) + data[r1][:, c1] * fc
    return top * (1 - fr)[:, None] + bot * fr[:, None]


def rescale_min_side(img: Image, target: int = 140) -> Image:
    """Bilinear resize so the shorter side equals ``target``, keeping aspect."""
    if target < 16:
        raise ValueError(f"target side must be >= 16, got {target}")
    h, w = img.height, img.width
    if min(h, w) == target:
        return img
    s = target / min(h, w)
    nh = target if h <= w else max(1, int(round(h * s)))
    nw = target if w < h else max(1, int(round(w * s)))
    return Image(np.clip(resize_bilinear(img.data, nh, nw), 0.0, 1.0))


def gaussian_downsample(img: Image, factor: int) -> Image:
    """Blur with sigma = factor/2 (radius ceil(3 sigma), symmetric edges),
    then keep every ``factor``-th pixel starting at 0."""
    if factor < 1:
        raise ValueError(f"factor must be >= 1, got {factor}")
    out_h, out_w = img.height // factor, img.width // factor
    if min(out_h, out_w) < MIN_DOWNSAMPLED_SIDE:
        raise DataError(
            f"downsampled image would be {out_w}x{out_h}, below the "
            f"{MIN_DOWNSAMPLED_SIDE}x{MIN_DOWNSAMPLED_SIDE} minimum"
        )
    sigma = factor / 2.0
    blurred = ndimage.gaussian_filter(img.data, sigma, mode="reflect", radius=math.ceil(3 * sigma))
    sub = blurred[: out_h * factor : factor, : out_w * factor : factor]
    return Image(np.clip(sub, 0.0, 1.0))


def tile(img: Image, side: int = 128) -> list[Image]:
    """Non-overlapping ``side x side`` tiles in row-major order."""
    if img.width < side or img.height < side:
        raise ValueError(f"image {img.width}x{img.height} smaller than tile side {side}")
    return [
        Image(img.data[r : r + side, c : c + side].copy())
        for r in range(0, img.height - side + 1, side)
        for c in range(0, img.width - side + 1, side)
    ]


# ---------------------------------------------------------------------------
# audio


def read_wav_mono16(path) -> tuple[np.ndarray, int]:
    """Return samples scaled to [-1, 1) and the sample rate."""
    path = Path(path)
    try:
        with wave.open(str(path), "rb") as wf:
            channels, width, rate = wf.getnchannels(), wf.getsampwidth(), wf.getframerate()
            frames = wf.readframes(wf.getnframes())
    except (wave.Error, EOFError) as exc:
        raise DataError(f"{path}: corrupt or unsupported WAV ({exc})") from exc
    except OSError as exc:
        raise DataError(f"{path}: cannot read file ({exc.strerror})") from exc
    if channels != 1:
        raise DataError(f"{path}: expected mono audio, found {channels} channels")
    if width != 2:
        raise DataError(f"{path}: expected 16-bit PCM, found {8 * width}-bit samples")
    samples = np.frombuffer(frames[: len(frames) // 2 * 2], dtype="<i2").astype(np.float64) / 32768.0
    return samples, rate


def log_spectrogram(samples: np.ndarray, frame: int = 1024, hop: int = 512) -> np.ndarray:
    """``log(1 + |STFT|)`` with a Hann window; rows are frequency bins
    (row 0 = DC), columns are frames."""
    if frame < 2 or frame & (frame - 1):
        raise ValueError(f"frame must be a power of two, got {frame}")
    if not 1 <= hop <= frame:
        raise ValueError(f"hop must be in [1, frame], got {hop}")
    n_frames = 1 + (len(samples) - frame) // hop if len(samples) >= frame else 0
    if n_frames == 0:
        return np.zeros((frame // 2 + 1, 0))
    idx = np.arange(frame)[None, :] + hop * np.arange(n_frames)[:, None]
    spec = np.fft.rfft(samples[idx] * np.hanning(frame + 1)[:-1], axis=1)
    return np.log1p(np.abs(spec)).T


def wav_to_log_spectrogram(path, frame: int = 1024, hop: int = 512, segment_seconds: float = 5.0) -> list[Image]:
    """Cut a mono PCM-16 WAV into full ``segment_seconds`` pieces and return
    one min-max normalized log-spectrogram image per piece."""
    samples, rate = read_wav_mono16(path)
    seg = int(round(segment_seconds * rate))
    if seg < frame:
        raise ValueError(f"segment of {seg} samples is shorter than one frame ({frame})")
    out = []
    for start in range(0, len(samples) - seg + 1, seg):
        spec = log_spectrogram(samples[start : start + seg], frame, hop)
        lo, hi = spec.min(), spec.max()
        out.append(Image((spec - lo) / (hi - lo) if hi > lo else np.zeros_like(spec)))
    return out


# ---------------------------------------------------------------------------
# manifests


@dataclass(frozen=True)
class ManifestEntry:
    path: Path
    label: str
    split: str


def read_manifest(path) -> list[ManifestEntry]:
    """Parse a ``path,label,split`` CSV; relative paths resolve against the
    manifest's directory."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"{path}: cannot read manifest ({exc.strerror})") from exc
    rows = list(csv.DictReader(text.splitlines()))
    if not rows or set(rows[0].keys()) != {"path", "label", "split"}:
        raise DataError(f"{path}: manifest header must be path,label,split")
    entries, seen = [], set()
    for lineno, row in enumerate(rows, start=2):
        split = (row["split"] or "").strip()
        if split not in ("train", "test"):
            raise DataError(f"{path}:{lineno}: split must be train or test, got {split!r}")
        p = Path(row["path"].strip())
        if not p.is_absolute():
            p = path.parent / p
        if p in seen:
            raise DataError(f"{path}:{lineno}: duplicate path {p}")
        seen.add(p)
        entries.append(ManifestEntry(p, row["label"].strip(), split))
    train_labels = {e.label for e in entries if e.split == "train"}
    missing = sorted({e.label for e in entries if e.split == "test"} - train_labels)
    if missing:
        raise DataError(f"{path}: test labels without training entries: {', '.join(missing)}")
    return entries


def write_manifest(entries, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["path", "label", "split"])
        for e in entries:
            w.writerow([str(e.path), e.label, e.split])
