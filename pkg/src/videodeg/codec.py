"""Compression artifacts: JPEG round trip and block-DCT video coding.

Neither path emits a bitstream. Entropy coding is lossless, so the pixels
only depend on the transform and quantization stages implemented here.
"""

from __future__ import annotations

import math
import os
import shutil
import subprocess
import tempfile
from dataclasses import asdict, dataclass

import numpy as np

ENCODER_ENV = "VIDEODEG_ENCODER"
EXTERNAL_CODECS = ("libx264", "h264", "mpeg4")
QP_MIN, QP_MAX = 8, 51

# ITU-T T.81 Annex K, tables K.1 and K.2
BASE_LUMA = np.array(
    [
        [16, 11, 10, 16, 24, 40, 51, 61],
        [12, 12, 14, 19, 26, 58, 60, 55],
        [14, 13, 16, 24, 40, 57, 69, 56],
        [14, 17, 22, 29, 51, 87, 80, 62],
        [18, 22, 37, 56, 68, 109, 103, 77],
        [24, 35, 55, 64, 81, 104, 113, 92],
        [49, 64, 78, 87, 103, 121, 120, 101],
        [72, 92, 95, 98, 112, 100, 103, 99],
    ],
    dtype=np.int64,
)
BASE_CHROMA = np.full((8, 8), 99, dtype=np.int64)
BASE_CHROMA[:4, :4] = [
    [17, 18, 24, 47],
    [18, 21, 26, 66],
    [24, 26, 56, 99],
    [47, 66, 99, 99],
]


class CodecEnvironmentError(RuntimeError):
    """The external encoder is not configured or could not run."""


class IntegrityError(RuntimeError):
    """An external tool returned frames that do not match the input clip."""


def _dct_matrix(n: int = 8) -> np.ndarray:
    k = np.arange(n)[:, None]
    i = np.arange(n)[None, :]
    m = np.cos(np.pi * (2 * i + 1) * k / (2 * n)) * math.sqrt(2.0 / n)
    m[0] /= math.sqrt(2.0)
    return m


DCT8 = _dct_matrix()


def _blocks(plane: np.ndarray) -> np.ndarray:
    h, w = plane.shape
    return plane.reshape(h // 8, 8, w // 8, 8).transpose(0, 2, 1, 3)


def _unblocks(blocks: np.ndarray) -> np.ndarray:
    bh, bw = blocks.shape[:2]
    return blocks.transpose(0, 2, 1, 3).reshape(bh * 8, bw * 8)


def block_dct(plane: np.ndarray) -> np.ndarray:
    """Orthonormal 8x8 DCT-II of a plane whose sides are multiples of 8."""
    return DCT8 @ _blocks(plane) @ DCT8.T


def block_idct(coefs: np.ndarray) -> np.ndarray:
    return _unblocks(DCT8.T @ coefs @ DCT8)


def _pad_to(plane: np.ndarray, mult: int) -> np.ndarray:
    h, w = plane.shape
    ph, pw = (-h) % mult, (-w) % mult
    if ph == 0 and pw == 0:
        return plane
    return np.pad(plane, ((0, ph), (0, pw)), mode="edge")


# BT.601 full range, 0-255 scale
def rgb_to_ycbcr(rgb: np.ndarray) -> np.ndarray:
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    y = 0.299 * r + 0.587 * g + 0.114 * b
    cb = 128.0 - 0.168736 * r - 0.331264 * g + 0.5 * b
    cr = 128.0 + 0.5 * r - 0.418688 * g - 0.081312 * b
    return np.stack([y, cb, cr], axis=-1)


def ycbcr_to_rgb(ycc: np.ndarray) -> np.ndarray:
    y, cb, cr = ycc[..., 0], ycc[..., 1] - 128.0, ycc[..., 2] - 128.0
    r = y + 1.402 * cr
    g = y - 0.344136 * cb - 0.714136 * cr
    b = y + 1.772 * cb
    return np.stack([r, g, b], axis=-1)


def derive_quant_tables(quality: int) -> tuple[np.ndarray, np.ndarray]:
    """IJG quality scaling of the Annex K tables.

    The scale factor uses integer division like libjpeg's ``jpeg_quality_scaling``,
    so the tables match what real encoders write.
    """
    if isinstance(quality, bool) or not isinstance(quality, (int, np.integer)) or not 1 <= quality <= 100:
        raise ValueError(f"JPEG quality must be an integer in [1, 100], got {quality!r}")
    q = int(quality)
    scale = 5000 // q if q < 50 else 200 - 2 * q
    return tuple(np.clip((base * scale + 50) // 100, 1, 255) for base in (BASE_LUMA, BASE_CHROMA))


@dataclass(frozen=True)
class JpegSpec:
    quality: int
    chroma_subsampling: str = "4:2:0"

    def __post_init__(self):
        if self.chroma_subsampling not in ("4:4:4", "4:2:0"):
            raise ValueError(f"unsupported chroma subsampling {self.chroma_subsampling!r}")
        derive_quant_tables(self.quality)

    def to_dict(self) -> dict:
        return asdict(self)


def _quantize_plane(plane: np.ndarray, table: np.ndarray) -> np.ndarray:
    h, w = plane.shape
    padded = _pad_to(plane - 128.0, 8)
    coefs = block_dct(padded)
    coefs = np.rint(coefs / table) * table
    return block_idct(coefs)[:h, :w] + 128.0


def jpeg_roundtrip(frame: np.ndarray, spec: JpegSpec) -> np.ndarray:
    frame = np.asarray(frame, dtype=np.float64)
    h, w = frame.shape[:2]
    luma_q, chroma_q = derive_quant_tables(spec.quality)
    ycc = rgb_to_ycbcr(frame * 255.0)
    out = np.empty_like(ycc)
    out[..., 0] = _quantize_plane(ycc[..., 0], luma_q)
    for c in (1, 2):
        plane = ycc[..., c]
        if spec.chroma_subsampling == "4:2:0":
            even = _pad_to(plane, 2)
            small = even.reshape(even.shape[0] // 2, 2, even.shape[1] // 2, 2).mean(axis=(1, 3))
            small = _quantize_plane(small, chroma_q)
            plane = np.repeat(np.repeat(small, 2, axis=0), 2, axis=1)[:h, :w]
        else:
            plane = _quantize_plane(plane, chroma_q)
        out[..., c] = plane
    return np.clip(ycbcr_to_rgb(out) / 255.0, 0.0, 1.0)


def blockiness(frame: np.ndarray, period: int = 8) -> float:
    """Mean |step| across block boundaries minus mean |step| elsewhere.

    Steps are taken between horizontally and vertically adjacent luma samples.
    """
    frame = np.asarray(frame, dtype=np.float64)
    y = frame @ np.array([0.299, 0.587, 0.114]) if frame.ndim == 3 else frame
    on, off = [], []
    for g in (np.abs(np.diff(y, axis=1)), np.abs(np.diff(y, axis=0)).T):
        # g[:, j] is the step between samples j and j + 1
        boundary = (np.arange(g.shape[1]) + 1) % period == 0
        on.append(g[:, boundary].ravel())
        off.append(g[:, ~boundary].ravel())
    return float(np.concatenate(on).mean() - np.concatenate(off).mean())


@dataclass(frozen=True)
class VideoCodecSpec:
    backend: str = "builtin"
    codec_name: str = "libx264"
    bitrate: float = 1e5
    qp: int | None = None

    def __post_init__(self):
        if self.backend not in ("builtin", "external"):
            raise ValueError(f"unknown video backend {self.backend!r}")
        if self.backend == "external" and self.codec_name not in EXTERNAL_CODECS:
            raise ValueError(f"codec must be one of {EXTERNAL_CODECS}, got {self.codec_name!r}")
        if not self.bitrate > 0:
            raise ValueError("bitrate must be positive")
        if self.qp is None:
            object.__setattr__(self, "qp", qp_from_bitrate(self.bitrate))
        elif not QP_MIN <= self.qp <= QP_MAX:
            raise ValueError(f"qp must lie in [{QP_MIN}, {QP_MAX}]")

    def to_dict(self) -> dict:
        return asdict(self)


def qp_from_bitrate(bitrate: float) -> int:
    """Monotone bitrate map, calibrated for 256x256 at 24 fps."""
    qp = round(51 - 8 * math.log2(bitrate / 1e4))
    return int(min(max(qp, QP_MIN), QP_MAX))


def qp_step(qp: int) -> float:
    """Quantizer step on the 0-255 scale; doubles every 6 qp, 1.0 at the minimum."""
    return 2.0 ** ((qp - QP_MIN) / 6.0)


# rounding offsets: plain rounding for intra, dead zone for inter residuals
INTRA_OFFSET = 0.5
INTER_OFFSET = 1.0 / 6.0


def _code_planes(planes: np.ndarray, step: float, offset: float) -> np.ndarray:
    out = np.empty_like(planes)
    for c in range(planes.shape[-1]):
        coefs = block_dct(planes[..., c])
        levels = np.sign(coefs) * np.floor(np.abs(coefs) / step + offset)
        out[..., c] = block_idct(levels * step)
    return out


def _builtin_compress(frames: np.ndarray, qp: int) -> np.ndarray:
    t, h, w, _ = frames.shape
    step = qp_step(qp)
    out = np.empty_like(frames)
    recon = None
    for i in range(t):
        ycc = rgb_to_ycbcr(frames[i] * 255.0)
        ycc = np.stack([_pad_to(ycc[..., c], 8) for c in range(3)], axis=-1)
        if recon is None:
            recon = _code_planes(ycc - 128.0, step, INTRA_OFFSET) + 128.0
        else:
            # prediction from the co-located previous reconstruction, no motion search
            recon = recon + _code_planes(ycc - recon, step, INTER_OFFSET)
        out[i] = np.clip(ycbcr_to_rgb(recon[:h, :w]) / 255.0, 0.0, 1.0)
    return out


# BT.601 limited range 4:2:0, the raw format exchanged with external tools
def rgb_to_yuv420(frame: np.ndarray) -> bytes:
    h, w = frame.shape[:2]
    ycc = rgb_to_ycbcr(np.clip(frame, 0.0, 1.0) * 255.0)
    y = 16.0 + ycc[..., 0] * (219.0 / 255.0)
    planes = [y]
    for c in (1, 2):
        ch = 128.0 + (ycc[..., c] - 128.0) * (224.0 / 255.0)
        ch = ch.reshape(h // 2, 2, w // 2, 2).mean(axis=(1, 3))
        planes.append(ch)
    return b"".join(np.clip(np.rint(p), 0, 255).astype(np.uint8).tobytes() for p in planes)


def yuv420_to_rgb(buf: bytes, height: int, width: int) -> np.ndarray:
    n = height * width
    data = np.frombuffer(buf, dtype=np.uint8).astype(np.float64)
    y = data[:n].reshape(height, width)
    cb = data[n : n + n // 4].reshape(height // 2, width // 2)
    cr = data[n + n // 4 :].reshape(height // 2, width // 2)
    up = lambda p: np.repeat(np.repeat(p, 2, axis=0), 2, axis=1)  # noqa: E731
    ycc = np.stack(
        [
            (y - 16.0) * (255.0 / 219.0),
            128.0 + (up(cb) - 128.0) * (255.0 / 224.0),
            128.0 + (up(cr) - 128.0) * (255.0 / 224.0),
        ],
        axis=-1,
    )
    return np.clip(ycbcr_to_rgb(ycc) / 255.0, 0.0, 1.0)


def find_encoder() -> str:
    exe = os.environ.get(ENCODER_ENV)
    if not exe:
        raise CodecEnvironmentError(f"external video backend requires ${ENCODER_ENV} to name an encoder executable")
    path = shutil.which(exe)
    if path is None:
        raise CodecEnvironmentError(f"${ENCODER_ENV}={exe!r} is not an executable")
    return path


def external_commands(exe: str, spec: VideoCodecSpec, height: int, width: int, workdir: str) -> list[list[str]]:
    encoded = os.path.join(workdir, "encoded.mkv")
    encode = [
        exe, "-y", "-loglevel", "error",
        "-f", "rawvideo", "-pix_fmt", "yuv420p", "-s", f"{width}x{height}", "-r", "24",
        "-i", "-",
        "-c:v", spec.codec_name, "-b:v", str(int(round(spec.bitrate))),
        encoded,
    ]  # fmt: skip
    decode = [
        exe, "-loglevel", "error", "-i", encoded,
        "-f", "rawvideo", "-pix_fmt", "yuv420p", "-",
    ]  # fmt: skip
    return [encode, decode]


def _external_compress(frames: np.ndarray, spec: VideoCodecSpec) -> np.ndarray:
    exe = find_encoder()
    t, h, w, _ = frames.shape
    # yuv420p needs even sides; pad by edge replication and crop afterwards
    ph, pw = h + h % 2, w + w % 2
    padded = np.pad(frames, ((0, 0), (0, ph - h), (0, pw - w), (0, 0)), mode="edge")
    payload = b"".join(rgb_to_yuv420(f) for f in padded)
    frame_bytes = ph * pw * 3 // 2
    with tempfile.TemporaryDirectory(prefix="videodeg-") as tmp:
        encode, decode = external_commands(exe, spec, ph, pw, tmp)
        try:
            subprocess.run(encode, input=payload, capture_output=True, check=True)
            result = subprocess.run(decode, capture_output=True, check=True)
        except (OSError, subprocess.CalledProcessError) as exc:
            detail = getattr(exc, "stderr", b"") or b""
            raise CodecEnvironmentError(f"external encoder failed: {exc}; {detail.decode(errors='replace')[:500]}") from exc
    data = result.stdout
    if len(data) != t * frame_bytes:
        raise IntegrityError(f"external tool returned {len(data)} bytes, expected {t} frames of {pw}x{ph} ({t * frame_bytes} bytes)")
    out = np.stack([yuv420_to_rgb(data[i * frame_bytes : (i + 1) * frame_bytes], ph, pw) for i in range(t)])
    return out[:, :h, :w]


def video_compress(frames: np.ndarray, spec: VideoCodecSpec) -> np.ndarray:
    """Compress a ``(T, H, W, 3)`` clip and return the decoded frames."""
    frames = np.asarray(frames, dtype=np.float64)
    if frames.ndim != 4 or frames.shape[0] < 1:
        raise ValueError("video compression needs a nonempty (T, H, W, 3) clip")
    if spec.backend == "external":
        return _external_compress(frames, spec)
    return _builtin_compress(frames, spec.qp)
