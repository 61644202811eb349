"""Clip I/O: directories of 8-bit PNG frames and 8-bit 4:2:0 Y4M files."""

from __future__ import annotations

import re
from pathlib import Path
from typing import Callable

import numpy as np
from PIL import Image

from .codec import rgb_to_yuv420, yuv420_to_rgb
from .core import Clip

PNG_SUFFIXES = (".png",)


def to_uint8(frame: np.ndarray) -> np.ndarray:
    # np.rint rounds half to even
    return np.rint(np.clip(frame, 0.0, 1.0) * 255.0).astype(np.uint8)


def read_png(path: str | Path) -> np.ndarray:
    with Image.open(path) as im:
        if im.mode not in ("RGB", "RGBA", "L", "P", "LA"):
            raise ValueError(f"{path}: unsupported PNG mode {im.mode} (8-bit RGB expected)")
        arr = np.asarray(im.convert("RGB"), dtype=np.float64)
    return arr / 255.0


def write_png(frame: np.ndarray, path: str | Path) -> None:
    Image.fromarray(to_uint8(frame), mode="RGB").save(path, format="PNG", compress_level=6)


def frame_files(directory: str | Path) -> list[Path]:
    return sorted(p for p in Path(directory).iterdir() if p.suffix.lower() in PNG_SUFFIXES and p.is_file())


def read_png_dir(directory: str | Path, fps: float | None = None) -> Clip:
    files = frame_files(directory)
    if not files:
        raise FileNotFoundError(f"no PNG frames in {directory}")
    return Clip([read_png(f) for f in files], fps)


def write_png_dir(clip: Clip, directory: str | Path, names: list[str] | None = None) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    names = names or [f"{i:05d}.png" for i in range(len(clip))]
    if len(names) != len(clip):
        raise ValueError("frame names and clip length differ")
    paths = []
    for frame, name in zip(clip.frames, names):
        path = directory / name
        write_png(frame, path)
        paths.append(path)
    return paths


_Y4M_MAGIC = b"YUV4MPEG2"


def read_y4m(path: str | Path) -> Clip:
    data = Path(path).read_bytes()
    end = data.find(b"\n")
    if end < 0 or not data.startswith(_Y4M_MAGIC):
        raise ValueError(f"{path}: not a YUV4MPEG2 file")
    params = {tok[:1]: tok[1:] for tok in data[len(_Y4M_MAGIC) : end].split()}
    width, height = int(params[b"W"]), int(params[b"H"])
    colorspace = params.get(b"C", b"420jpeg").decode()
    if not colorspace.startswith("420") or colorspace.endswith(("p10", "p12", "p16")):
        raise ValueError(f"{path}: only 8-bit 4:2:0 Y4M is supported, got C{colorspace}")
    if width % 2 or height % 2:
        raise ValueError(f"{path}: 4:2:0 frames need even dimensions")
    fps = None
    if b"F" in params:
        m = re.fullmatch(rb"(\d+):(\d+)", params[b"F"])
        if m and int(m.group(2)):
            fps = int(m.group(1)) / int(m.group(2))
    frame_bytes = width * height * 3 // 2
    frames = []
    pos = end + 1
    while pos < len(data):
        nl = data.find(b"\n", pos)
        if nl < 0 or not data.startswith(b"FRAME", pos):
            raise ValueError(f"{path}: corrupt frame header at byte {pos}")
        start = nl + 1
        chunk = data[start : start + frame_bytes]
        if len(chunk) != frame_bytes:
            raise ValueError(f"{path}: truncated frame {len(frames)}")
        frames.append(yuv420_to_rgb(chunk, height, width))
        pos = start + frame_bytes
    if not frames:
        raise ValueError(f"{path}: no frames")
    return Clip(frames, fps)


def write_y4m(clip: Clip, path: str | Path, fps: int = 24) -> None:
    if clip.height % 2 or clip.width % 2:
        raise ValueError("4:2:0 output needs even dimensions")
    header = f"YUV4MPEG2 W{clip.width} H{clip.height} F{fps}:1 Ip A1:1 C420jpeg\n".encode()
    with open(path, "wb") as fh:
        fh.write(header)
        for frame in clip.frames:
            fh.write(b"FRAME\n")
            fh.write(rgb_to_yuv420(frame))


class ClipEntry:
    """A named clip on disk, loaded lazily."""

    def __init__(self, name: str, path: Path):
        self.name = name
        self.path = path

    @property
    def is_y4m(self) -> bool:
        return self.path.is_file()

    def frame_names(self, n: int) -> list[str]:
        if self.is_y4m:
            return [f"{i:05d}.png" for i in range(n)]
        return [p.name for p in frame_files(self.path)]

    def load(self) -> Clip:
        return read_y4m(self.path) if self.is_y4m else read_png_dir(self.path)

    def __repr__(self) -> str:
        return f"ClipEntry({self.name!r}, {str(self.path)!r})"


def discover_clips(root: str | Path) -> list[ClipEntry]:
    """Clips under ``root``: subdirectories holding PNG frames and ``*.y4m`` files.

    A directory that directly holds PNG frames is a single clip named after it.
    """
    root = Path(root)
    if not root.is_dir():
        raise FileNotFoundError(f"{root} is not a directory")
    entries = []
    for p in sorted(root.iterdir()):
        if p.is_dir() and frame_files(p):
            entries.append(ClipEntry(p.name, p))
        elif p.is_file() and p.suffix.lower() == ".y4m":
            entries.append(ClipEntry(p.stem, p))
    if not entries and frame_files(root):
        entries.append(ClipEntry(root.name, root))
    return entries


def loader(entry: ClipEntry) -> Callable[[], Clip]:
    return entry.load
