"""PFM file I/O for depth maps and pointmaps.

Header "Pf" is 1-channel (depth), "PF" is 3-channel (pointmaps). A negative
scale field means little-endian payload. Rows are stored bottom-up.
"""

from __future__ import annotations

import re

import numpy as np

from videonav.geometry import DepthMap, PointMap

_HEADER_RE = re.compile(rb"^(PF|Pf)\s+(\d+)\s+(\d+)\s+([-+0-9.eE]+)\s")


def read_pfm(path) -> np.ndarray:
    """Read a PFM file into a float32 array of shape (h, w) or (h, w, 3)."""
    with open(path, "rb") as fh:
        blob = fh.read()
    match = _HEADER_RE.match(blob)
    if match is None:
        raise ValueError(f"not a PFM file: {path}")
    kind, width, height = match.group(1), int(match.group(2)), int(match.group(3))
    scale = float(match.group(4))
    if scale == 0.0:
        raise ValueError("PFM scale field must be nonzero")
    channels = 3 if kind == b"PF" else 1
    endian = "<" if scale < 0.0 else ">"
    payload = blob[match.end():]
    count = width * height * channels
    data = np.frombuffer(payload, dtype=endian + "f4", count=-1)
    if data.size < count:
        raise ValueError(f"PFM payload truncated: {data.size} of {count} floats")
    data = data[:count]
    shape = (height, width, 3) if channels == 3 else (height, width)
    # Stored bottom-up: flip back to image order.
    return np.flipud(data.reshape(shape)).astype(np.float32, copy=True)


def write_pfm(path, data: np.ndarray, little_endian: bool = True) -> None:
    data = np.asarray(data, dtype=np.float32)
    if data.ndim == 3 and data.shape[2] == 3:
        kind = b"PF"
    elif data.ndim == 2:
        kind = b"Pf"
    else:
        raise ValueError("PFM data must be (h, w) or (h, w, 3)")
    height, width = data.shape[:2]
    scale = -1.0 if little_endian else 1.0
    payload = np.flipud(data).astype("<f4" if little_endian else ">f4")
    with open(path, "wb") as fh:
        fh.write(kind + b"\n")
        fh.write(f"{width} {height}\n".encode("ascii"))
        fh.write(f"{scale}\n".encode("ascii"))
        fh.write(payload.tobytes())


def load_depth(path) -> DepthMap:
    data = read_pfm(path)
    if data.ndim != 2:
        raise ValueError(f"expected 1-channel PFM depth map, got shape {data.shape}")
    return DepthMap(data)


def save_depth(path, depth_map: DepthMap) -> None:
    write_pfm(path, depth_map.depth)


def load_pointmap(path) -> PointMap:
    data = read_pfm(path)
    if data.ndim != 3:
        raise ValueError(f"expected 3-channel PFM pointmap, got shape {data.shape}")
    return PointMap(data)


def save_pointmap(path, pointmap: PointMap) -> None:
    write_pfm(path, pointmap.points)
