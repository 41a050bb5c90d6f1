"""File formats: GHT1 binary tensors, PFM float images, and JSONL grasps.

GHT1 layout (all integers little-endian u32): magic b"GHT1", dtype code
(0 = float32), rank, dims, then the row-major float32 payload.
PFM is the standard grayscale portable float map: rows are stored
bottom-up and a negative scale marks little-endian data.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .geometry import Grasp2D5, Grasp6D

GHT_MAGIC = b"GHT1"
GHT_DTYPE_F32 = 0


def write_ght(path, arr: np.ndarray) -> None:
    arr = np.asarray(arr, dtype=np.float32)
    with open(path, "wb") as f:
        f.write(GHT_MAGIC)
        f.write(struct.pack("<II", GHT_DTYPE_F32, arr.ndim))
        f.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
        f.write(arr.astype("<f4", copy=False).tobytes(order="C"))


def read_ght(path) -> np.ndarray:
    with open(path, "rb") as f:
        magic = f.read(4)
        if magic != GHT_MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}")
        dtype_code, rank = struct.unpack("<II", f.read(8))
        if dtype_code != GHT_DTYPE_F32:
            raise ValueError(f"{path}: unsupported dtype code {dtype_code}")
        dims = struct.unpack(f"<{rank}I", f.read(4 * rank))
        count = int(np.prod(dims)) if rank else 1
        payload = f.read(4 * count)
        if len(payload) != 4 * count:
            raise ValueError(f"{path}: truncated payload")
        if f.read(1):
            raise ValueError(f"{path}: trailing bytes")
    return np.frombuffer(payload, dtype="<f4").reshape(dims).copy()


def write_pfm(path, arr: np.ndarray) -> None:
    """Grayscale PFM, bottom-up row order, little-endian (scale -1)."""
    arr = np.asarray(arr, dtype=np.float32)
    if arr.ndim != 2:
        raise ValueError("PFM writer handles 2-D grayscale maps only")
    with open(path, "wb") as f:
        f.write(b"Pf\n")
        f.write(f"{arr.shape[1]} {arr.shape[0]}\n".encode("ascii"))
        f.write(b"-1.0\n")
        f.write(arr[::-1].astype("<f4", copy=False).tobytes(order="C"))


def read_pfm(path) -> np.ndarray:
    with open(path, "rb") as f:
        header = f.readline().strip()
        if header != b"Pf":
            raise ValueError(f"{path}: not a grayscale PFM (header {header!r})")
        w, h = map(int, f.readline().split())
        scale = float(f.readline())
        data = np.frombuffer(f.read(4 * w * h), dtype="<f4" if scale < 0 else ">f4")
        if data.size != w * h:
            raise ValueError(f"{path}: truncated payload")
    return data.reshape(h, w)[::-1].copy()


def write_grasps_jsonl(path, grasps: list[Grasp6D]) -> None:
    with open(path, "w") as f:
        for g in grasps:
            f.write(json.dumps(g.to_dict()) + "\n")


def read_grasps_jsonl(path) -> list[Grasp6D]:
    out = []
    with open(path) as f:
        for line in f:
            line = line.strip()
            if line:
                out.append(Grasp6D.from_dict(json.loads(line)))
    return out


def write_grasps2d_jsonl(path, grasps: list[Grasp2D5]) -> None:
    with open(path, "w") as f:
        for g in grasps:
            f.write(json.dumps(g.to_dict()) + "\n")


def read_grasps2d_jsonl(path) -> list[Grasp2D5]:
    out = []
    with open(path) as f:
        for line in f:
            line = line.strip()
            if line:
                out.append(Grasp2D5.from_dict(json.loads(line)))
    return out


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2) + "\n")


def read_json(path):
    return json.loads(Path(path).read_text())


def write_curves_csv(path, rows) -> None:
    with open(path, "w") as f:
        f.write("k,CR,CFR,AS\n")
        for k, cr, cfr, a in rows:
            f.write(f"{int(k)},{cr:.6f},{cfr:.6f},{a:.6f}\n")


def read_curves_csv(path):
    rows = []
    with open(path) as f:
        header = f.readline().strip()
        if header != "k,CR,CFR,AS":
            raise ValueError(f"{path}: unexpected header {header!r}")
        for line in f:
            k, cr, cfr, a = line.strip().split(",")
            rows.append((int(k), float(cr), float(cfr), float(a)))
    return rows
