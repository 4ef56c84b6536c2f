"""Binary trajectory container: JSON header + contiguous float64 frames.

Layout: 8-byte magic, little-endian uint32 header length, canonical JSON
header (system id, frame dim/count, temperature, config hash, metadata),
then C-order little-endian float64 frames. A human-readable ``.meta``
sidecar is written next to the binary. Round-trips are bit-exact.
"""

import json
import struct
from pathlib import Path

import numpy as np

from . import __version__
from .systems import Trajectory

MAGIC = b"IBFTRJ01"


class TrajectoryFormatError(Exception):
    """Raised when a trajectory file is corrupt or truncated."""


def _canonical_json(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()


def write_trajectory(traj, path):
    """Write a Trajectory; returns the path. Also emits a ``.meta`` sidecar."""
    path = Path(path)
    header = {
        "format": 1,
        "tool_version": __version__,
        "system": traj.system,
        "frame_dim": int(traj.frame_dim),
        "n_frames": int(traj.n_frames),
        "temperature": float(traj.temperature),
        "config_hash": traj.config_hash,
        "metadata": traj.metadata,
    }
    blob = _canonical_json(header)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        fh.write(np.ascontiguousarray(traj.frames, dtype="<f8").tobytes())
    with open(path.with_suffix(path.suffix + ".meta"), "w") as fh:
        fh.write(f"system: {traj.system}\n")
        fh.write(f"n_frames: {traj.n_frames}\n")
        fh.write(f"frame_dim: {traj.frame_dim}\n")
        fh.write(f"temperature: {traj.temperature}\n")
        fh.write(f"config_hash: {traj.config_hash}\n")
        for key in sorted(traj.metadata):
            fh.write(f"{key}: {traj.metadata[key]}\n")
    return path


def read_trajectory(path):
    """Read a Trajectory written by :func:`write_trajectory`."""
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < 12 or raw[:8] != MAGIC:
        raise TrajectoryFormatError(f"{path}: bad magic at offset 0")
    (hlen,) = struct.unpack("<I", raw[8:12])
    if len(raw) < 12 + hlen:
        raise TrajectoryFormatError(f"{path}: truncated header at offset 12")
    try:
        header = json.loads(raw[12:12 + hlen])
    except json.JSONDecodeError as exc:
        raise TrajectoryFormatError(f"{path}: bad header JSON: {exc}") from exc
    n, d = header["n_frames"], header["frame_dim"]
    body = raw[12 + hlen:]
    expect = n * d * 8
    if len(body) != expect:
        raise TrajectoryFormatError(
            f"{path}: expected {expect} frame bytes at offset {12 + hlen}, "
            f"got {len(body)}")
    frames = np.frombuffer(body, dtype="<f8").reshape(n, d).copy()
    return Trajectory(frames, temperature=header["temperature"],
                      system=header["system"],
                      config_hash=header.get("config_hash", ""),
                      metadata=header.get("metadata", {}))
