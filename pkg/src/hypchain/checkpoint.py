"""Versioned DMRG checkpoints.

Layout: the magic line, an 8-byte little-endian header length, a UTF-8 JSON
header, then the raw little-endian float64 arrays listed in the header.
Every array carries a SHA-256 digest and the header carries its own.
"""

from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

import numpy as np

from .dmrg import Block, DmrgParams, DmrgState
from .io import atomic_write
from .profiles import BondModel, ChainSpec, DeformationProfile, weight_vector

MAGIC = b"HYPCHAIN-CKPT\n"
VERSION = 1


class CheckpointError(ValueError):
    pass


class CheckpointVersionError(CheckpointError):
    pass


class CheckpointCorruptError(CheckpointError):
    pass


def _digest(b: bytes) -> str:
    return hashlib.sha256(b).hexdigest()


def save(state: DmrgState, path) -> Path:
    arrays: list[tuple[str, np.ndarray]] = []
    blocks_meta = {"left": [], "right": []}
    for side, blocks in (("left", state.left_blocks), ("right", state.right_blocks)):
        for i, blk in enumerate(blocks):
            if blk is None:
                blocks_meta[side].append(None)
                continue
            blocks_meta[side].append({"size": blk.size, "offset": blk.offset.hex(), "has_rotation": blk.rotation is not None})
            arrays += [
                (f"{side}{i}.energies", blk.energies),
                (f"{side}{i}.qn", blk.qn),
                (f"{side}{i}.sz", blk.sz),
                (f"{side}{i}.sp", blk.sp),
            ]
            if blk.rotation is not None:
                arrays.append((f"{side}{i}.rotation", blk.rotation))
    arrays.append(("psi", state.psi))
    arrays.append(("energy_history", np.array(state.energy_history, dtype=float)))
    cuts = sorted(state.dm_spectrum_per_cut)
    for c in cuts:
        arrays.append((f"spectrum{c}", state.dm_spectrum_per_cut[c]))
    arrays.append(("trunc_cuts", np.array(sorted(state.truncation_error_per_cut), dtype=float)))
    arrays.append(("trunc_errors", np.array([state.truncation_error_per_cut[c] for c in sorted(state.truncation_error_per_cut)])))

    payload = bytearray()
    index = []
    for name, arr in arrays:
        raw = np.ascontiguousarray(arr, dtype="<f8")
        b = raw.tobytes()
        index.append({"name": name, "shape": list(raw.shape), "offset": len(payload), "nbytes": len(b), "sha256": _digest(b)})
        payload += b
    header = {
        "version": VERSION,
        "config": {
            "chain": {"half_length": state.chain.half_length},
            "profile": state.profile.to_dict(),
            "model": state.model.to_dict(),
            "params": state.params.to_dict(),
        },
        "energy": float(state.energy).hex(),
        "sweeps_done": state.sweeps_done,
        "converged": state.converged,
        "center_gap": None if state.center_gap is None else float(state.center_gap).hex(),
        "spectrum_cuts": cuts,
        "blocks": blocks_meta,
        "arrays": index,
        "entropy_log_base": state.entropy_log_base,
    }
    hbytes = json.dumps(header, sort_keys=True).encode()
    envelope = json.dumps({"header": header, "header_sha256": _digest(hbytes)}, sort_keys=True).encode()
    data = MAGIC + struct.pack("<Q", len(envelope)) + envelope + bytes(payload)
    return atomic_write(path, data)


def load(path) -> DmrgState:
    data = Path(path).read_bytes()
    if not data.startswith(MAGIC):
        raise CheckpointCorruptError("not a hypchain checkpoint (bad magic)")
    off = len(MAGIC)
    try:
        (hlen,) = struct.unpack("<Q", data[off : off + 8])
        envelope = json.loads(data[off + 8 : off + 8 + hlen])
        header = envelope["header"]
    except (struct.error, ValueError, KeyError) as exc:
        raise CheckpointCorruptError(f"unreadable checkpoint header: {exc}") from None
    if _digest(json.dumps(header, sort_keys=True).encode()) != envelope.get("header_sha256"):
        raise CheckpointCorruptError("checkpoint header checksum mismatch")
    if header.get("version") != VERSION:
        raise CheckpointVersionError(f"checkpoint version {header.get('version')!r}, expected {VERSION}")
    base = off + 8 + hlen
    arrays = {}
    for entry in header["arrays"]:
        start = base + entry["offset"]
        b = data[start : start + entry["nbytes"]]
        if len(b) != entry["nbytes"] or _digest(b) != entry["sha256"]:
            raise CheckpointCorruptError(f"array {entry['name']!r} is corrupted")
        arrays[entry["name"]] = np.frombuffer(b, dtype="<f8").reshape(entry["shape"]).astype(float)

    cfg = header["config"]
    chain = ChainSpec(cfg["chain"]["half_length"])
    profile = DeformationProfile.from_dict(cfg["profile"])
    model = BondModel(**cfg["model"])
    params = DmrgParams(**cfg["params"])
    blocks = {}
    for side, metas in header["blocks"].items():
        out = []
        for i, meta in enumerate(metas):
            if meta is None:
                out.append(None)
                continue
            out.append(
                Block(
                    meta["size"],
                    side,
                    arrays[f"{side}{i}.energies"],
                    float.fromhex(meta["offset"]),
                    arrays[f"{side}{i}.qn"].astype(int),
                    arrays[f"{side}{i}.sz"],
                    arrays[f"{side}{i}.sp"],
                    arrays[f"{side}{i}.rotation"] if meta["has_rotation"] else None,
                )
            )
        blocks[side] = out
    state = DmrgState(
        chain, profile, model, params, weight_vector(chain, profile), blocks["left"], blocks["right"], arrays["psi"]
    )
    state.energy = float.fromhex(header["energy"])
    state.energy_history = arrays["energy_history"].tolist()
    state.sweeps_done = header["sweeps_done"]
    state.converged = header["converged"]
    state.center_gap = None if header["center_gap"] is None else float.fromhex(header["center_gap"])
    state.dm_spectrum_per_cut = {c: arrays[f"spectrum{c}"] for c in header["spectrum_cuts"]}
    state.truncation_error_per_cut = {
        int(c): float(e) for c, e in zip(arrays["trunc_cuts"], arrays["trunc_errors"])
    }
    state.entropy_log_base = header.get("entropy_log_base", "e")
    return state
