"""File formats shared with external tools.

SIEF embedding files: little-endian binary with magic "SIEF", version u32,
sample_rate u32, hop_samples u32, win_samples u32, dim u32, n_frames u64, then
f32 row-major frames.

Unit files: one integer per line, with a JSON sidecar (<path>.json) recording
the frame geometry. Masks and manifests are JSON-lines text.
"""

from __future__ import annotations

import json
import struct
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from speechfill.dsp import EmbeddingSequence
from speechfill.inpaint import MaskSpec
from speechfill.quantize import UnitSequence

_SIEF_MAGIC = b"SIEF"
_SIEF_VERSION = 1
_SIEF_HEADER = "<IIIIIQ"


def write_embeddings(seq: EmbeddingSequence, path) -> None:
    with open(path, "wb") as fh:
        fh.write(_SIEF_MAGIC)
        fh.write(
            struct.pack(
                _SIEF_HEADER,
                _SIEF_VERSION,
                seq.sample_rate,
                seq.hop_samples,
                seq.win_samples,
                seq.dim,
                seq.n_frames,
            )
        )
        fh.write(seq.frames.astype("<f4").tobytes())


def read_embeddings(path) -> EmbeddingSequence:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _SIEF_MAGIC:
            raise ValueError(f"bad embedding-file magic: {magic!r}")
        header = fh.read(struct.calcsize(_SIEF_HEADER))
        version, rate, hop, win, dim, n_frames = struct.unpack(_SIEF_HEADER, header)
        if version != _SIEF_VERSION:
            raise ValueError(f"unsupported embedding-file version {version}")
        payload = fh.read(4 * dim * n_frames)
        if len(payload) != 4 * dim * n_frames:
            raise ValueError("truncated embedding file")
    frames = np.frombuffer(payload, dtype="<f4").reshape(n_frames, dim).astype(np.float64)
    if frames.size and not np.all(np.isfinite(frames)):
        raise ValueError("embedding file contains non-finite values")
    return EmbeddingSequence(frames, hop, win, rate)


def write_units(units: UnitSequence, path) -> None:
    path = Path(path)
    path.write_text("".join(f"{int(i)}\n" for i in units.indices))
    sidecar = {
        "n_frames": len(units),
        "hop_samples": units.hop_samples,
        "win_samples": units.win_samples,
        "sample_rate": units.sample_rate,
    }
    Path(str(path) + ".json").write_text(json.dumps(sidecar, sort_keys=True) + "\n")


def read_units(path) -> UnitSequence:
    path = Path(path)
    sidecar = json.loads(Path(str(path) + ".json").read_text())
    indices = np.array([int(line) for line in path.read_text().split()], dtype=np.int64)
    if len(indices) != sidecar["n_frames"]:
        raise ValueError(
            f"unit file has {len(indices)} entries, sidecar says {sidecar['n_frames']}"
        )
    return UnitSequence(
        indices, sidecar["hop_samples"], sidecar["win_samples"], sidecar["sample_rate"]
    )


def write_masks(masks: dict[str, MaskSpec], path, seed: int | None = None) -> None:
    """One JSON object per line: utterance id, sample interval, generator seed."""
    with open(path, "w") as fh:
        for utt in sorted(masks):
            record = {"utt": utt, **masks[utt].to_json_dict()}
            if seed is not None:
                record["seed"] = seed
            fh.write(json.dumps(record, sort_keys=True) + "\n")


def read_masks(path) -> dict[str, MaskSpec]:
    masks = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            masks[obj["utt"]] = MaskSpec.from_json_dict(obj)
    return masks


@dataclass
class ManifestEntry:
    utt_id: str
    wav_path: str
    transcript: str | None = None
    embedding_path: str | None = None
    units_path: str | None = None
    synthetic_wav: str | None = None


def load_manifest(path) -> list[ManifestEntry]:
    entries = []
    seen = set()
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            entry = ManifestEntry(
                utt_id=obj["utt_id"],
                wav_path=obj["wav_path"],
                transcript=obj.get("transcript"),
                embedding_path=obj.get("embedding_path"),
                units_path=obj.get("units_path"),
                synthetic_wav=obj.get("synthetic_wav"),
            )
            if entry.utt_id in seen:
                raise ValueError(f"duplicate utt_id {entry.utt_id!r} in manifest")
            seen.add(entry.utt_id)
            entries.append(entry)
    return entries


def save_manifest(entries: list[ManifestEntry], path) -> None:
    with open(path, "w") as fh:
        for entry in entries:
            record = {k: v for k, v in asdict(entry).items() if v is not None}
            fh.write(json.dumps(record, sort_keys=True) + "\n")


def apply_asr_tts_records(entries: list[ManifestEntry], path) -> list[ManifestEntry]:
    """Merge {"utt", "synthetic_wav", "decoded_text"} records into a manifest."""
    records = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            records[obj["utt"]] = obj
    merged = []
    for entry in entries:
        rec = records.get(entry.utt_id)
        if rec is not None:
            entry = ManifestEntry(**{**asdict(entry), "synthetic_wav": rec["synthetic_wav"]})
        merged.append(entry)
    return merged
