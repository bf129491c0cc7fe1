"""Run-directory artifacts: ingest tensors, checkpoints, manifests, checksums.

Arrays are stored as .npy (deterministic bytes for a given array) with a
JSON sidecar for everything else; checkpoints are pure JSON with repr-level
float precision, so save -> load round-trips bit-exactly.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from datetime import date, datetime, timezone
from pathlib import Path

import numpy as np

from .data import FeatureStats, MarketFrame

INGEST_META = "ingest_meta.json"
FRAME_VALUES = "frame_values.npy"
FEATURES = "features.npy"
STATS_MEAN = "stats_mean.npy"
STATS_STD = "stats_std.npy"
CHECKPOINT = "checkpoint.json"
MANIFEST = "manifest.json"


class ChecksumMismatchError(RuntimeError):
    pass


class MissingArtifactError(FileNotFoundError):
    pass


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def json_dumps(obj) -> str:
    """Canonical JSON used for hashing and on-disk artifacts."""
    return json.dumps(obj, sort_keys=True, indent=2)


def write_json(path: str | Path, obj) -> None:
    Path(path).write_text(json_dumps(obj) + "\n")


def read_json(path: str | Path) -> dict:
    path = Path(path)
    if not path.exists():
        raise MissingArtifactError(str(path))
    return json.loads(path.read_text())


# ---------------------------------------------------------------------------
# ingest artifacts


@dataclass(frozen=True)
class IngestArtifacts:
    frame: MarketFrame  # full aligned frame
    features: np.ndarray  # standardized log-diffs over the full frame, (M, T-1, C)
    stats: FeatureStats
    cut: int  # first day index of the test split
    meta: dict

    def train_frame(self) -> MarketFrame:
        return MarketFrame(self.frame.assets, self.frame.dates[: self.cut],
                           self.frame.values[:, : self.cut].copy())

    def test_frame(self) -> MarketFrame:
        return MarketFrame(self.frame.assets, self.frame.dates[self.cut :],
                           self.frame.values[:, self.cut :].copy())

    def train_features(self) -> np.ndarray:
        # diff k is the move into day k+1, so moves internal to the train
        # split are indices 0 .. cut-2
        return self.features[:, : self.cut - 1]

    def test_features(self) -> np.ndarray:
        return self.features[:, self.cut :]


def save_ingest(out_dir: str | Path, frame: MarketFrame, features: np.ndarray,
                stats: FeatureStats, cut: int, extra_meta: dict | None = None) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    np.save(out / FRAME_VALUES, frame.values)
    np.save(out / FEATURES, features)
    np.save(out / STATS_MEAN, stats.mean)
    np.save(out / STATS_STD, stats.std)
    meta = {
        "assets": list(frame.assets),
        "dates": [d.isoformat() for d in frame.dates],
        "cut": cut,
        **(extra_meta or {}),
    }
    write_json(out / INGEST_META, meta)


def load_ingest(out_dir: str | Path) -> IngestArtifacts:
    out = Path(out_dir)
    meta = read_json(out / INGEST_META)
    for name in (FRAME_VALUES, FEATURES, STATS_MEAN, STATS_STD):
        if not (out / name).exists():
            raise MissingArtifactError(str(out / name))
    values = np.load(out / FRAME_VALUES)
    frame = MarketFrame(
        assets=tuple(meta["assets"]),
        dates=tuple(date.fromisoformat(d) for d in meta["dates"]),
        values=values,
    )
    features = np.load(out / FEATURES)
    stats = FeatureStats(mean=np.load(out / STATS_MEAN), std=np.load(out / STATS_STD))
    return IngestArtifacts(frame=frame, features=features, stats=stats,
                           cut=int(meta["cut"]), meta=meta)


# ---------------------------------------------------------------------------
# checkpoints


def save_checkpoint(path: str | Path, agent_manifest: dict, config_hash: str,
                    complete: bool = True) -> None:
    write_json(path, {
        "config_hash": config_hash,
        "complete": complete,
        "agent": agent_manifest,
    })


def load_checkpoint(path: str | Path, expected_hash: str | None = None) -> dict:
    blob = read_json(path)
    if expected_hash is not None and blob.get("config_hash") != expected_hash:
        raise ChecksumMismatchError(
            f"checkpoint config hash {blob.get('config_hash')!r} != expected {expected_hash!r}"
        )
    if not blob.get("complete", False):
        raise ChecksumMismatchError("checkpoint is flagged incomplete (interrupted run)")
    return blob["agent"]


# ---------------------------------------------------------------------------
# run manifest


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def manifest_begin(out_dir: str | Path, stage: str, config_dict: dict,
                   input_checksums: dict | None = None) -> None:
    """Record a stage before it runs; prior stages are preserved untouched."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / MANIFEST
    manifest = read_json(path) if path.exists() else {"stages": {}}
    manifest["stages"][stage] = {
        "status": "running",
        "started_at": _now(),
        "config": config_dict,
        "inputs": input_checksums or {},
    }
    write_json(path, manifest)


def manifest_finish(out_dir: str | Path, stage: str, artifacts: list[str]) -> None:
    out = Path(out_dir)
    path = out / MANIFEST
    manifest = read_json(path)
    entry = manifest["stages"][stage]
    entry["status"] = "complete"
    entry["finished_at"] = _now()
    entry["artifacts"] = {name: sha256_file(out / name) for name in sorted(artifacts)}
    write_json(path, manifest)


def config_hash(config_dict: dict) -> str:
    """Hash of everything that affects the trained model (not where it lives)."""
    relevant = {k: v for k, v in config_dict.items() if k not in ("out_dir", "data_dir")}
    return sha256_text(json_dumps(relevant))
