"""On-disk artifacts: round-trips, checksums, stage manifests."""

import json

import numpy as np
import pytest

from conftest import frame_features, synthetic_frame
from rlfolio import artifacts as art
from rlfolio import data


def _ingest(tmp_path, n_days=30, cut=20):
    frame = synthetic_frame(n_days=n_days, n_assets=2, seed=0)
    diffs = data.compute_log_diffs(frame)
    stats = data.fit_stats(diffs[:, : cut - 1], frame.assets)
    feats = data.standardize(diffs, stats)
    art.save_ingest(tmp_path, frame, feats, stats, cut, {"source": "test"})
    return frame, feats, stats


def test_json_dumps_is_canonical():
    a = art.json_dumps({"b": 1, "a": [1.5, 2]})
    b = art.json_dumps({"a": [1.5, 2], "b": 1})
    assert a == b
    assert json.loads(a) == {"a": [1.5, 2], "b": 1}
    assert a.endswith("\n") is False


def test_sha256_text_matches_known_vector():
    # sha256("abc") is a published test vector
    assert art.sha256_text("abc") == (
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
    )


def test_sha256_file_changes_with_content(tmp_path):
    p = tmp_path / "x.txt"
    p.write_text("abc")
    assert art.sha256_file(p) == art.sha256_text("abc")
    p.write_text("abd")
    assert art.sha256_file(p) != art.sha256_text("abc")


def test_ingest_roundtrip(tmp_path):
    frame, feats, stats = _ingest(tmp_path)
    loaded = art.load_ingest(tmp_path)
    assert loaded.frame.assets == frame.assets
    assert loaded.frame.dates == frame.dates
    np.testing.assert_array_equal(loaded.frame.values, frame.values)
    np.testing.assert_array_equal(loaded.features, feats)
    np.testing.assert_array_equal(loaded.stats.mean, stats.mean)
    assert loaded.cut == 20
    assert loaded.meta["source"] == "test"


def test_ingest_split_views(tmp_path):
    frame, feats, _ = _ingest(tmp_path, n_days=30, cut=20)
    loaded = art.load_ingest(tmp_path)
    train, test = loaded.train_frame(), loaded.test_frame()
    assert train.n_days == 20 and test.n_days == 10
    assert train.dates[-1] < test.dates[0]
    # feature split: train gets the moves internal to the train frame,
    # test gets the moves internal to the test frame
    assert loaded.train_features().shape[1] == train.n_days - 1
    assert loaded.test_features().shape[1] == test.n_days - 1
    np.testing.assert_array_equal(loaded.train_features(), feats[:, :19])
    np.testing.assert_array_equal(loaded.test_features(), feats[:, 20:])


def test_load_ingest_missing_artifact(tmp_path):
    _ingest(tmp_path)
    (tmp_path / art.FEATURES).unlink()
    with pytest.raises(art.MissingArtifactError):
        art.load_ingest(tmp_path)


def test_checkpoint_roundtrip_and_hash_gate(tmp_path):
    p = tmp_path / art.CHECKPOINT
    manifest = {"kind": "ddpg", "params": {"w": [1.0, 2.0]}}
    art.save_checkpoint(p, manifest, config_hash="h123", complete=True)
    assert art.load_checkpoint(p, expected_hash="h123") == manifest
    with pytest.raises(art.ChecksumMismatchError):
        art.load_checkpoint(p, expected_hash="other")


def test_incomplete_checkpoint_rejected(tmp_path):
    p = tmp_path / art.CHECKPOINT
    art.save_checkpoint(p, {"kind": "sac"}, config_hash="h", complete=False)
    with pytest.raises(art.ChecksumMismatchError):
        art.load_checkpoint(p)


def test_manifest_stage_lifecycle(tmp_path):
    art.manifest_begin(tmp_path, "ingest", {"seed": 1}, {"BTC.csv": "aa"})
    (tmp_path / "out.csv").write_text("x,y\n1,2\n")
    art.manifest_finish(tmp_path, "ingest", ["out.csv"])
    art.manifest_begin(tmp_path, "train", {"seed": 1})

    blob = art.read_json(tmp_path / art.MANIFEST)
    ingest = blob["stages"]["ingest"]
    assert ingest["status"] == "complete"
    assert ingest["inputs"] == {"BTC.csv": "aa"}
    assert ingest["artifacts"]["out.csv"] == art.sha256_file(tmp_path / "out.csv")
    assert blob["stages"]["train"]["status"] == "running"


def test_config_hash_ignores_locations():
    base = {"seed": 1, "agent": "sac", "out_dir": "runs/a", "data_dir": "x"}
    moved = {"seed": 1, "agent": "sac", "out_dir": "runs/b", "data_dir": "y"}
    retrained = {"seed": 2, "agent": "sac", "out_dir": "runs/a", "data_dir": "x"}
    assert art.config_hash(base) == art.config_hash(moved)
    assert art.config_hash(base) != art.config_hash(retrained)
