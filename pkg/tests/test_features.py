"""Per-pair feature vectors and the feature cache file."""

import numpy as np
import pytest

from mapqa.dataset import load_manifest
from mapqa.errors import CorruptFile, MissingColumn, ResolutionMismatch, ShapeMismatch
from mapqa.features import (
    FeatureTable,
    adaptive_range,
    extract_manifest,
    extract_pair,
    layer_features,
    read_features,
    write_features,
)
from mapqa.metrics import PSNR_CAP_DB
from mapqa.rng import Rng, derive


def _image(seed, shape=(3, 96, 128)):
    return Rng(derive(seed, "feat-img")).uniform(shape).astype(np.float32)


def test_identical_activations_give_all_ones():
    act = Rng(1).uniform((4, 16, 16)).astype(np.float32)
    out = layer_features(act, act.copy(), "ssim")
    assert out.shape == (4,)
    assert np.all(out == 1.0)


def test_channel_ordering():
    side = np.indices((16, 16)).sum(axis=0)
    checker = ((side % 2) == 0).astype(np.float32)
    ref = np.stack([checker, checker])
    dist = np.stack([checker, 1.0 - checker])  # channel 1 fully out of phase
    out = layer_features(ref, dist, "ssim")
    assert out[0] == 1.0
    assert out[1] < out[0]


def test_psnr_features_match_per_channel_loop():
    rng = Rng(2)
    ref = rng.uniform((4, 8, 8))
    dist = rng.uniform((4, 8, 8))
    got = layer_features(ref, dist, "psnr")
    for i in range(4):
        peak = max(ref[i].max(), dist[i].max(), 1e-6)
        mse = np.mean((ref[i] - dist[i]) ** 2)
        assert got[i] == pytest.approx(10.0 * np.log10(peak * peak / mse), abs=1e-9)


def test_layer_features_validation():
    act = np.zeros((2, 8, 8))
    with pytest.raises(ShapeMismatch):
        layer_features(act, np.zeros((2, 8, 9)), "psnr")
    with pytest.raises(ShapeMismatch):
        layer_features(act, act, "nosuchmetric")


def test_adaptive_range_floor():
    z = np.zeros((4, 4))
    assert adaptive_range(z, z) == 1e-6
    assert adaptive_range(z + 2.0, z) == 2.0


def test_extract_pair_identical_images(toy_net):
    img = _image(3)
    for metric, peak in [("psnr", PSNR_CAP_DB), ("ssim", 1.0), ("haarpsi", 1.0)]:
        vec = extract_pair(toy_net, img, img, metric)
        assert vec.values.shape == (40,)
        assert vec.layer_offsets == (0, 8, 24)
        assert vec.metric == metric
        assert np.all(vec.values >= peak - 1e-9)


def test_feature_length_is_resolution_independent(toy_net):
    a = extract_pair(toy_net, _image(4), _image(5), "psnr")
    small_ref = _image(6, (3, 64, 80))
    small_dist = _image(7, (3, 64, 80))
    b = extract_pair(toy_net, small_ref, small_dist, "psnr")
    assert a.values.size == b.values.size == toy_net.feature_length


def test_swapping_pair_changes_nothing(toy_net):
    ref = _image(8)
    dist = np.clip(ref + 0.1 * Rng(9).normal(ref.shape).astype(np.float32), 0, 1)
    for metric in ("psnr", "ssim", "haarpsi"):
        fwd = extract_pair(toy_net, ref, dist, metric)
        rev = extract_pair(toy_net, dist, ref, metric)
        assert np.array_equal(fwd.values, rev.values)


def test_extract_pair_rejects_mixed_resolutions(toy_net):
    with pytest.raises(ResolutionMismatch):
        extract_pair(toy_net, _image(10), _image(11, (3, 64, 80)), "psnr")


def test_precomputed_reference_taps_short_circuit(toy_net):
    from mapqa.archive import run_network

    ref = _image(12, (3, 64, 80))
    dist = _image(13, (3, 64, 80))
    plain = extract_pair(toy_net, ref, dist, "ssim")
    reused = extract_pair(toy_net, ref, dist, "ssim", ref_taps=run_network(toy_net, ref))
    assert np.array_equal(plain.values, reused.values)


# --- cache file ---------------------------------------------------------

def _table():
    rng = Rng(14)
    return FeatureTable(
        pair_ids=["r0/blur_l1", "r0/blur_l2", "r1/noise_l3"],
        mos=np.array([0.9, 0.55, 0.3]),
        distortion_types=["blur", "blur", "noise"],
        distortion_levels=[1, 2, None],
        X=rng.uniform((3, 5)),
    )


def test_feature_csv_round_trip(tmp_path):
    path = tmp_path / "features.csv"
    table = _table()
    write_features(path, table)
    back = read_features(path)
    assert back.pair_ids == table.pair_ids
    assert back.distortion_types == table.distortion_types
    assert back.distortion_levels == [1, 2, None]
    assert np.allclose(back.X, table.X, rtol=1e-8, atol=0)
    assert back.reference_ids() == ["r0", "r0", "r1"]
    # a second write from the parsed values is byte-stable
    first = path.read_bytes()
    write_features(path, back)
    assert path.read_bytes() == first


def test_feature_csv_header(tmp_path):
    path = tmp_path / "f.csv"
    write_features(path, _table())
    with open(path) as fh:
        assert fh.readline().rstrip("\n") == (
            "pair_id,mos,distortion_type,distortion_level,f_0,f_1,f_2,f_3,f_4"
        )


def test_read_features_rejects_bad_files(tmp_path):
    bad_header = tmp_path / "bad1.csv"
    bad_header.write_text("pair,mos,distortion_type,distortion_level,f_0\n")
    with pytest.raises(MissingColumn):
        read_features(bad_header)

    bad_fcols = tmp_path / "bad2.csv"
    bad_fcols.write_text("pair_id,mos,distortion_type,distortion_level,f_1\n")
    with pytest.raises(MissingColumn):
        read_features(bad_fcols)

    empty = tmp_path / "bad3.csv"
    empty.write_text("")
    with pytest.raises(MissingColumn):
        read_features(empty)

    bad_row = tmp_path / "bad4.csv"
    bad_row.write_text(
        "pair_id,mos,distortion_type,distortion_level,f_0\np1,notanumber,blur,1,0.5\n"
    )
    with pytest.raises(CorruptFile):
        read_features(bad_row)

    short_row = tmp_path / "bad5.csv"
    short_row.write_text(
        "pair_id,mos,distortion_type,distortion_level,f_0,f_1\np1,0.5,blur,1,0.5\n"
    )
    with pytest.raises(CorruptFile):
        read_features(short_row)


def test_extract_resumes_partial_cache(tmp_path, toy_net, small5):
    # simulate an interrupted run: keep the first 30 cached rows, rerun
    full_bytes = small5.feat_psnr.read_bytes()
    partial = tmp_path / "resume.csv"
    lines = full_bytes.decode().splitlines(keepends=True)
    partial.write_text("".join(lines[:31]))  # header + 30 rows

    manifest = load_manifest(small5.manifest)
    computed = extract_manifest(toy_net, manifest, "psnr", partial, threads=2)
    assert computed == len(manifest.rows) - 30
    assert partial.read_bytes() == full_bytes
