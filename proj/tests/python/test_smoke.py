# Copyright 2026 The Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.


import itertools
import os
import subprocess

import numpy as np
import pytest

import toma


def brute_force_fl(sim, k):
    best = -np.inf
    for combo in itertools.combinations(range(sim.shape[0]), k):
        best = max(best, sim[:, list(combo)].max(axis=1).sum())
    return best


def test_greedy_is_near_optimal():
    rng = np.random.default_rng(0)
    for _ in range(5):
        x = rng.random((10, 6), dtype=np.float32)
        sim = toma.cosine_similarity(x)
        picks = toma.greedy_select(sim, 3)
        assert len(set(picks)) == 3
        value = toma.facility_location_value(sim, picks)
        assert value >= (1 - 1 / np.e) * brute_force_fl(sim.astype(np.float64), 3) - 1e-5


def test_cosine_matches_numpy():
    rng = np.random.default_rng(1)
    x = rng.standard_normal((20, 8)).astype(np.float32)
    unit = x / np.linalg.norm(x, axis=1, keepdims=True)
    np.testing.assert_allclose(toma.cosine_similarity(x), unit @ unit.T, atol=1e-5)


def test_weights_are_stochastic():
    rng = np.random.default_rng(2)
    x = rng.standard_normal((40, 8)).astype(np.float32)
    dest = toma.select_destinations(x, 10)
    w = toma.merge_weights(x, dest, tau=0.1)
    assert w.a_raw.shape == (10, 40)
    np.testing.assert_allclose(w.a_raw.sum(axis=0), 1.0, atol=1e-5)
    np.testing.assert_allclose(w.a_tilde.sum(axis=1), 1.0, atol=1e-5)
    assert w.destinations == dest
    merged = toma.apply_merge(w, x)
    np.testing.assert_allclose(merged, w.a_tilde @ x, rtol=1e-4, atol=1e-5)


def test_full_budget_roundtrip():
    rng = np.random.default_rng(3)
    x = (np.eye(12, 24) * rng.uniform(0.5, 2.0, (12, 1))).astype(np.float32)
    x += rng.normal(0.0, 0.05, x.shape).astype(np.float32)
    w = toma.merge_weights(x, list(range(12)), tau=0.01)
    back = toma.unmerge(w, toma.apply_merge(w, x))
    assert np.linalg.norm(back - x) / np.linalg.norm(x) < 1e-3


def test_pinv_matches_numpy():
    rng = np.random.default_rng(4)
    a = rng.random((5, 9)).astype(np.float32)
    np.testing.assert_allclose(toma.pseudo_inverse(a), np.linalg.pinv(a.astype(np.float64)),
                               atol=1e-4)


def test_rank_deficient_pinv_raises():
    x = np.ones((8, 4), dtype=np.float32)
    w = toma.merge_weights(x, [0, 1, 2])
    with pytest.raises(toma.NumericalError):
        toma.unmerge(w, toma.apply_merge(w, x), mode="pinv")


def test_local_pipeline_tile_vs_global():
    x = toma.generate_field(16, 16, 8, sigma=2.0, seed=5)
    tile = toma.local_pipeline(x, ratio=0.5, layout="tile", regions=4, grid=(16, 16))
    assert tile.shape == x.shape
    single = toma.local_pipeline(x, ratio=0.5, layout="tile", regions=1, grid=(16, 16))
    np.testing.assert_array_equal(single, toma.local_pipeline(x, ratio=0.5))
    with pytest.raises(toma.InvalidArgument, match="nearest valid region counts"):
        toma.local_pipeline(x, ratio=0.5, layout="tile", regions=7, grid=(16, 16))
    assert 4 in toma.valid_region_counts("tile", 256, (16, 16))


def test_synth_and_files(tmp_path):
    states = toma.drift_sequence(8, 8, 4, drift=0.2, steps=3, seed=9)
    assert len(states) == 3
    assert states[0].shape == (64, 4)
    np.testing.assert_array_equal(states[0], toma.generate_field(8, 8, 4, seed=9))
    path = tmp_path / "x.bin"
    toma.write_tensor_file(path, states[1], grid=(8, 8))
    back, grid = toma.read_tensor_file(path)
    np.testing.assert_array_equal(back, states[1])
    assert grid == (8, 8)
    with pytest.raises(toma.DataError):
        toma.read_tensor_file(tmp_path / "missing.bin")
    bad = states[0].copy()
    bad[0, 0] = np.inf
    with pytest.raises(toma.DataError):
        toma.write_tensor_file(tmp_path / "bad.bin", bad)


def test_cost_report():
    report = toma.cost_report(8, 4, 0.5)
    assert report["counts"]["c_base"] == 1024
    assert report["counts"]["c_total"] == 1024
    assert report["speedup_ideal"] == pytest.approx(8 / 3)
    assert report["analytic_bound"] == pytest.approx(4 / 3)
    with pytest.raises(toma.InvalidArgument):
        toma.cost_report(8, 4, 0.0)


def test_run_report():
    states = toma.drift_sequence(8, 8, 8, steps=2, seed=1)
    report = toma.run_report(states, grid=(8, 8), layout="stripe", regions=2, reps=2)
    assert report["shape"]["steps"] == 2
    assert report["timings"]["merge"]["samples"] == 2
    assert np.isfinite(report["metrics"]["roundtrip_rel_mse"])


@pytest.mark.skipif(not os.environ.get("TOMA_CLI"), reason="TOMA_CLI not set")
def test_cli_flops():
    out = subprocess.run([os.environ["TOMA_CLI"], "flops", "--n", "8", "--dim", "4",
                          "--ratio", "0.5"], capture_output=True, text=True, check=True)
    assert '"c_base": 1024' in out.stdout
