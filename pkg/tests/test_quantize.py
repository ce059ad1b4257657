import numpy as np
import pytest

from oracles.brute_force import (
    best_two_cluster_partition,
    cosine_softmax_argmax,
    kmeans_objective,
    nearest_centroid_scan,
)
from speechfill.dsp import EmbeddingSequence
from speechfill.quantize import (
    COSINE,
    Codebook,
    UnitSequence,
    load_codebook,
    lookup,
    save_codebook,
    train_kmeans,
    vq_cosine,
    vq_nearest,
)


def embed(frames, hop=320, win=400, rate=16000):
    return EmbeddingSequence(np.asarray(frames, dtype=float), hop, win, rate)


class TestTrainKmeans:
    def test_k1_is_mean(self, rng):
        pts = rng.normal(size=(50, 3))
        cb = train_kmeans(embed(pts), k=1, seed=0)
        assert np.allclose(cb.centroids[0], pts.mean(axis=0))

    def test_two_well_separated_clusters(self):
        pts = np.array([[0.0], [1.0], [10.0], [11.0]])
        cb = train_kmeans(embed(pts), k=2, seed=0)
        got = tuple(sorted(cb.centroids.ravel().tolist()))
        assert got == best_two_cluster_partition([0.0, 1.0, 10.0, 11.0])
        assert got == (0.5, 10.5)

    @pytest.mark.parametrize("seed", range(5))
    def test_objective_non_increasing(self, seed):
        rng = np.random.default_rng(seed)
        pts = rng.normal(size=(120, 4))
        cb, history = train_kmeans(embed(pts), k=6, seed=seed, return_history=True)
        assert all(b <= a + 1e-9 for a, b in zip(history, history[1:]))
        # the final update step can only improve on the last recorded objective
        assert kmeans_objective(pts, cb.centroids) <= history[-1] + 1e-9

    def test_deterministic(self, rng):
        pts = rng.normal(size=(80, 2))
        a = train_kmeans(embed(pts), k=5, seed=42)
        b = train_kmeans(embed(pts), k=5, seed=42)
        assert np.array_equal(a.centroids, b.centroids)

    def test_batch_input(self, rng):
        seqs = [embed(rng.normal(size=(30, 2))) for _ in range(3)]
        stacked = np.vstack([s.frames for s in seqs])
        a = train_kmeans(seqs, k=4, seed=1)
        b = train_kmeans(stacked, k=4, seed=1)
        assert np.array_equal(a.centroids, b.centroids)

    def test_too_few_points(self, rng):
        with pytest.raises(ValueError, match="at least"):
            train_kmeans(embed(rng.normal(size=(3, 2))), k=4)


class TestVqNearest:
    def test_nearest_by_inspection(self):
        cb = Codebook(np.array([[0.0, 0.0], [1.0, 1.0]]))
        units = vq_nearest(embed([[0.9, 0.8]]), cb)
        assert units.indices.tolist() == [1]

    def test_tie_breaks_low(self):
        cb = Codebook(np.array([[0.0, 0.0], [1.0, 1.0]]))
        units = vq_nearest(embed([[0.5, 0.5]]), cb)
        assert units.indices.tolist() == [0]

    def test_matches_scan_oracle(self, rng):
        for _ in range(200):
            k = int(rng.integers(1, 9))
            d = int(rng.integers(1, 5))
            cb = Codebook(rng.normal(size=(k, d)))
            frames = rng.normal(size=(int(rng.integers(1, 12)), d))
            got = vq_nearest(embed(frames), cb).indices
            want = [nearest_centroid_scan(f, cb.centroids) for f in frames]
            assert got.tolist() == want

    def test_dim_mismatch(self):
        cb = Codebook(np.zeros((2, 3)) + np.arange(3))
        with pytest.raises(ValueError, match="dim"):
            vq_nearest(embed([[1.0, 2.0]]), cb)


class TestVqCosine:
    def test_alignment_by_inspection(self):
        cb = Codebook(np.array([[1.0, 0.0], [0.0, 1.0]]), kind=COSINE, projection=np.eye(2))
        units = vq_cosine(embed([[0.9, 0.1]]), cb)
        assert units.indices.tolist() == [0]

    def test_scale_invariance(self, rng):
        cb = Codebook(rng.normal(size=(6, 3)), kind=COSINE, projection=rng.normal(size=(4, 3)))
        frames = rng.normal(size=(10, 4))
        base = vq_cosine(embed(frames), cb).indices
        for scale in (0.01, 3.0, 1e4):
            scaled = vq_cosine(embed(frames * scale), cb).indices
            assert np.array_equal(base, scaled)

    def test_temperature_invariance_and_softmax_oracle(self, rng):
        for _ in range(50):
            k = int(rng.integers(2, 7))
            d = int(rng.integers(2, 5))
            dz = int(rng.integers(2, 6))
            proj = rng.normal(size=(dz, d))
            cb_by_tau = {
                tau: Codebook(rng_centroids, kind=COSINE, projection=proj, temperature=tau)
                for rng_centroids in [rng.normal(size=(k, d))]
                for tau in (0.01, 0.1, 1.0)
            }
            frames = rng.normal(size=(5, dz))
            results = {tau: vq_cosine(embed(frames), cb).indices for tau, cb in cb_by_tau.items()}
            assert np.array_equal(results[0.01], results[0.1])
            assert np.array_equal(results[0.1], results[1.0])
            some_cb = cb_by_tau[0.1]
            want = [cosine_softmax_argmax(f, proj, some_cb.centroids, 0.1) for f in frames]
            assert results[0.1].tolist() == want

    def test_zero_frame_falls_back(self):
        cb = Codebook(np.array([[1.0, 0.0], [0.0, 1.0]]), kind=COSINE)
        with pytest.warns(UserWarning, match="zero-norm"):
            units = vq_cosine(embed([[0.0, 0.0], [0.0, 1.0]]), cb)
        assert units.indices.tolist() == [0, 1]

    def test_dim_mismatch(self):
        cb = Codebook(np.ones((2, 3)), kind=COSINE, projection=np.ones((4, 3)))
        with pytest.raises(ValueError, match="dim"):
            vq_cosine(embed(np.ones((1, 3))), cb)


class TestLookup:
    def test_definition(self):
        cb = Codebook(np.array([[1.0, 2.0], [3.0, 4.0]]))
        units = UnitSequence(np.array([0, 0, 1]), 320, 400, 16000)
        seq = lookup(units, cb)
        assert np.array_equal(seq.frames, np.array([[1.0, 2.0], [1.0, 2.0], [3.0, 4.0]]))
        assert (seq.hop_samples, seq.win_samples, seq.sample_rate) == (320, 400, 16000)

    def test_requantize_fixed_point(self, rng):
        cb = Codebook(rng.normal(size=(5, 3)))
        frames = rng.normal(size=(20, 3))
        units = vq_nearest(embed(frames), cb)
        again = vq_nearest(lookup(units, cb), cb)
        assert np.array_equal(units.indices, again.indices)

    def test_identity_on_centroid_data(self, rng):
        cb = Codebook(rng.normal(size=(4, 2)))
        idx = rng.integers(0, 4, size=15)
        data = cb.centroids[idx]
        units = vq_nearest(embed(data), cb)
        assert np.array_equal(units.indices, idx)
        assert np.array_equal(lookup(units, cb).frames, data)

    def test_out_of_range(self):
        cb = Codebook(np.ones((2, 2)))
        units = UnitSequence(np.array([0, 2]), 320, 400, 16000)
        with pytest.raises(IndexError):
            lookup(units, cb)


class TestCodebookFile:
    def test_euclidean_round_trip(self, tmp_path, rng):
        cb = Codebook(rng.normal(size=(7, 5)).astype(np.float32).astype(np.float64), temperature=0.25)
        path = tmp_path / "cb.sicb"
        save_codebook(cb, path)
        back = load_codebook(path)
        assert back.kind == "euclidean"
        assert back.temperature == pytest.approx(0.25)
        assert np.array_equal(back.centroids, cb.centroids)

    def test_cosine_round_trip(self, tmp_path, rng):
        proj = rng.normal(size=(6, 4)).astype(np.float32).astype(np.float64)
        cents = rng.normal(size=(3, 4)).astype(np.float32).astype(np.float64)
        cb = Codebook(cents, kind=COSINE, projection=proj)
        path = tmp_path / "cb.sicb"
        save_codebook(cb, path)
        back = load_codebook(path)
        assert back.kind == COSINE
        assert np.array_equal(back.projection, proj)
        assert np.array_equal(back.centroids, cents)

    def test_magic_starts_file(self, tmp_path, rng):
        path = tmp_path / "cb.sicb"
        save_codebook(Codebook(rng.normal(size=(2, 2))), path)
        assert path.read_bytes()[:4] == b"SICB"

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "junk.sicb"
        path.write_bytes(b"NOPE" + b"\x00" * 32)
        with pytest.raises(ValueError, match="magic"):
            load_codebook(path)
