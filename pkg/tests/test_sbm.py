"""Unit tests for data generation and snapshot file I/O."""

import math
import os

import numpy as np
import pytest

from tsbm.divergence import FiniteDistribution
from tsbm.markov import BinaryMarkovChain, chain_from_stationary
from tsbm.sbm import (
    DuplicateEdgeError,
    IndexRangeError,
    MalformedHeaderError,
    SnapshotArray,
    balanced_labelling,
    read_labels,
    read_snapshots,
    sample_categorical_snapshots,
    sample_labelling,
    sample_markov_snapshots,
    write_labels,
    write_snapshots,
)


class TestSampleLabelling:
    def test_single_block(self):
        assert set(sample_labelling(20, 1, seed=0).tolist()) == {0}

    def test_deterministic(self):
        a = sample_labelling(1000, 3, seed=5)
        b = sample_labelling(1000, 3, seed=5)
        assert np.array_equal(a, b)
        assert not np.array_equal(a, sample_labelling(1000, 3, seed=6))

    def test_block_size_concentration(self):
        n = 100_000
        hits = 0
        for seed in range(100):
            lab = sample_labelling(n, 2, seed=seed)
            if abs(int((lab == 0).sum()) - n // 2) <= 4 * math.sqrt(n):
                hits += 1
        assert hits >= 99

    def test_degenerate_weight_on_first_block(self):
        assert set(sample_labelling(50, 2, weights=[1, 0], seed=1).tolist()) == {0}

    def test_bad_weights(self):
        with pytest.raises(ValueError):
            sample_labelling(10, 2, weights=[0.0, 0.0])
        with pytest.raises(ValueError):
            sample_labelling(10, 2, weights=[1.0, -0.5])

    def test_balanced(self):
        lab = balanced_labelling(10, 3)
        assert np.bincount(lab).tolist() in ([4, 3, 3], [3, 3, 4], [3, 4, 3])


class TestMarkovSampling:
    def test_symmetry_zero_diagonal(self):
        ch = BinaryMarkovChain(0.4, 0.3, 0.6)
        arr = sample_markov_snapshots(sample_labelling(30, 2, seed=0), ch, ch, 5, seed=1)
        arr.validate()

    def test_seed_determinism(self):
        ch = BinaryMarkovChain(0.4, 0.3, 0.6)
        lab = sample_labelling(25, 2, seed=0)
        a = sample_markov_snapshots(lab, ch, ch, 6, seed=9)
        b = sample_markov_snapshots(lab, ch, ch, 6, seed=9)
        assert np.array_equal(a.data, b.data)

    def test_transition_frequencies(self):
        ch = BinaryMarkovChain(0.4, 0.3, 0.6)
        arr = sample_markov_snapshots(sample_labelling(100, 2, seed=2), ch, ch, 100, seed=7)
        x = arr.data
        prev, cur = x[:-1], x[1:]
        p01_hat = ((prev == 0) & (cur == 1)).sum() / (prev == 0).sum()
        p11_hat = ((prev == 1) & (cur == 1)).sum() / (prev == 1).sum()
        assert abs(p01_hat - 0.3) <= 0.02
        assert abs(p11_hat - 0.6) <= 0.02

    def test_all_zero_chain(self):
        silent = BinaryMarkovChain(0.0, 0.0, 0.5)
        noisy = BinaryMarkovChain(0.5, 0.5, 0.5)
        lab = np.array([0] * 10 + [1] * 10)
        arr = sample_markov_snapshots(lab, silent, noisy, 8, seed=3)
        intra_block = arr.data[:, :10, :10]
        assert intra_block.sum() == 0
        assert arr.data.sum() > 0

    def test_stationary_marginal(self):
        st = chain_from_stationary(0.25, 0.7)
        arr = sample_markov_snapshots(sample_labelling(80, 2, seed=3), st, st, 50, seed=11)
        iu, ju = np.triu_indices(80, 1)
        vals = arr.data[:, iu, ju]
        per_snapshot = vals.mean(axis=1)
        se = 3 * math.sqrt(0.25 * 0.75 / vals.shape[1])
        # averaged over snapshots; allow serial correlation slack
        assert abs(per_snapshot.mean() - 0.25) <= 3 * se

    def test_pair_independence(self):
        ch = BinaryMarkovChain(0.4, 0.3, 0.6)
        lab = sample_labelling(18, 2, seed=6)
        arr = sample_markov_snapshots(lab, ch, ch, 2000, seed=13)
        iu, ju = np.triu_indices(18, 1)
        pats = arr.data[:, iu, ju].astype(float)
        corr = np.corrcoef(pats.T)
        off = corr[np.triu_indices(corr.shape[0], 1)]
        assert off.size > 10_000
        assert np.abs(off).mean() <= 0.05
        assert abs(off.mean()) <= 0.005


class TestCategoricalSampling:
    def test_point_mass(self):
        f = FiniteDistribution.point_mass(0, 3)
        lab = sample_labelling(20, 2, seed=0)
        arr = sample_categorical_snapshots(lab, f, f, seed=1)
        assert arr.data.sum() == 0

    def test_single_block_uses_intra(self):
        f = FiniteDistribution([0.0, 1.0])
        g = FiniteDistribution([1.0, 0.0])
        lab = np.zeros(12, dtype=np.int64)
        arr = sample_categorical_snapshots(lab, f, g, seed=2)
        iu, ju = np.triu_indices(12, 1)
        assert (arr.data[0, iu, ju] == 1).all()

    def test_symbol_frequencies(self):
        f = FiniteDistribution([0.5, 0.3, 0.2])
        g = FiniteDistribution([0.2, 0.3, 0.5])
        lab = sample_labelling(200, 2, seed=4)
        arr = sample_categorical_snapshots(lab, f, g, seed=5)
        iu, ju = np.triu_indices(200, 1)
        same = lab[iu] == lab[ju]
        vals = arr.data[0, iu, ju]
        for dist, mask in ((f, same), (g, ~same)):
            m = int(mask.sum())
            for sym, p in enumerate(dist.probs):
                freq = (vals[mask] == sym).mean()
                assert abs(freq - p) <= 3 * math.sqrt(p * (1 - p) / m) + 1e-12

    def test_alphabet_mismatch(self):
        with pytest.raises(ValueError):
            sample_categorical_snapshots(
                np.zeros(5, dtype=int),
                FiniteDistribution([1.0]),
                FiniteDistribution([0.5, 0.5]),
            )


class TestSnapshotFiles:
    def test_round_trip_bit_exact(self, tmp_path):
        ch = chain_from_stationary(0.1, 0.6)
        arr = sample_markov_snapshots(sample_labelling(40, 2, seed=1), ch, ch, 7, seed=2)
        path = tmp_path / "x.tsbm"
        write_snapshots(path, arr)
        back = read_snapshots(path)
        assert np.array_equal(back.data.astype(arr.data.dtype), arr.data)
        assert np.array_equal(back.labels, arr.labels)
        # writing the parsed array again reproduces the file byte for byte
        path2 = tmp_path / "y.tsbm"
        write_snapshots(path2, back)
        assert path.read_bytes() == path2.read_bytes()

    def test_categorical_round_trip(self, tmp_path):
        f = FiniteDistribution([0.3, 0.4, 0.3])
        g = FiniteDistribution([0.6, 0.2, 0.2])
        arr = sample_categorical_snapshots(sample_labelling(25, 2, seed=3), f, g, seed=4)
        path = tmp_path / "c.tsbm"
        write_snapshots(path, arr)
        assert np.array_equal(read_snapshots(path).data, arr.data)

    def test_empty_graph(self, tmp_path):
        path = tmp_path / "e.tsbm"
        path.write_text("# empty graph\ntsbm 1 5 3\n")
        arr = read_snapshots(path)
        assert arr.N == 5 and arr.T == 3
        assert arr.data.sum() == 0

    def test_line_count(self, tmp_path):
        ch = chain_from_stationary(0.2, 0.5)
        arr = sample_markov_snapshots(sample_labelling(20, 2, seed=5), ch, ch, 4, seed=6)
        path = tmp_path / "n.tsbm"
        write_snapshots(path, arr)
        bits = sum(int(np.triu(arr.data[t], 1).sum()) for t in range(arr.T))
        lines = path.read_text().splitlines()
        assert len(lines) == 2 + bits  # header + labels + one line per bit

    @pytest.mark.parametrize(
        "content,error",
        [
            ("tsbm 2 3 1\n", MalformedHeaderError),
            ("tsbm 1 x 1\n", MalformedHeaderError),
            ("bogus\n", MalformedHeaderError),
            ("", MalformedHeaderError),
            ("tsbm 1 8 2\ne 2 7 7\n", IndexRangeError),
            ("tsbm 1 8 2\ne 1 5 3\n", IndexRangeError),
            ("tsbm 1 8 2\ne 1 0 9\n", IndexRangeError),
            ("tsbm 1 8 2\ne 3 0 1\n", IndexRangeError),
            ("tsbm 1 8 2\ne 1 0 1\ne 1 0 1\n", DuplicateEdgeError),
        ],
    )
    def test_rejects_malformed(self, tmp_path, content, error):
        path = tmp_path / "bad.tsbm"
        path.write_text(content)
        with pytest.raises(error):
            read_snapshots(path)

    def test_labels_sidecar(self, tmp_path):
        labels = np.array([0, 2, 1, 1])
        path = tmp_path / "l.labels"
        write_labels(path, labels)
        assert path.read_text() == "labels 1 3 2 2\n"
        assert np.array_equal(read_labels(path), labels)


class TestSnapshotArray:
    def test_shape_validation(self):
        with pytest.raises(ValueError):
            SnapshotArray(np.zeros((3, 4, 5)))

    def test_validate_catches_asymmetry(self):
        data = np.zeros((1, 4, 4), dtype=np.uint8)
        data[0, 1, 2] = 1
        with pytest.raises(ValueError):
            SnapshotArray(data).validate()
