"""Network loading and dense extraction mechanics."""

import numpy as np
import pytest
import torch

from voteloc_extractor.errors import BadCheckpoint, MissingWeights
from voteloc_extractor.network import DESCRIPTOR_DIM, dense_extract, load_network


@pytest.fixture(scope="module")
def net(checkpoint):
    return load_network(checkpoint)


def gray(seed, height=64, width=80):
    return np.random.default_rng(seed).random((height, width)).astype(np.float32)


class TestLoading:
    def test_missing_file(self, tmp_path):
        with pytest.raises(MissingWeights):
            load_network(tmp_path / "nope.pth")

    def test_not_a_checkpoint(self, tmp_path):
        path = tmp_path / "junk.pth"
        path.write_bytes(b"definitely not a checkpoint")
        with pytest.raises(BadCheckpoint):
            load_network(path)

    def test_wrong_architecture(self, tmp_path, checkpoint):
        state = torch.load(checkpoint, weights_only=True)
        state["conv1a.weight"] = torch.zeros(8, 1, 3, 3)
        path = tmp_path / "wrong.pth"
        torch.save(state, path)
        with pytest.raises(BadCheckpoint):
            load_network(path)

    def test_eval_mode(self, net):
        assert not net.training


class TestDenseExtract:
    def test_shapes_and_ranges(self, net):
        desc, scores = dense_extract(net, gray(1))
        assert desc.shape == (64, 80, DESCRIPTOR_DIM)
        assert desc.dtype == np.float32
        assert scores.shape == (64, 80)
        assert scores.dtype == np.float32
        assert scores.min() >= 0.0 and scores.max() <= 1.0

    def test_descriptors_unit_norm(self, net):
        desc, _ = dense_extract(net, gray(2))
        norms = np.linalg.norm(desc, axis=2)
        np.testing.assert_allclose(norms, 1.0, atol=1e-3)

    def test_deterministic(self, net):
        a = dense_extract(net, gray(3))
        b = dense_extract(net, gray(3))
        assert (a[0] == b[0]).all() and (a[1] == b[1]).all()

    def test_input_sensitivity(self, net):
        a, _ = dense_extract(net, gray(4))
        b, _ = dense_extract(net, gray(5))
        assert not (a == b).all()

    def test_rejects_indivisible_sides(self, net):
        with pytest.raises(ValueError):
            dense_extract(net, gray(6, height=60, width=80))

    def test_rejects_multichannel(self, net):
        with pytest.raises(ValueError):
            dense_extract(net, np.zeros((64, 80, 3), dtype=np.float32))

    def test_scores_sum_to_at_most_one_per_cell(self, net):
        # per coarse cell the 64 kept softmax entries lose only the dropped
        # no-keypoint bin's mass
        _, scores = dense_extract(net, gray(7))
        cells = scores.reshape(8, 8, 10, 8).transpose(0, 2, 1, 3).reshape(8, 10, 64)
        sums = cells.sum(axis=2)
        assert (sums <= 1.0 + 1e-5).all()
        assert (sums > 0.0).all()
