"""Shared fixtures: a fabricated architecture-correct checkpoint and
synthetic captured frames.

The published pretrained weights are not redistributable, so tests exercise
loading, extraction mechanics, formats, and determinism with random weights
of the exact pretrained layout; descriptor quality is out of scope here.
"""

import pytest
import torch

from voteloc_extractor.network import BackboneNet


@pytest.fixture(scope="session")
def checkpoint(tmp_path_factory):
    torch.manual_seed(0)
    reference = BackboneNet()
    state = {
        name: torch.randn_like(tensor) * 0.05
        for name, tensor in reference.state_dict().items()
    }
    path = tmp_path_factory.mktemp("weights") / "net.pth"
    torch.save(state, path)
    return path
