"""Dense keypoint/descriptor network and full-resolution extraction.

The architecture is the published VGG-style detector/descriptor net whose
pretrained checkpoint is a plain state dict: a shared backbone at 1/8
resolution, a detector head with 65 channels (an 8x8 score block per coarse
cell plus a no-keypoint bin), and a 256-d descriptor head.  Module names
match the checkpoint keys, so the standard pretrained file loads directly.
"""

from __future__ import annotations

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from .errors import BadCheckpoint, MissingWeights

COARSE_STRIDE = 8
DESCRIPTOR_DIM = 256


class BackboneNet(nn.Module):
    def __init__(self) -> None:
        super().__init__()
        self.relu = nn.ReLU(inplace=True)
        self.pool = nn.MaxPool2d(2, 2)
        c1, c2, c3, c4, head = 64, 64, 128, 128, 256
        self.conv1a = nn.Conv2d(1, c1, 3, 1, 1)
        self.conv1b = nn.Conv2d(c1, c1, 3, 1, 1)
        self.conv2a = nn.Conv2d(c1, c2, 3, 1, 1)
        self.conv2b = nn.Conv2d(c2, c2, 3, 1, 1)
        self.conv3a = nn.Conv2d(c2, c3, 3, 1, 1)
        self.conv3b = nn.Conv2d(c3, c3, 3, 1, 1)
        self.conv4a = nn.Conv2d(c3, c4, 3, 1, 1)
        self.conv4b = nn.Conv2d(c4, c4, 3, 1, 1)
        self.convPa = nn.Conv2d(c4, head, 3, 1, 1)
        self.convPb = nn.Conv2d(head, COARSE_STRIDE**2 + 1, 1, 1, 0)
        self.convDa = nn.Conv2d(c4, head, 3, 1, 1)
        self.convDb = nn.Conv2d(head, DESCRIPTOR_DIM, 1, 1, 0)

    def forward(self, x: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        x = self.relu(self.conv1a(x))
        x = self.pool(self.relu(self.conv1b(x)))
        x = self.relu(self.conv2a(x))
        x = self.pool(self.relu(self.conv2b(x)))
        x = self.relu(self.conv3a(x))
        x = self.pool(self.relu(self.conv3b(x)))
        x = self.relu(self.conv4a(x))
        x = self.relu(self.conv4b(x))
        semi = self.convPb(self.relu(self.convPa(x)))
        coarse = self.convDb(self.relu(self.convDa(x)))
        return semi, coarse


def load_network(weights_path) -> BackboneNet:
    """Load the pretrained checkpoint into evaluation mode."""
    try:
        state = torch.load(weights_path, map_location="cpu", weights_only=True)
    except FileNotFoundError:
        raise MissingWeights(f"checkpoint not found: {weights_path}") from None
    except Exception as exc:
        raise BadCheckpoint(f"{weights_path}: not a loadable checkpoint ({exc})") from None
    net = BackboneNet()
    try:
        net.load_state_dict(state)
    except (RuntimeError, TypeError, AttributeError) as exc:
        raise BadCheckpoint(f"{weights_path}: {exc}") from None
    net.eval()
    return net


def dense_extract(net: BackboneNet, gray: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Full-resolution descriptors and keypoint scores for one frame.

    ``gray`` is float (H, W) in [0, 1] with both sides divisible by 8.
    Returns (descriptors (H, W, 256) float32, unit-norm per pixel; scores
    (H, W) float32 in [0, 1]).  The coarse descriptor grid is normalized,
    bilinearly upsampled to pixel resolution, and normalized again; scores
    come from the per-cell softmax with the no-keypoint bin dropped.
    """
    gray = np.asarray(gray, dtype=np.float32)
    if gray.ndim != 2:
        raise ValueError(f"expected a single-channel image, got shape {gray.shape}")
    height, width = gray.shape
    if height % COARSE_STRIDE or width % COARSE_STRIDE:
        raise ValueError(f"image sides must be divisible by {COARSE_STRIDE}, got {gray.shape}")
    with torch.no_grad():
        x = torch.from_numpy(gray)[None, None]
        semi, coarse = net(x)
        cells = F.softmax(semi, dim=1)[:, :-1]  # drop the no-keypoint bin
        scores = F.pixel_shuffle(cells, COARSE_STRIDE)[0, 0]
        coarse = F.normalize(coarse, p=2, dim=1)
        dense = F.interpolate(coarse, size=(height, width), mode="bilinear", align_corners=False)
        dense = F.normalize(dense, p=2, dim=1)[0]
    descriptors = dense.permute(1, 2, 0).contiguous().numpy().astype(np.float32, copy=False)
    return descriptors, scores.numpy().astype(np.float32, copy=False)
