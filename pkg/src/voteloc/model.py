"""Per-point predictor: a residual MLP from descriptor to (direction, size).

The network is an input projection to a 128-wide hidden state, a stack of
residual blocks h <- h + relu(W h + c), and a linear head with four outputs:
an unnormalized 2-vector center direction and a 2-vector relative box size.
Training supervises the cosine of the raw direction (normalization happens
only at inference, so there is no gradient singularity at the origin) plus a
squared size error.  Everything here is plain numpy; gradients are written
out by hand and checked against finite differences in the tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import LOSS_VARIANTS
from .errors import DegenerateDirection, EmptyBox, ShapeMismatch
from .geometry import ABS_SIZE_UNIT, DEGENERATE_EPS, BBox, RelSize, UnitDir
from .sampling import (
    DescriptorMap,
    SamplerConfig,
    clamp_to_map,
    interpolate_many,
    strata_size,
    stratified_sample,
)

DEFAULT_HIDDEN = 128
DEFAULT_BLOCKS = 20

_PARAM_NAMES = ("proj_w", "proj_b", "block_w", "block_b", "head_w", "head_b")


@dataclass(frozen=True)
class MLPWeights:
    """All network parameters.

    proj_w (hidden, dim), proj_b (hidden,), block_w (blocks, hidden, hidden),
    block_b (blocks, hidden), head_w (4, hidden), head_b (4,).  Blocks are
    stored stacked on a leading axis.
    """

    proj_w: np.ndarray
    proj_b: np.ndarray
    block_w: np.ndarray
    block_b: np.ndarray
    head_w: np.ndarray
    head_b: np.ndarray

    def __post_init__(self) -> None:
        hidden, dim = self.proj_w.shape
        blocks = self.block_w.shape[0]
        expect = {
            "proj_b": (hidden,),
            "block_w": (blocks, hidden, hidden),
            "block_b": (blocks, hidden),
            "head_w": (4, hidden),
            "head_b": (4,),
        }
        for name, shape in expect.items():
            if getattr(self, name).shape != shape:
                raise ShapeMismatch(f"{name}: expected {shape}, got {getattr(self, name).shape}")
        for name in _PARAM_NAMES:
            if not np.isfinite(getattr(self, name)).all():
                raise ValueError(f"{name} contains non-finite values")

    @property
    def dim(self) -> int:
        return self.proj_w.shape[1]

    @property
    def hidden(self) -> int:
        return self.proj_w.shape[0]

    @property
    def blocks(self) -> int:
        return self.block_w.shape[0]

    @property
    def dtype(self) -> np.dtype:
        return self.proj_w.dtype

    def params(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in _PARAM_NAMES}


def init_weights(
    dim: int,
    hidden: int = DEFAULT_HIDDEN,
    blocks: int = DEFAULT_BLOCKS,
    seed: int = 0,
    dtype=np.float32,
) -> MLPWeights:
    """He-style init; residual branches are damped by 1/sqrt(2*blocks) so the
    hidden state's variance stays O(1) through the stack."""
    rng = np.random.default_rng(seed)
    damp = 1.0 / np.sqrt(2.0 * blocks)
    return MLPWeights(
        proj_w=rng.normal(0.0, np.sqrt(2.0 / dim), (hidden, dim)).astype(dtype),
        proj_b=np.zeros(hidden, dtype=dtype),
        block_w=rng.normal(0.0, damp * np.sqrt(2.0 / hidden), (blocks, hidden, hidden)).astype(dtype),
        block_b=np.zeros((blocks, hidden), dtype=dtype),
        head_w=rng.normal(0.0, np.sqrt(1.0 / hidden), (4, hidden)).astype(dtype),
        head_b=np.zeros(4, dtype=dtype),
    )


def _as_batch(w: MLPWeights, descriptors) -> np.ndarray:
    x = np.asarray(descriptors, dtype=w.dtype)
    squeezed = x.ndim == 1
    if squeezed:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != w.dim:
        raise ShapeMismatch(f"descriptor length {x.shape[-1]} != network dim {w.dim}")
    return x


def _forward_batch(w: MLPWeights, x: np.ndarray):
    """Returns (out (n, 4), cache) with everything backward needs."""
    z0 = x @ w.proj_w.T + w.proj_b
    h = np.maximum(z0, 0.0)
    hs = [h]
    zs = []
    for k in range(w.blocks):
        z = h @ w.block_w[k].T + w.block_b[k]
        h = h + np.maximum(z, 0.0)
        zs.append(z)
        hs.append(h)
    out = h @ w.head_w.T + w.head_b
    return out, (x, z0, zs, hs)


def forward(w: MLPWeights, descriptor) -> tuple[np.ndarray, RelSize]:
    """Single-descriptor forward pass: (raw unnormalized direction, size)."""
    x = _as_batch(w, descriptor)
    out, _ = _forward_batch(w, x)
    raw = out[0, :2].astype(np.float64)
    return raw, RelSize(float(out[0, 2]), float(out[0, 3]))


def predict(w: MLPWeights, descriptor) -> tuple[UnitDir, RelSize]:
    """Inference: normalized direction.  Raises DegenerateDirection when the
    raw direction is too small to normalize."""
    raw, size = forward(w, descriptor)
    norm = float(np.hypot(raw[0], raw[1]))
    if norm <= 1e-6:
        raise DegenerateDirection(f"raw direction norm {norm:.2e} <= 1e-6")
    return UnitDir(raw[0] / norm, raw[1] / norm), size


def predict_batch(
    w: MLPWeights, descriptors: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Batch inference returning float64 (dirs, sizes, valid).  Rows whose raw
    direction cannot be normalized are flagged invalid instead of raising."""
    x = _as_batch(w, descriptors)
    out, _ = _forward_batch(w, x)
    out = out.astype(np.float64)
    raw = out[:, :2]
    norms = np.linalg.norm(raw, axis=1)
    valid = norms > 1e-6
    dirs = np.zeros_like(raw)
    dirs[valid] = raw[valid] / norms[valid, None]
    return dirs, out[:, 2:], valid


@dataclass(frozen=True)
class TrainSample:
    descriptor: np.ndarray
    target_dir: UnitDir
    target_relsize: RelSize


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 3e-4
    weight_decay: float = 1e-4
    epochs: int = 50
    frames_per_batch: int = 4
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("learning_rate", "epochs", "frames_per_batch", "adam_eps"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.weight_decay < 0:
            raise ValueError("weight_decay must be >= 0")


def _dir_loss_terms(cos: np.ndarray, variant: str) -> tuple[np.ndarray, np.ndarray]:
    """Per-sample direction loss and dL/dcos for the configured variant."""
    if variant == "one_minus_cos_sq":
        return (1.0 - cos) ** 2, -2.0 * (1.0 - cos)
    if variant == "cos_sq":
        return cos**2, 2.0 * cos
    if variant == "neg_cos_sq":
        return -(cos**2), -2.0 * cos
    raise ValueError(f"loss variant must be one of {', '.join(LOSS_VARIANTS)}")


def _loss_and_dout(
    out: np.ndarray,
    target_dirs: np.ndarray,
    target_sizes: np.ndarray,
    variant: str,
    size_weight: float,
) -> tuple[float, np.ndarray]:
    """Summed loss over the batch and its gradient w.r.t. the raw outputs.
    The cosine of a zero raw direction is defined as 0 (flat there)."""
    raw = out[:, :2]
    size = out[:, 2:]
    norms = np.linalg.norm(raw, axis=1)
    safe = norms > 1e-12
    inv = np.where(safe, 1.0 / np.where(safe, norms, 1.0), 0.0)
    cos = np.einsum("ij,ij->i", raw, target_dirs) * inv
    dir_loss, dldc = _dir_loss_terms(cos, variant)
    size_err = size - target_sizes
    total = float(dir_loss.sum() + size_weight * (size_err**2).sum())
    dout = np.empty_like(out)
    # d cos / d raw = (t - cos * raw/|raw|) / |raw|, zero at the origin
    dcos = (target_dirs - cos[:, None] * raw * inv[:, None]) * inv[:, None]
    dout[:, :2] = dldc[:, None] * dcos
    dout[:, 2:] = 2.0 * size_weight * size_err
    return total, dout


def loss(
    raw_dir,
    relsize,
    target: TrainSample,
    variant: str = "one_minus_cos_sq",
    size_weight: float = 1.0,
) -> float:
    """Single-sample training loss on raw (unnormalized) outputs."""
    raw = np.asarray(raw_dir, dtype=np.float64).reshape(2)
    if isinstance(relsize, RelSize):
        size = np.array([relsize.sx, relsize.sy])
    else:
        size = np.asarray(relsize, dtype=np.float64).reshape(2)
    out = np.concatenate([raw, size])[None, :]
    tdir = np.array([[target.target_dir.dx, target.target_dir.dy]])
    tsize = np.array([[target.target_relsize.sx, target.target_relsize.sy]])
    total, _ = _loss_and_dout(out, tdir, tsize, variant, size_weight)
    return total


def _stack_targets(samples) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    desc = np.stack([np.asarray(s.descriptor) for s in samples])
    tdir = np.array([(s.target_dir.dx, s.target_dir.dy) for s in samples])
    tsize = np.array([(s.target_relsize.sx, s.target_relsize.sy) for s in samples])
    return desc, tdir, tsize


def backward(
    w: MLPWeights,
    samples,
    variant: str = "one_minus_cos_sq",
    size_weight: float = 1.0,
) -> tuple[float, dict[str, np.ndarray]]:
    """Mean loss over the samples and its exact gradients per parameter.

    Accepts one TrainSample or a sequence; a sequence is pooled into a single
    step (losses averaged).
    """
    if isinstance(samples, TrainSample):
        samples = [samples]
    desc, tdir, tsize = _stack_targets(samples)
    return _backward_arrays(w, desc, tdir, tsize, variant, size_weight)


@dataclass(frozen=True)
class AdamState:
    step: int
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]


def init_adam_state(w: MLPWeights) -> AdamState:
    zeros = {name: np.zeros_like(getattr(w, name)) for name in _PARAM_NAMES}
    return AdamState(0, zeros, {k: v.copy() for k, v in zeros.items()})


def adam_step(
    w: MLPWeights,
    grads: dict[str, np.ndarray],
    state: AdamState,
    config: TrainConfig,
) -> tuple[MLPWeights, AdamState]:
    """Classic Adam with weight decay folded into the gradient."""
    t = state.step + 1
    b1, b2 = config.adam_beta1, config.adam_beta2
    c1 = 1.0 - b1**t
    c2 = 1.0 - b2**t
    new_params: dict[str, np.ndarray] = {}
    new_m: dict[str, np.ndarray] = {}
    new_v: dict[str, np.ndarray] = {}
    for name in _PARAM_NAMES:
        param = getattr(w, name)
        g = grads[name] + config.weight_decay * param
        m = b1 * state.m[name] + (1.0 - b1) * g
        v = b2 * state.v[name] + (1.0 - b2) * g * g
        step = config.learning_rate * (m / c1) / (np.sqrt(v / c2) + config.adam_eps)
        new_params[name] = (param - step).astype(param.dtype)
        new_m[name] = m
        new_v[name] = v
    return MLPWeights(**new_params), AdamState(t, new_m, new_v)


def _frame_samples(
    frames, sampler: SamplerConfig, absolute_size: bool = False
) -> list[list[TrainSample]]:
    """Per-frame training samples: stratified points restricted to the box,
    descriptors interpolated, targets from the box geometry."""
    groups: list[list[TrainSample]] = []
    for i, (dmap, box) in enumerate(frames):
        if not isinstance(dmap, DescriptorMap) or not isinstance(box, BBox):
            raise TypeError("frames must be (DescriptorMap, BBox) pairs")
        cell = strata_size(dmap.height, dmap.width, sampler.strata_divisor)
        pts = clamp_to_map(
            stratified_sample(dmap.height, dmap.width, cell, sampler.seed + i),
            dmap.height,
            dmap.width,
        )
        inside = (
            (pts[:, 0] >= box.x0)
            & (pts[:, 0] <= box.x1)
            & (pts[:, 1] >= box.y0)
            & (pts[:, 1] <= box.y1)
        )
        pts = pts[inside]
        delta = np.array([box.cx, box.cy]) - pts
        dist = np.linalg.norm(delta, axis=1)
        ok = dist > DEGENERATE_EPS
        pts, delta, dist = pts[ok], delta[ok], dist[ok]
        if len(pts) == 0:
            raise EmptyBox(f"frame {i}: no stratified point falls inside the box")
        desc = interpolate_many(dmap, pts)
        dirs = delta / dist[:, None]
        if absolute_size:
            # ablation: regress the box size itself (in ABS_SIZE_UNIT pixels)
            sizes = np.broadcast_to(
                np.array([box.w, box.h]) / ABS_SIZE_UNIT, pts.shape
            )
        else:
            sizes = (pts - np.array([box.cx, box.cy])) / np.array([box.w, box.h])
        groups.append(
            [
                TrainSample(
                    desc[j].copy(),
                    UnitDir(float(dirs[j, 0]), float(dirs[j, 1])),
                    RelSize(float(sizes[j, 0]), float(sizes[j, 1])),
                )
                for j in range(len(pts))
            ]
        )
    return groups


def make_training_set(
    frames, sampler: SamplerConfig, absolute_size: bool = False
) -> list[TrainSample]:
    """Flat training set over all frames; each frame carries exactly one box."""
    out: list[TrainSample] = []
    for group in _frame_samples(frames, sampler, absolute_size):
        out.extend(group)
    return out


def train(
    frames,
    train_config: TrainConfig,
    sampler_config: SamplerConfig,
    hidden: int = DEFAULT_HIDDEN,
    blocks: int = DEFAULT_BLOCKS,
    loss_variant: str = "one_minus_cos_sq",
    size_weight: float = 1.0,
    absolute_size: bool = False,
    dtype=np.float32,
) -> tuple[MLPWeights, list[float]]:
    """Full training loop: epochs over shuffled frame batches, each batch's
    samples pooled into one optimizer step.  Returns the final weights and
    the per-epoch mean loss."""
    if len(frames) == 0:
        raise ValueError("need at least one training frame")
    groups = _frame_samples(frames, sampler_config, absolute_size)
    batches_src = [_stack_targets(g) for g in groups]
    dim = batches_src[0][0].shape[1]
    w = init_weights(dim, hidden, blocks, seed=train_config.seed, dtype=dtype)
    state = init_adam_state(w)
    shuffle = np.random.default_rng(train_config.seed + 1)
    per_epoch: list[float] = []
    nb = train_config.frames_per_batch
    for _ in range(train_config.epochs):
        order = shuffle.permutation(len(groups))
        step_losses = []
        for start in range(0, len(order), nb):
            chunk = order[start : start + nb]
            desc = np.vstack([batches_src[i][0] for i in chunk])
            tdir = np.vstack([batches_src[i][1] for i in chunk])
            tsize = np.vstack([batches_src[i][2] for i in chunk])
            step_loss, grads = _backward_arrays(
                w, desc, tdir, tsize, loss_variant, size_weight
            )
            w, state = adam_step(w, grads, state, train_config)
            step_losses.append(step_loss)
        per_epoch.append(float(np.mean(step_losses)))
    return w, per_epoch


def _backward_arrays(
    w: MLPWeights,
    desc: np.ndarray,
    tdir: np.ndarray,
    tsize: np.ndarray,
    variant: str,
    size_weight: float,
) -> tuple[float, dict[str, np.ndarray]]:
    """Array-input twin of backward, shared by the train loop."""
    x = _as_batch(w, desc)
    out, (x, z0, zs, hs) = _forward_batch(w, x)
    n = out.shape[0]
    total, dout = _loss_and_dout(out.astype(np.float64), tdir, tsize, variant, size_weight)
    dout = (dout / n).astype(w.dtype)
    grads = {name: np.zeros_like(getattr(w, name)) for name in _PARAM_NAMES}
    grads["head_w"] = dout.T @ hs[-1]
    grads["head_b"] = dout.sum(axis=0)
    dh = dout @ w.head_w
    for k in range(w.blocks - 1, -1, -1):
        dz = dh * (zs[k] > 0)
        grads["block_w"][k] = dz.T @ hs[k]
        grads["block_b"][k] = dz.sum(axis=0)
        dh = dh + dz @ w.block_w[k]
    dz0 = dh * (z0 > 0)
    grads["proj_w"] = dz0.T @ x
    grads["proj_b"] = dz0.sum(axis=0)
    return total / n, grads
