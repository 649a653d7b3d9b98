"""Photometric training-time augmentations.

All operations are photometric, so box annotations carry over to augmented
frames unchanged.  Parameters are drawn from the supplied generator in a
fixed order, making every augmented frame deterministic per seed.
"""

from __future__ import annotations

import cv2
import numpy as np


def _apply_blur(image: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    sigma = float(rng.uniform(0.5, 2.0))
    return cv2.GaussianBlur(image, (0, 0), sigmaX=sigma, sigmaY=sigma)


def _apply_gauss_noise(image: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    sigma = float(rng.uniform(3.0, 12.0))
    noisy = image.astype(np.float32) + rng.normal(0.0, sigma, image.shape)
    return np.clip(noisy, 0.0, 255.0).astype(np.uint8)


def _apply_iso_noise(image: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    # sensor-style noise: signal-dependent shot noise plus per-channel gain drift
    shot = float(rng.uniform(0.3, 1.0))
    gains = rng.normal(1.0, 0.02, (1, 1, image.shape[2]))
    x = image.astype(np.float32)
    noisy = x * gains + np.sqrt(np.maximum(x, 0.0)) * shot * rng.standard_normal(x.shape)
    return np.clip(noisy, 0.0, 255.0).astype(np.uint8)


def _apply_brightness_contrast(image: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    contrast = float(rng.uniform(0.8, 1.2))
    brightness = float(rng.uniform(-20.0, 20.0))
    adjusted = contrast * (image.astype(np.float32) - 128.0) + 128.0 + brightness
    return np.clip(adjusted, 0.0, 255.0).astype(np.uint8)


def augment_image(
    image: np.ndarray,
    rng: np.random.Generator,
    *,
    blur: bool = False,
    gauss_noise: bool = False,
    iso_noise: bool = False,
    brightness_contrast: bool = False,
) -> np.ndarray:
    """One augmented variant of an (H, W, 3) uint8 image.

    Enabled stages are applied in the declaration order above; with nothing
    enabled the input is returned as a copy.
    """
    if image.ndim != 3 or image.dtype != np.uint8:
        raise ValueError(f"expected (H, W, C) uint8, got {image.shape} {image.dtype}")
    out = image.copy()
    if blur:
        out = _apply_blur(out, rng)
    if gauss_noise:
        out = _apply_gauss_noise(out, rng)
    if iso_noise:
        out = _apply_iso_noise(out, rng)
    if brightness_contrast:
        out = _apply_brightness_contrast(out, rng)
    return out
