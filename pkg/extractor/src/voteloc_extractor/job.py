"""Extraction job description and validation."""

from __future__ import annotations

from dataclasses import dataclass

# the engine expects query maps at one of these (width, height) resolutions
TARGET_RESOLUTIONS = ((640, 480), (480, 640))


@dataclass(frozen=True)
class ExtractionJob:
    images: tuple[str, ...]
    out_dir: str
    weights_path: str
    resolution: tuple[int, int] = (640, 480)
    augment_count: int = 0
    blur: bool = False
    gauss_noise: bool = False
    iso_noise: bool = False
    brightness_contrast: bool = False
    seed: int = 0
    boxes_path: str | None = None
    video_stride: int = 1

    def __post_init__(self) -> None:
        if not self.images:
            raise ValueError("no input images or videos")
        if tuple(self.resolution) not in TARGET_RESOLUTIONS:
            allowed = " or ".join(f"{w}x{h}" for w, h in TARGET_RESOLUTIONS)
            raise ValueError(f"resolution must be {allowed}, got {self.resolution}")
        if self.augment_count < 0:
            raise ValueError("augment_count must be >= 0")
        if self.video_stride < 1:
            raise ValueError("video_stride must be >= 1")
