"""Descriptor-map extraction for the voteloc localization engine.

Runs a pretrained dense keypoint/descriptor network over images or video
frames, optionally applies photometric training-time augmentations, and
writes the engine's binary descriptor-map format plus a matching annotation
file.  The engine is consumed only through those on-disk formats and its CLI;
nothing here imports it.
"""

from .errors import BadCheckpoint, ExtractorError, MissingWeights, UnreadableInput
from .job import ExtractionJob
from .pipeline import run_job

__all__ = [
    "BadCheckpoint",
    "ExtractionJob",
    "ExtractorError",
    "MissingWeights",
    "UnreadableInput",
    "run_job",
]
