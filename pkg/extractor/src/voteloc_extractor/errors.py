"""Extractor error hierarchy."""


class ExtractorError(Exception):
    """Base class for extraction failures."""


class MissingWeights(ExtractorError):
    """The network checkpoint file does not exist."""


class BadCheckpoint(ExtractorError):
    """The checkpoint exists but does not match the network architecture."""


class UnreadableInput(ExtractorError):
    """An input image or video could not be decoded."""
