"""Exception hierarchy for the voting localization engine."""


class VotelocError(Exception):
    """Base class for all engine errors."""


# -- geometry ----------------------------------------------------------------

class DegeneratePoint(VotelocError):
    """Point coincides with the target; no direction is defined."""


class InvalidSize(VotelocError):
    """Box width or height is not strictly positive."""


class ParallelConfiguration(VotelocError):
    """Pair directions are (numerically) parallel; no intersection."""


# -- sampling ----------------------------------------------------------------

class ImageTooSmall(VotelocError):
    """Image smaller than one stratum; cannot stratify."""


class OutOfBounds(VotelocError):
    """Query point lies outside the descriptor map's interpolation domain."""


class NoScoreMap(VotelocError):
    """Keypoint extraction requested but the map carries no score field."""


class InsufficientPoints(VotelocError):
    """Fewer than two points available for pair sampling."""


# -- model -------------------------------------------------------------------

class ShapeMismatch(VotelocError):
    """Input dimensionality does not match the network."""


class DegenerateDirection(VotelocError):
    """Raw direction output too close to zero to normalize."""


class EmptyBox(VotelocError):
    """No sampled point fell inside an annotated box."""


# -- voting ------------------------------------------------------------------

class EmptyGrid(VotelocError):
    """Accumulator holds no votes; no peak exists."""


class NoSizeEvidence(VotelocError):
    """Peak neighborhood carries no size estimate on some axis."""


# -- synth -------------------------------------------------------------------

class DegenerateConfiguration(VotelocError):
    """Monte-Carlo draw rejection rate too high for a meaningful estimate."""


class BoxOutOfBounds(VotelocError):
    """Scene box extends past the image bounds."""


# -- eval --------------------------------------------------------------------

class MissingPrediction(VotelocError):
    """Localization record lacks the single required prediction."""


# -- io ----------------------------------------------------------------------

class FormatError(VotelocError):
    """Malformed or truncated binary/text input file."""


class AnnotationMismatch(VotelocError):
    """Annotations and descriptor maps disagree (missing frame, wrong box
    count for the requested operation)."""


class ConfigError(VotelocError):
    """Unknown key or invalid value in a run configuration."""
