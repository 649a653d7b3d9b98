"""One-shot object localization by pairwise center voting.

A small residual MLP maps each densely sampled descriptor to a unit direction
toward the object center and a relative box size; pairs of sampled points are
intersected analytically and their votes histogrammed on a downsampled grid,
whose peak (or NMS peaks) yields the box.  The package also ships the analytic
covariance of a pair vote with its Monte-Carlo oracle, synthetic scenes for
end-to-end tests, metrics, binary file formats, and a CLI.
"""

from ._kernels import BACKEND
from .config import RunConfig, format_config, parse_config, read_config, write_config
from .errors import (
    AnnotationMismatch,
    BoxOutOfBounds,
    ConfigError,
    DegenerateConfiguration,
    DegenerateDirection,
    DegeneratePoint,
    EmptyBox,
    EmptyGrid,
    FormatError,
    ImageTooSmall,
    InsufficientPoints,
    InvalidSize,
    MissingPrediction,
    NoScoreMap,
    NoSizeEvidence,
    OutOfBounds,
    ParallelConfiguration,
    ShapeMismatch,
    VotelocError,
)
from .formats import (
    read_annotations,
    read_descriptor_map,
    read_weights,
    write_annotations,
    write_descriptor_map,
    write_weights,
)
from .geometry import (
    BBox,
    PairGeometry,
    Point2,
    RelSize,
    UnitDir,
    absolute_size_from_vote,
    center_direction,
    cov_analytic,
    cov_det_analytic,
    intersect_pair,
    intersection_jacobian,
    jacobian_det,
    pair_frame,
    relative_size,
)
from .metrics import EvalRecord, average_precision, iou, mean_recall, recall_at
from .model import (
    AdamState,
    MLPWeights,
    TrainConfig,
    TrainSample,
    adam_step,
    backward,
    forward,
    init_adam_state,
    init_weights,
    loss,
    make_training_set,
    predict,
    predict_batch,
    train,
)
from .sampling import (
    DescriptorMap,
    SampledPoint,
    SamplerConfig,
    interpolate_descriptor,
    interpolate_many,
    sample_pairs,
    sparse_keypoints,
    strata_size,
    stratified_sample,
)
from .synth import (
    CoordEmbedding,
    SyntheticScene,
    corner_center_trial,
    dual_texture_scores,
    gen_direction_field,
    gen_scene,
    make_multi_instance_scenes,
    make_scene_set,
    monte_carlo_cov,
)
from .voting import (
    AccumulatorGrid,
    Detection,
    VoteField,
    accumulate,
    detect,
    find_peak,
    heatmap_image,
    localize,
    vote_grid,
)

__version__ = "0.1.0"
