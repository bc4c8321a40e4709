"""Reader-gaze supervision toolkit.

Segments fixations from saccades with a power-law attention-level model,
renders Gaussian gaze attention maps, and trains a CAM-sharing classifier
whose attention is pulled toward the reader's, weighted by a learnable
homoscedastic uncertainty.
"""

from .attention_maps import (
    AttentionMap,
    BBox,
    KernelConfig,
    bbox_map,
    downsample,
    gamap_bytes,
    iou,
    load_gamap,
    parse_gamap,
    png_bytes,
    render_gaze_map,
    save_gamap,
    scaled_kernel,
)
from .datasets import Manifest, ManifestEntry, SynthConfig, generate, load_manifest, save_manifest
from .network import (
    ClassifierParams,
    Example,
    FeatureStack,
    FilterBank,
    TrainConfig,
    ac_loss,
    cam,
    class_scores,
    extract_features,
    forward_cams,
    global_average_pool,
    gradients,
    make_filter_bank,
    mse_consistency,
    normalize_attention,
    total_loss,
)
from .segmentation import (
    AttentionLevelSeries,
    FixationMask,
    PowerLawFitConfig,
    attention_levels,
    calibrate_threshold,
    filter_fixations,
    fit_gamma,
    pool_threshold,
)
from .tracks import (
    GazeSample,
    GazeTrack,
    StepSeries,
    load_track,
    parse_track,
    save_track,
    serialize_track,
    step_lengths,
    validate_grade,
)
from .training import (
    EvalResult,
    EpochStats,
    evaluate,
    load_checkpoint,
    save_checkpoint,
    train,
    welch_t_test,
    write_history_csv,
)

__version__ = "0.1.0"
