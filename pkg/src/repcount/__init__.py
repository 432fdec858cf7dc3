"""Repetition counting from body-pose landmarks fused with joint angles.

The pipeline: landmark frames -> joint angles + fused features -> per-frame
saliency scores (density map) -> hysteresis action trigger -> count, plus
MAE/OBO evaluation tooling and a synthetic-motion test harness.
"""

from .errors import (
    BadRule,
    BadSpec,
    BadWindow,
    DegenerateSegment,
    DuplicatePrediction,
    DuplicateVideoId,
    EmptyDataset,
    IoFailure,
    MissingPrediction,
    MixedModes,
    ModeMismatch,
    NonFiniteLoss,
    NonMonotonicFrameIndex,
    ParseError,
    RepCountError,
    SideMismatch,
    StaleCorrection,
    UnknownAction,
    WrongLandmarkCount,
    ZeroGroundTruth,
)
from .geometry import (
    AngleSet,
    FeatureMode,
    FeatureVector,
    PoseFeatureExtractor,
    Side,
    assemble_feature_matrix,
    assemble_features,
    average_angles,
    compute_joint_angle,
    feature_dim,
    five_joint_angles,
    sequence_angles,
)
from .io import (
    LandmarkSequenceFile,
    load_annotations,
    load_landmarks,
    load_ledger,
    parse_annotations,
    parse_landmarks,
    parse_ledger,
    save_annotations,
    save_landmarks,
    save_ledger,
    write_annotations,
    write_landmarks,
    write_ledger,
)
from .landmarks import JOINT_TRIPLETS, LandmarkFrame, N_LANDMARKS
from .metrics import (
    Correction,
    CorrectionLedger,
    EvalReport,
    Prediction,
    VideoAnnotation,
    apply_corrections,
    compare_modes,
    evaluate,
    report_csv,
)
from .pipeline import RepetitionCounter, geometric_density, model_density
from .scorer import (
    GeometricRule,
    LabeledPose,
    SaliencyScorer,
    ScorerModel,
    TrainConfig,
    geometric_score,
    gradient_check,
    init_model,
    load_checkpoint,
    parse_checkpoint,
    save_checkpoint,
    score_frame,
    train,
)
from .synth import ActionTemplate, SynthOutput, SynthSpec, YawStep, synthesize, template_rule
from .trigger import (
    CountResult,
    DensityMap,
    RepEvent,
    TriggerConfig,
    TriggerState,
    count_reps,
    density_csv,
    smooth,
)

__version__ = "0.1.0"
