"""Deterministic tabletop video-reasoning benchmark toolkit.

Procedurally generates episodes of simple objects acting on a ground plane,
replays them into exact per-frame trajectories, derives ground-truth labels
for three recognition tasks, and scores prediction files against them.

Plotting lives in `tabletop.viz` and the command line in `tabletop.cli`;
neither is imported here.
"""

from .actions import (
    LIFT_HEIGHT,
    MIN_ACTION_SPAN,
    ROTATE_DEGREES,
    ActionInstance,
    ActionProgram,
    EpisodeSeed,
    Interval,
    Pose,
)
from .camera import (
    MOVING_START,
    STATIC_LOCATION,
    BehindCameraError,
    CameraPose,
    CameraSchedule,
    GeometryError,
    Intrinsics,
    camera_schedule,
    ground_homography,
    image_to_ground,
    project,
    waypoint_set,
)
from .corpus import (
    EpisodeResult,
    GenerationReport,
    episode_rng,
    generate_corpus,
    generate_episode,
    iter_episodes,
    make_split,
    rederive_labels,
)
from .diagnostics import DiagnosticReport, diagnose
from .evaluate import (
    MetricsReport,
    PredictionSet,
    RandomBaselineReport,
    average_precision,
    closed_form_random,
    evaluate,
    multilabel_ap,
    random_baseline,
)
from .io import (
    SCHEMA_VERSION,
    EpisodeMetadata,
    SplitManifest,
    corpus_hash,
    program_from_metadata,
    read_episode,
    read_labels,
    read_predictions,
    read_split,
    write_episode,
    write_labels,
    write_predictions,
    write_split,
)
from .labels import (
    AtomicClass,
    BroadRelation,
    CompositeClass,
    LabelRecord,
    atomic_vocab,
    broad_relation,
    composite_vocab,
    derive_task1,
    derive_task2,
    derive_task3,
    make_label_record,
    quantize,
)
from .program import PROPOSAL_ATTEMPTS, propose_action, schedule_episode
from .simulate import (
    EpisodeAttributes,
    EpisodeTimeline,
    ObjectState,
    airborne_frame,
    episode_attributes,
    interpolate_pose,
    replay,
)
from .tracks import pixel_tracks, snitch_init_box, tracks_to_dict
from .validate import ProgramValidationError, validate_program, validate_scene
from .world import (
    COLORS,
    SNITCH_COLOR,
    ActionType,
    CameraMode,
    Material,
    ObjectSpec,
    PlacedObject,
    PlacementError,
    Scene,
    SceneConfig,
    Shape,
    Size,
    affordances,
    footprint_radius,
    spawn_scene,
)

__version__ = "0.1.0"
