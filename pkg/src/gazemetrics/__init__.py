"""Real-time gaze analytics engine.

Classifies a raw gaze stream into fixations and saccades (velocity-threshold
identification), maps them to words and paragraphs of a page layout
manifest, and maintains per-word fixation and reading measures
incrementally, with replay, simulation, persistence, and comparison tooling.
"""

from .aoi import AoiMapper, WordHitIndex, build_index, map_point_to_word
from .compare import ComparisonReport, compare, compare_tables
from .gazelog import read_gaze_log, write_gaze_log
from .ivt import IvtClassifier, IvtConfig, Label, SampleLabel, angular_velocity, gaze_direction
from .manifest import load_manifest, make_grid_manifest, manifest_from_dict, manifest_to_dict, save_manifest
from .metrics import ReadingState, build_saccade, metrics_csv
from .oracle import oracle_from_log, oracle_metrics
from .session import (
    FlushPolicy,
    LoadedSession,
    SessionConfig,
    SessionPipeline,
    export_loaded_metrics,
    load_session,
)
from .simulate import ReadingProfile, simulate
from .types import (
    Fixation,
    GazeSample,
    LayoutManifest,
    MediaAoi,
    ParagraphAoi,
    Rect,
    Saccade,
    ScreenModel,
    ViewportState,
    WordAoi,
    WordMetrics,
    page_to_screen,
    screen_to_page,
)

__version__ = "0.1.0"
