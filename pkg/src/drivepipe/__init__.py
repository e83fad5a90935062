"""Post-processing and evaluation for structured BEV driving-planner output."""

from .core import (
    COMPLETE_LEN,
    DEFAULT_DT,
    DegenerateSegmentError,
    EgoHistory,
    EgoSample,
    EvalRecord,
    RefinementConfig,
    StructuredResponse,
    Trajectory,
    Waypoint,
    heading_change,
)
from .metrics import EvalSummary, RecordResult, ade, evaluate_record, smoothness, summarize
from .normalize import EmptyPredictionError, is_complete, normalize_length
from .pipeline import RunConfig, load_records, run_pipeline, save_records, stub_generate
from .refine import (
    RefinementReport,
    adaptive_window,
    detect_keypoints,
    refine,
    savgol_weights,
    zscore_filter,
)
from .structured import (
    MalformedStructureError,
    MalformedTrajectoryError,
    ParseError,
    PromptSpec,
    PromptTemplates,
    SpecialTokens,
    build_prompt,
    parse_response,
    serialize_response,
)

__version__ = "0.1.0"

__all__ = [
    "COMPLETE_LEN",
    "DEFAULT_DT",
    "DegenerateSegmentError",
    "EgoHistory",
    "EgoSample",
    "EmptyPredictionError",
    "EvalRecord",
    "EvalSummary",
    "MalformedStructureError",
    "MalformedTrajectoryError",
    "ParseError",
    "PromptSpec",
    "PromptTemplates",
    "RecordResult",
    "RefinementConfig",
    "RefinementReport",
    "RunConfig",
    "SpecialTokens",
    "StructuredResponse",
    "Trajectory",
    "Waypoint",
    "ade",
    "adaptive_window",
    "build_prompt",
    "detect_keypoints",
    "evaluate_record",
    "heading_change",
    "is_complete",
    "load_records",
    "normalize_length",
    "parse_response",
    "refine",
    "run_pipeline",
    "save_records",
    "savgol_weights",
    "serialize_response",
    "smoothness",
    "stub_generate",
    "summarize",
    "zscore_filter",
]
