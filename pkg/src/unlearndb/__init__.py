"""Embedding-space incremental learning with exact class unlearning.

Vectors live in two paired stores — retained and unlearned — and
removing a class is an atomic migration of its records between them.
Inference first asks the unlearned store's membership filter whether an
input belongs to a removed class; flagged inputs are redirected by a
configurable strategy, everything else goes to the underlying model.
"""

from .config import RunConfig, resolve_config
from .data import (
    SyntheticSpec,
    generate_synthetic,
    read_embeddings,
    split,
    write_embeddings,
)
from .engine import (
    CalibrationPoint,
    FilterCalibration,
    MigrationReport,
    UnlearnRequest,
    calibrate_threshold,
    identify_class,
    max_similarity,
    membership_filter,
    sweep_threshold,
    unlearn,
)
from .errors import (
    ArgumentError,
    DataError,
    DegenerateModel,
    DegenerateVector,
    DimensionMismatch,
    DuplicateId,
    EmptyStore,
    EngineError,
    FormatError,
    InvalidWorkload,
    MissingClass,
)
from .inference import (
    NearestCentroidSurrogate,
    Prediction,
    Strategy,
    TableSurrogate,
    inverse_probabilities,
    predict,
    strategy_inverse,
    strategy_nearest,
    strategy_proportional,
    strategy_uniform,
)
from .metrics import (
    MetricsReport,
    evaluate,
    expected_cf_accuracy,
    expected_cr_accuracy,
    report_from_json,
)
from .pipeline import (
    BUILTIN_WORKLOADS,
    CostModel,
    Method,
    Task,
    TaskType,
    Timeline,
    builtin_workload,
    initial_state,
    parse_workload_text,
    simulate,
    speedup,
)
from .protocol import ProtocolResult, ProtocolSettings, StepOutcome, run_protocol
from .store import (
    ClassSummary,
    VectorRecord,
    VectorStore,
    cosine_similarity,
    migrate_class,
    pair_stores,
)

__version__ = "0.1.0"

__all__ = [
    "ArgumentError",
    "BUILTIN_WORKLOADS",
    "CalibrationPoint",
    "ClassSummary",
    "CostModel",
    "DataError",
    "DegenerateModel",
    "DegenerateVector",
    "DimensionMismatch",
    "DuplicateId",
    "EmptyStore",
    "EngineError",
    "FilterCalibration",
    "FormatError",
    "InvalidWorkload",
    "Method",
    "MetricsReport",
    "MigrationReport",
    "MissingClass",
    "NearestCentroidSurrogate",
    "Prediction",
    "ProtocolResult",
    "ProtocolSettings",
    "RunConfig",
    "StepOutcome",
    "Strategy",
    "SyntheticSpec",
    "TableSurrogate",
    "Task",
    "TaskType",
    "Timeline",
    "UnlearnRequest",
    "VectorRecord",
    "VectorStore",
    "builtin_workload",
    "calibrate_threshold",
    "cosine_similarity",
    "evaluate",
    "expected_cf_accuracy",
    "expected_cr_accuracy",
    "generate_synthetic",
    "identify_class",
    "initial_state",
    "inverse_probabilities",
    "max_similarity",
    "membership_filter",
    "migrate_class",
    "pair_stores",
    "parse_workload_text",
    "predict",
    "read_embeddings",
    "report_from_json",
    "resolve_config",
    "run_protocol",
    "simulate",
    "speedup",
    "split",
    "strategy_inverse",
    "strategy_nearest",
    "strategy_proportional",
    "strategy_uniform",
    "sweep_threshold",
    "unlearn",
    "write_embeddings",
]
