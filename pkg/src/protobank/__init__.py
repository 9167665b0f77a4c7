"""Training-free class-incremental learning over precomputed embeddings.

Build a per-class prototype bank from a single pass over a task stream,
classify by nearest prototype, and account for memory byte-exactly.
"""

from .bank import ClassPrototype, MemoryBank, per_class_bytes
from .classify import EvaluationReport, Prediction, evaluate, predict, predict_task_aware
from .cluster import ClusterAssignment, PseudoGrouping, kmeans, pseudo_class_id, pseudo_group
from .embio import EmbeddingDataset, read_embeddings, synth_gaussian, write_embeddings
from .errors import (
    DegenerateVectorError,
    DimensionError,
    EmptyBankError,
    EmptyGroupError,
    FormatError,
    ProtobankError,
    ProtocolError,
    SplitError,
    ValidationError,
)
from .harness import (
    EvaluationRow,
    RunConfig,
    RunReport,
    matrix_to_csv,
    render_report,
    report_to_json,
    run_benchmark,
    run_evaluation,
    run_training,
)
from .stream import (
    LabeledEmbedding,
    StreamReport,
    Task,
    TaskStream,
    group_by_class,
    make_nc_scenario,
    validate_stream,
)
from .vectors import Embedding, Metric, cosine_similarity, l2_distance, unit_normalize

__version__ = "0.1.0"

__all__ = [
    "ClassPrototype",
    "ClusterAssignment",
    "DegenerateVectorError",
    "DimensionError",
    "Embedding",
    "EmbeddingDataset",
    "EmptyBankError",
    "EmptyGroupError",
    "EvaluationReport",
    "EvaluationRow",
    "FormatError",
    "LabeledEmbedding",
    "MemoryBank",
    "Metric",
    "Prediction",
    "ProtobankError",
    "ProtocolError",
    "PseudoGrouping",
    "RunConfig",
    "RunReport",
    "SplitError",
    "StreamReport",
    "Task",
    "TaskStream",
    "ValidationError",
    "cosine_similarity",
    "evaluate",
    "group_by_class",
    "kmeans",
    "l2_distance",
    "make_nc_scenario",
    "matrix_to_csv",
    "per_class_bytes",
    "predict",
    "predict_task_aware",
    "pseudo_class_id",
    "pseudo_group",
    "read_embeddings",
    "render_report",
    "report_to_json",
    "run_benchmark",
    "run_evaluation",
    "run_training",
    "synth_gaussian",
    "unit_normalize",
    "validate_stream",
    "write_embeddings",
]
