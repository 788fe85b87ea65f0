"""Streaming-data anonymization: information reduction, k-anonymous
clustering over message streams, and a benchmark harness."""

from .categorizer import CategoryDictionary, encode
from .engine import Cluster, Engine, ReleasedTuple
from .errors import (
    ConfigError,
    ContractViolation,
    ParseError,
    StreamAnonError,
    TypeMismatchError,
    UnknownCategoryError,
    ValidationError,
)
from .model import (
    AnonConfig,
    Message,
    ReductionConfig,
    load_config,
    parse_message,
    to_document,
)
from .reduction import Drop, DropKind, apply_pipeline
from .transport import Endpoint, RunReport, format_released, run_pipeline

__all__ = [
    "AnonConfig",
    "CategoryDictionary",
    "Cluster",
    "ConfigError",
    "ContractViolation",
    "Drop",
    "DropKind",
    "Endpoint",
    "Engine",
    "Message",
    "ParseError",
    "ReductionConfig",
    "ReleasedTuple",
    "RunReport",
    "StreamAnonError",
    "TypeMismatchError",
    "UnknownCategoryError",
    "ValidationError",
    "apply_pipeline",
    "encode",
    "format_released",
    "load_config",
    "parse_message",
    "run_pipeline",
    "to_document",
]
