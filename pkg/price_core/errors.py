"""
Error types raised across PriceRadar.
Every error is a RuntimeError so callers that only know the runner's
"❌ ..." convention still catch them.
"""
from typing import Optional, Sequence


class PriceRadarError(RuntimeError):
    """Base class for every domain error."""


class DimensionError(PriceRadarError):
    def __init__(self, op: str, *shapes: Sequence[int]):
        self.op = op
        self.shapes = tuple(tuple(s) for s in shapes)
        rendered = " vs ".join(str(list(s)) for s in self.shapes)
        super().__init__(f"{op}: incompatible shapes {rendered}")


class ParameterError(PriceRadarError):
    pass


class ContractError(PriceRadarError):
    pass


class NonFiniteError(ContractError):
    pass


class ConfigurationError(PriceRadarError):
    pass


class EmptySequenceError(PriceRadarError):
    pass


class SchemaError(PriceRadarError):
    def __init__(self, message: str, column: Optional[str] = None):
        self.column = column
        super().__init__(message)


class RowParseError(PriceRadarError):
    def __init__(self, line: int, column: str, value: str):
        self.line = line
        self.column = column
        self.value = value
        super().__init__(f"line {line}: cannot parse {column}={value!r}")


class EmptyDatasetError(PriceRadarError):
    pass


class SpecError(PriceRadarError):
    def __init__(self, column: str):
        self.column = column
        super().__init__(f"column {column!r} has zero variance on the training rows; cannot standardize")


class DivergenceError(PriceRadarError):
    def __init__(self, epoch: int, batch: int, detail: str = ""):
        self.epoch = epoch
        self.batch = batch
        suffix = f" ({detail})" if detail else ""
        super().__init__(f"training diverged at epoch {epoch}, batch {batch}{suffix}")


class CheckpointError(PriceRadarError):
    pass
