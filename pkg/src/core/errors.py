"""Exception hierarchy shared by the solver suite."""

from typing import Optional


class CentdianError(Exception):
    """Base error."""


class ValidationError(CentdianError):
    """Invalid network or instance data."""


class InstanceFormatError(ValidationError):
    """Instance or solution file does not follow the documented schema."""

    def __init__(self, message: str, path: Optional[str] = None,
                 line: Optional[int] = None, field: Optional[str] = None):
        self.path = path
        self.line = line
        self.field = field
        context = []
        if path:
            context.append(f"file={path}")
        if line is not None:
            context.append(f"line={line}")
        if field:
            context.append(f"field={field}")
        suffix = f" ({', '.join(context)})" if context else ""
        super().__init__(f"{message}{suffix}")


class ModelError(CentdianError):
    """Invalid model parameters or a broken formulation contract."""


class OracleTooLargeError(ModelError):
    """Instance exceeds the brute-force enumeration threshold."""


class SolverError(CentdianError):
    """LP backend or search failure."""

    def __init__(self, message: str, node_id: Optional[int] = None, pair_id: Optional[int] = None):
        self.node_id = node_id
        self.pair_id = pair_id
        context = []
        if node_id is not None:
            context.append(f"node={node_id}")
        if pair_id is not None:
            context.append(f"pair={pair_id}")
        suffix = f" [{', '.join(context)}]" if context else ""
        super().__init__(f"{message}{suffix}")


class CutGenerationError(SolverError):
    """Cut-generating LP produced an inconsistent result."""


class InteriorPointError(SolverError):
    """Interior point construction failed its certificate."""
