"""Error types shared across the engine."""


class IfeError(Exception):
    """Base class for all engine errors."""


class EdgeListParseError(IfeError):
    """Malformed edge-list input; carries the 1-based line number."""

    def __init__(self, line_no, message):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class CapacityError(IfeError):
    """Graph exceeds a configured node or edge cap."""


class DepthOverflowError(IfeError):
    """BFS depth exceeded the 254 levels a 1-byte length can hold."""


class ParentArenaOverflowError(IfeError):
    """Parent record arenas grew past the configured byte budget."""


class WorkloadError(IfeError):
    """Could not build a benchmark workload (e.g. not enough deep sources)."""


class SnapshotFormatError(IfeError):
    """Binary graph snapshot is malformed."""
