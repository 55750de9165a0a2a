"""Exception types shared across the engine."""


class EngineError(Exception):
    """Base class for all edgeslu errors."""


class FstError(EngineError):
    """Structural or precondition error in an FST operation."""


class AlphabetError(FstError):
    """Symbol tables of two machines do not denote the same alphabet."""


class DeterminizationBudgetError(FstError):
    """Subset construction exceeded its state budget."""


class MissingClassError(FstError):
    """A class symbol has no substitution, or a substitution nests one."""


class AnnotationError(EngineError):
    """Malformed "(value)[slot]" markup. Carries the byte offset."""

    def __init__(self, message, offset):
        super().__init__(f"{message} (offset {offset})")
        self.offset = offset


class DatasetSchemaError(EngineError):
    """Dataset file violates the expected JSON schema."""


class G2PError(EngineError):
    """A word could not be mapped to any pronunciation."""


class ArpaParseError(EngineError):
    """Malformed ARPA file. Carries the 1-based line number."""

    def __init__(self, message, line):
        super().__init__(f"line {line}: {message}")
        self.line = line


class ParameterError(EngineError):
    """Invalid parameter value passed to an operation."""


class BundleFormatError(EngineError):
    """Corrupt or incompatible assistant bundle file."""
