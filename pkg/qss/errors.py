"""
Exception hierarchy for the QSS simulator.

Every error raised on purpose by the library derives from QSSError. Errors that
describe a bad argument also derive from ValueError so callers catching
ValueError keep working.
"""


class QSSError(Exception):
    """Base class for all simulator errors."""


class StateError(QSSError, ValueError):
    """Malformed state vector or density matrix, or mismatched dimensions."""


class CircuitError(QSSError, ValueError):
    """Invalid gate, operation or circuit (index range, arity, unwritten clbit)."""


class PauliError(QSSError, ValueError):
    """Malformed Pauli text or mismatched Pauli lengths."""


class NonCliffordError(QSSError, ValueError):
    """A non-Clifford gate was found where only Clifford gates are allowed."""


class UncorrectableSubsetError(QSSError):
    """An erasure subset has no consistent correction table."""


class CodeError(QSSError, ValueError):
    """Invalid secret, code name or erasure request."""


class ChannelError(QSSError, ValueError):
    """Channel arity mismatch, invalid probability or non-CPTP reconstruction."""


class TomographyError(QSSError, ValueError):
    """Incomplete or inconsistent tomography data."""


class MitigationError(QSSError, ValueError):
    """Readout calibration problems or a singular restricted system."""


class ConfigError(QSSError, ValueError):
    """Invalid experiment configuration or JSON input."""


class ConsistencyError(QSSError):
    """A stored correction table disagrees with the derived one."""
