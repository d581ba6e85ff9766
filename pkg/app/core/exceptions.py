"""
Exception hierarchy for the simulator
"""
from typing import List


class QscdcError(Exception):
    """Base class for every error raised by the simulator"""


class RegisterError(QscdcError):
    """A state-vector precondition was violated"""


class RegisterIndexError(RegisterError, IndexError):
    """Qubit index outside the register"""


class DimensionMismatchError(RegisterError, ValueError):
    """Two registers (or a register and an operator) disagree in size"""


class DuplicateQubitError(RegisterError, ValueError):
    """The same qubit was listed twice in one measurement"""


class ConfigViolationError(QscdcError):
    """run_session refused a configuration"""

    def __init__(self, violations: List[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class CapacityExceededError(QscdcError):
    """Secret message longer than the number of message pairs"""


class UnmappedLabelError(QscdcError, KeyError):
    """GHZ coupling map has no entry for a Bell label"""

    def __str__(self):
        return str(self.args[0]) if self.args else "unmapped label"


class ReplayError(QscdcError):
    """A forced replay outcome has zero probability"""


class AttackTagError(QscdcError, ValueError):
    """Malformed attack tag on the command line or in a query"""
