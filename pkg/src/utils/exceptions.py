"""
Exception hierarchy shared by every simulator package.

Each class carries the exit code the command-line layer maps it to.
"""
from typing import Optional


class FedSplitError(Exception):
    """Base class for all simulator errors"""

    exit_code: int = 3


class ConfigurationError(FedSplitError):
    """Invalid arguments, shapes, or infeasible experiment setup"""

    exit_code = 2


class WayParseError(ConfigurationError):
    """Malformed privatization way name"""

    def __init__(self, message: str, name: str, position: int):
        super().__init__(f"{message} (way '{name}', position {position})")
        self.name = name
        self.position = position


class DataError(FedSplitError):
    """Labels or samples that violate dataset invariants"""

    exit_code = 2


class FormatError(FedSplitError):
    """Undecodable FSDS file"""

    exit_code = 2

    def __init__(self, message: str, offset: Optional[int] = None):
        where = f" at byte {offset}" if offset is not None else ""
        super().__init__(f"{message}{where}")
        self.offset = offset


class UsageError(FedSplitError):
    """API called out of order or with out-of-range arguments"""

    exit_code = 2


class ProtocolError(FedSplitError):
    """Server/client exchange does not line up"""


class UnsupportedMetricError(FedSplitError):
    """Metric undefined for the requested privatization way"""


class ScoringError(FedSplitError):
    """Not enough recorded rounds to score a run"""


class NumericError(FedSplitError):
    """An operation produced NaN or Inf"""


class DomainError(FedSplitError):
    """Function evaluated outside its mathematical domain"""
