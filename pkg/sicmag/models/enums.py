"""
Measurement labels
"""
import enum


class Position(str, enum.Enum):
    """Sensor position relative to the flake"""
    PROBE = "probe"
    REFERENCE = "reference"


class Branch(str, enum.Enum):
    """Hysteresis branch, named by the direction the applied field is swept"""
    ASCENDING = "ascending"
    DESCENDING = "descending"


class Sweep(str, enum.Enum):
    """Which campaign a measurement belongs to"""
    TEMPERATURE = "temperature"
    FIELD = "field"


class CheckStatus(str, enum.Enum):
    """Outcome of a reproduce tolerance check"""
    PASS = "pass"
    FAIL = "fail"


class OutputFormat(str, enum.Enum):
    """Format of emitted result tables"""
    CSV = "csv"
    JSON = "json"
