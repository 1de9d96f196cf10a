# utils/exceptions.py
"""
Error hierarchy shared by every isoseq app.

Each error carries the process exit code the management commands use when
the error ends a run: 2 usage/config, 3 data, 4 I/O.
"""


class PipelineError(Exception):
    """Base class for all isoseq errors"""
    exit_code = 3


# ====================================
#  USAGE / CONFIG ERRORS (exit 2)
# ====================================
class InvalidParams(PipelineError):
    exit_code = 2


class UnsupportedLatentDim(PipelineError):
    exit_code = 2


# ====================================
#  DATA ERRORS (exit 3)
# ====================================
class DecodeError(PipelineError):
    pass


class EmptyImage(PipelineError):
    pass


class OutOfBounds(PipelineError):
    pass


class OriginNotFloor(PipelineError):
    pass


class NoFloor(PipelineError):
    pass


class Unreachable(PipelineError):
    pass


class ExhaustedRetries(PipelineError):
    pass


class TrajectoryTooShort(PipelineError):
    pass


class FormatError(PipelineError):
    pass


class HeaderMismatch(PipelineError):
    pass


class ShapeMismatch(PipelineError):
    pass


class EmptyInput(PipelineError):
    pass


# ====================================
#  I/O ERRORS (exit 4)
# ====================================
class IoError(PipelineError):
    exit_code = 4
