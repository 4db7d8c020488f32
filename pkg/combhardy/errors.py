"""Exception hierarchy shared by the library and the command line front end."""


class CombHardyError(Exception):
    """Base class for every error raised by combhardy."""

    exit_code = 1


class SpecParseError(CombHardyError):
    """The comb spec file or payload could not be understood."""

    exit_code = 2


class ComputationError(CombHardyError):
    """A numerical operation could not be carried out on the given inputs."""

    exit_code = 3


class InvalidFamilyParam(ComputationError):
    pass


class IndexOutOfRange(ComputationError):
    pass


class OutsideTruncation(ComputationError):
    """The query lies beyond the materialized teeth of the comb."""


class DegenerateLog(ComputationError):
    pass


class FloatOverflow(ComputationError):
    """A quantity only available in log form was requested as a float."""


class Unreachable(ComputationError):
    pass


class GridConfigError(ComputationError):
    pass


class StartOutsideDomain(ComputationError):
    pass


class NonconvergentPath(ComputationError):
    pass


class TooManyTruncations(ComputationError):
    pass


class IoError(CombHardyError):
    """Reading the spec or writing outputs failed."""

    exit_code = 4
