from pathlib import Path

type Map = dict[str, object]


class CraftException(Exception):
    exit_code: int = 1


class ConfigException(CraftException):
    exit_code = 2


class DataException(CraftException):
    exit_code = 3


class HotelNotFoundException(DataException):
    pass


class WindowRangeException(DataException):
    pass


class BatchException(DataException):
    pass


class DistrictTooSmallException(DataException):
    """
    Raised by the hierarchical sampler when the picked district cannot supply m children,
    callers skip the district and sample again.
    """


class DatasetParseException(DataException):
    def __init__(self, msg: str, line_nr: int):
        super().__init__(msg)
        self.line_nr = line_nr


class NumericException(CraftException):
    exit_code = 4


class ShapeException(NumericException):
    pass


class SingularMatrixException(NumericException):
    pass


class NonFiniteException(NumericException):
    pass


class UndefinedMetricException(NumericException):
    pass


def create_output_dir(path: Path) -> Path:
    return _create_dir(path)


def create_log_dir(path: Path) -> Path:
    return _create_dir(path / "log")


def _create_dir(path: Path) -> Path:
    path.mkdir(parents=True, exist_ok=True)
    return path
