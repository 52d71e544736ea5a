"""
Exception hierarchy shared by the library and the CLI.
"""

from pathlib import Path
from typing import Optional, Tuple, Union


class UrbanGrowthError(Exception):
    """Base class for every error raised by this package."""


class ArgumentError(UrbanGrowthError, ValueError):
    """An argument is outside its declared domain."""


class DomainError(UrbanGrowthError, ValueError):
    """A quantity is undefined for the given input (e.g. centroid of nothing)."""


class ConfigError(UrbanGrowthError):
    """The project configuration is malformed or inconsistent."""

    def __init__(self, message: str, section: Optional[str] = None, key: Optional[str] = None):
        where = section if key is None else f"{section}.{key}"
        super().__init__(f"[{where}] {message}" if section else message)
        self.section = section
        self.key = key


class GridParseError(UrbanGrowthError):
    """A raster file could not be parsed."""

    def __init__(self, path: Union[str, Path], message: str, line: Optional[int] = None):
        location = f"{path}:{line}" if line is not None else str(path)
        super().__init__(f"{location}: {message}")
        self.path = str(path)
        self.line = line


class GridIOError(UrbanGrowthError):
    """Reading or writing a raster file failed at the OS level."""

    def __init__(self, path: Union[str, Path], reason: str):
        super().__init__(f"{path}: {reason}")
        self.path = str(path)
        self.reason = reason


class LayerValidationError(UrbanGrowthError):
    """A layer violates a dataset invariant."""

    def __init__(
        self,
        message: str,
        layer: Optional[str] = None,
        year: Optional[int] = None,
        cell: Optional[Tuple[int, int]] = None,
    ):
        parts = [p for p in (layer, None if year is None else str(year)) if p]
        prefix = f"{'/'.join(parts)}: " if parts else ""
        suffix = f" at cell (row={cell[0]}, col={cell[1]})" if cell is not None else ""
        super().__init__(f"{prefix}{message}{suffix}")
        self.layer = layer
        self.year = year
        self.cell = cell
