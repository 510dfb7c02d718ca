"""
Error types
===========
Library code raises these; only the CLI turns them into exit codes.
"""
from __future__ import annotations

from pathlib import Path
from typing import Optional


class UOTError(Exception):
    """Base class for everything this package raises on purpose."""


class GridError(UOTError, ValueError):
    """Bad grid sizes, out-of-range slab index or mismatched field shapes."""


class DensityFileError(UOTError, ValueError):
    """A PGM/CSV density file is missing, unsupported or corrupt."""

    def __init__(self, path: Path | str, reason: str):
        self.path = Path(path)
        self.reason = reason
        super().__init__(f"{self.path}: {reason}")


class ConfigError(UOTError, ValueError):
    """A run configuration is missing a key or carries an invalid value."""

    def __init__(self, key: str, reason: str):
        self.key = key
        self.reason = reason
        super().__init__(f"{key}: {reason}")


class SolverDivergenceError(UOTError, ArithmeticError):
    """NaN/Inf appeared in an iterate."""

    def __init__(self, update: str, iteration: Optional[int] = None):
        self.update = update
        self.iteration = iteration
        where = f" at iteration {iteration}" if iteration is not None else ""
        super().__init__(f"non-finite values after the {update} update{where}")
