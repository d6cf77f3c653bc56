"""Exception types shared across the package."""

from __future__ import annotations


class CribsrError(Exception):
    """Base class for all package errors."""


class UsageError(CribsrError, ValueError):
    """Bad arguments: unknown variable names, overlapping sets, wrong shapes."""


class DomainError(CribsrError, ValueError):
    """A numeric argument lies outside its mathematical domain."""


class StructuralError(CribsrError, ValueError):
    """A joint distribution lacks a structure the caller claimed (Markov chain, function)."""


class ConfigError(CribsrError, ValueError):
    """Simulator or CLI configuration cannot be realised."""


class SizingError(ConfigError):
    """Requested codebooks exceed the desk-scale caps."""

    def __init__(self, message: str, report: dict | None = None):
        super().__init__(message)
        self.report = report or {}


class DualityMismatch(CribsrError):
    """Corner points of a matched source/channel pair disagree."""

    def __init__(self, message: str, discrepancy: float, payload: str | None = None):
        super().__init__(message)
        self.discrepancy = discrepancy
        self.payload = payload
