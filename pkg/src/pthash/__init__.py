"""Minimal perfect hashing with XOR-pilot search and compressed pilot tables."""

from .builder import BuildConfig, BuildResult, build, build_detailed
from .encoders import SCHEMES, encode
from .errors import (
    BadMagicError,
    BuildError,
    FormatError,
    PTHashError,
    SeedFailure,
    TruncationError,
    UnsupportedVersionError,
)
from .mphf import Mphf

__all__ = [
    "SCHEMES",
    "BadMagicError",
    "BuildConfig",
    "BuildError",
    "BuildResult",
    "FormatError",
    "Mphf",
    "PTHashError",
    "SeedFailure",
    "TruncationError",
    "UnsupportedVersionError",
    "build",
    "build_detailed",
    "encode",
]
