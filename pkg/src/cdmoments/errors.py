"""Exception types shared by every module.

The CLI maps them onto exit codes: usage errors -> 2, resource limits -> 3.
"""


class CdmError(Exception):
    """Base class for library errors."""


class InvalidArgument(CdmError, ValueError):
    pass


class OutOfRange(CdmError, IndexError):
    pass


class ResourceLimit(CdmError, MemoryError):
    """A requested table or integration would exceed the configured memory cap."""


class CacheRejected(CdmError):
    """A cache file failed its magic, version, kind or checksum check."""
