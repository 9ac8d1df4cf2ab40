"""Binary caches for divisor tables, kernel indices and twisted weight tables.

File layout (all little-endian)::

    magic       4 bytes  b"CDM1"
    version     u16
    kind        u8       1 divisor-table, 2 kernel-index, 3 weight-table
    spec        4 x i64  (l1, M1, l2, M2), zeros for kernel-index
    limit       u64
    size        u64      payload length in bytes
    checksum    8 bytes  blake2b-64 of the payload
    payload

Payloads: divisor-table is counts[0..limit] as i32, kernel-index is the
ascending squarefree kernels q <= limit as i64, weight-table is w[0..limit]
as pairs of binary64 (real, imag).
"""

from __future__ import annotations

import hashlib
import logging
import math
import os
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .constants import TwistedWeightTable, build_twisted_weights
from .core_arith import CongruenceSpec
from .divisor import DEFAULT_MEMORY_CAP, DivisorTable, sieve_divisor_table
from .errors import CacheRejected, InvalidArgument
from .relations import KernelIndex, build_kernel_index

log = logging.getLogger(__name__)

MAGIC = b"CDM1"
CACHE_VERSION = 1
KINDS = {"divisor-table": 1, "kernel-index": 2, "weight-table": 3}
ENV_VAR = "CDM_CACHE_DIR"
DEFAULT_CACHE_DIR = ".cdm-cache"

_HEADER = struct.Struct("<4sHB4qQQ8s")
_KIND_NAMES = {v: k for k, v in KINDS.items()}


@dataclass(frozen=True)
class CacheHeader:
    version: int
    kind: str
    spec_fields: tuple[int, int, int, int]
    limit: int
    payload_size: int
    checksum: bytes


def checksum(payload: bytes) -> bytes:
    return hashlib.blake2b(payload, digest_size=8).digest()


def resolve_cache_dir(flag: str | os.PathLike | None = None, environ=None) -> Path:
    """Flag first, then $CDM_CACHE_DIR, then ./.cdm-cache."""
    environ = os.environ if environ is None else environ
    if flag:
        return Path(flag)
    if environ.get(ENV_VAR):
        return Path(environ[ENV_VAR])
    return Path(DEFAULT_CACHE_DIR)


def encode(kind: str, spec_fields, limit: int, payload: bytes) -> bytes:
    if kind not in KINDS:
        raise InvalidArgument(f"unknown cache kind {kind!r}")
    head = _HEADER.pack(MAGIC, CACHE_VERSION, KINDS[kind], *spec_fields, limit, len(payload), checksum(payload))
    return head + payload


def decode(blob: bytes, expected_kind: str | None = None) -> tuple[CacheHeader, bytes]:
    """Split and validate a cache blob; any mismatch raises CacheRejected."""
    if len(blob) < _HEADER.size:
        raise CacheRejected("cache file is truncated (header incomplete)")
    magic, version, kind_code, l1, m1, l2, m2, limit, size, digest = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise CacheRejected(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != CACHE_VERSION:
        raise CacheRejected(f"cache version {version} does not match supported version {CACHE_VERSION}")
    if kind_code not in _KIND_NAMES:
        raise CacheRejected(f"unknown payload kind code {kind_code}")
    kind = _KIND_NAMES[kind_code]
    if expected_kind is not None and kind != expected_kind:
        raise CacheRejected(f"cache holds a {kind}, expected a {expected_kind}")
    payload = blob[_HEADER.size :]
    if len(payload) != size:
        raise CacheRejected(f"payload is {len(payload)} bytes, header says {size}")
    if checksum(payload) != digest:
        raise CacheRejected("payload checksum mismatch")
    return CacheHeader(version, kind, (l1, m1, l2, m2), limit, size, digest), payload


def dump_divisor_table(table: DivisorTable) -> bytes:
    payload = np.ascontiguousarray(table.counts, dtype="<i4").tobytes()
    return encode("divisor-table", table.spec.as_tuple(), table.limit, payload)


def load_divisor_table(blob: bytes) -> DivisorTable:
    header, payload = decode(blob, "divisor-table")
    counts = np.frombuffer(payload, dtype="<i4").astype(np.int32)
    if counts.size != header.limit + 1:
        raise CacheRejected("divisor-table length disagrees with its limit")
    counts.setflags(write=False)
    return DivisorTable(CongruenceSpec(*header.spec_fields), header.limit, counts)


def dump_kernel_index(index: KernelIndex) -> bytes:
    payload = np.asarray(index.kernels(), dtype="<i8").tobytes()
    return encode("kernel-index", (0, 0, 0, 0), index.y, payload)


def load_kernel_index(blob: bytes) -> KernelIndex:
    header, payload = decode(blob, "kernel-index")
    kernels = np.frombuffer(payload, dtype="<i8").tolist()
    y = header.limit
    groups = {q: tuple(range(1, math.isqrt(y // q) + 1)) for q in kernels}
    return KernelIndex(y, groups)


def dump_weight_table(weights: TwistedWeightTable) -> bytes:
    payload = np.ascontiguousarray(weights.w, dtype="<c16").tobytes()
    return encode("weight-table", weights.spec.as_tuple(), weights.y, payload)


def load_weight_table(blob: bytes) -> TwistedWeightTable:
    header, payload = decode(blob, "weight-table")
    w = np.frombuffer(payload, dtype="<c16").astype(complex)
    if w.size != header.limit + 1:
        raise CacheRejected("weight-table length disagrees with its limit")
    w.setflags(write=False)
    return TwistedWeightTable(CongruenceSpec(*header.spec_fields), header.limit, w)


def cache_path(cache_dir: Path, kind: str, spec: CongruenceSpec | None, limit: int) -> Path:
    tag = "none" if spec is None else "_".join(str(v) for v in spec.as_tuple())
    return Path(cache_dir) / f"{kind}-{tag}-{limit}.cdm"


def write_atomic(path: Path, blob: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + f".tmp{os.getpid()}")
    tmp.write_bytes(blob)
    os.replace(tmp, path)


def _cached(path: Path | None, load, dump, build):
    if path is None:
        return build()
    if path.exists():
        try:
            return load(path.read_bytes())
        except CacheRejected as err:
            log.warning("ignoring cache %s: %s", path, err)
    value = build()
    write_atomic(path, dump(value))
    return value


def cached_divisor_table(spec: CongruenceSpec, limit: int, cache_dir: Path | None,
                         memory_cap: int = DEFAULT_MEMORY_CAP) -> DivisorTable:
    """Divisor table from ``cache_dir`` when valid, otherwise sieved and stored."""
    path = None if cache_dir is None else cache_path(cache_dir, "divisor-table", spec, limit)
    return _cached(path, load_divisor_table, dump_divisor_table,
                   lambda: sieve_divisor_table(spec, limit, memory_cap=memory_cap))


def cached_kernel_index(y: int, cache_dir: Path | None) -> KernelIndex:
    path = None if cache_dir is None else cache_path(cache_dir, "kernel-index", None, y)
    return _cached(path, load_kernel_index, dump_kernel_index, lambda: build_kernel_index(y))


def cached_weight_table(spec: CongruenceSpec, y: int, cache_dir: Path | None) -> TwistedWeightTable:
    path = None if cache_dir is None else cache_path(cache_dir, "weight-table", spec, y)
    return _cached(path, load_weight_table, dump_weight_table, lambda: build_twisted_weights(spec, y))
