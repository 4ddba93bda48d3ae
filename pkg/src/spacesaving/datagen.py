"""Seeded Zipf workloads and stream file I/O.

Items are Zipf ranks ``1..U``: rank ``i`` is drawn with probability
``i**-rho / sum(j**-rho for j in 1..U)``. Draws use inverse-CDF sampling over
a precomputed cumulative table (binary search per draw), fed by numpy's PCG64
generator.

Binary streams are raw little-endian uint64 ids with no header; text streams
hold one decimal id per line.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidUniverseError, StreamParseError

GENERATOR_ID = "numpy.random.PCG64"
SAMPLER_ID = "inverse-cdf-searchsorted"
DEFAULT_UNIVERSE = 10**6

_CHUNK = 1 << 22
_U64_MAX = (1 << 64) - 1


@dataclass(frozen=True)
class ZipfSpec:
    universe: int = DEFAULT_UNIVERSE
    skew: float = 1.1
    length: int = 0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.universe < 1:
            raise InvalidUniverseError(f"universe must be >= 1, got {self.universe}")
        if not self.skew > 0:
            raise ValueError(f"skew must be > 0, got {self.skew}")
        if self.length < 0:
            raise ValueError(f"length must be >= 0, got {self.length}")


def zipf_pmf(universe: int, skew: float) -> np.ndarray:
    """Probability of each rank ``1..universe``."""
    if universe < 1:
        raise InvalidUniverseError(f"universe must be >= 1, got {universe}")
    weights = np.arange(1, universe + 1, dtype=np.float64) ** -skew
    return weights / weights.sum()


def zipf_cdf(universe: int, skew: float) -> np.ndarray:
    cdf = np.cumsum(zipf_pmf(universe, skew))
    cdf[-1] = 1.0
    return cdf


def generate_zipf(spec: ZipfSpec, out: np.ndarray | None = None) -> np.ndarray:
    """Draw ``spec.length`` i.i.d. Zipf ranks as a uint64 array.

    Generation is chunked so peak extra memory stays bounded for long streams.
    The same spec always yields the same sequence.
    """
    cdf = zipf_cdf(spec.universe, spec.skew)
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    if out is None:
        out = np.empty(spec.length, dtype=np.uint64)
    elif out.shape != (spec.length,):
        raise ValueError(f"output buffer has shape {out.shape}, expected ({spec.length},)")
    for start in range(0, spec.length, _CHUNK):
        stop = min(start + _CHUNK, spec.length)
        u = rng.random(stop - start)
        idx = np.searchsorted(cdf, u, side="right")
        out[start:stop] = idx + 1
    return out


def metadata(spec: ZipfSpec) -> dict:
    return {
        "distribution": "zipf",
        **asdict(spec),
        "generator": GENERATOR_ID,
        "sampler": SAMPLER_ID,
        "format": "u64le",
    }


def write_binary(path: str | os.PathLike, stream: np.ndarray) -> None:
    np.asarray(stream, dtype="<u8").tofile(path)


def write_text(path: str | os.PathLike, stream) -> None:
    with open(path, "w") as fh:
        for x in np.asarray(stream, dtype=np.uint64).tolist():
            fh.write(f"{x}\n")


def write_metadata(path: str | os.PathLike, spec: ZipfSpec) -> Path:
    """Write the JSON sidecar ``<path>.json`` describing how a stream was made."""
    sidecar = Path(f"{os.fspath(path)}.json")
    sidecar.write_text(json.dumps(metadata(spec), indent=2, sort_keys=True) + "\n")
    return sidecar


def generate_to_file(spec: ZipfSpec, path: str | os.PathLike) -> Path:
    """Generate straight into a binary file (memory-mapped) plus its sidecar."""
    if spec.length == 0:
        Path(path).write_bytes(b"")
    else:
        buf = np.memmap(path, dtype="<u8", mode="w+", shape=(spec.length,))
        generate_zipf(spec, out=buf)
        buf.flush()
        del buf
    return write_metadata(path, spec)


def read_stream(path: str | os.PathLike, format: str = "binary", mmap: bool = True) -> np.ndarray:
    """Load a stream of uint64 ids.

    Args:
        path: file to read.
        format: ``"binary"`` (raw little-endian u64) or ``"text"`` (one
            decimal id per line).
        mmap: memory-map binary files instead of reading them into memory.

    Raises:
        FileNotFoundError: if the file is missing.
        StreamParseError: on a truncated binary record or a bad text line;
            the error carries the byte offset of the offending record.
    """
    if format == "binary":
        size = os.path.getsize(path)
        if size % 8:
            raise StreamParseError(f"{path}: trailing partial record of {size % 8} bytes", size - size % 8)
        if size == 0:
            return np.zeros(0, dtype=np.uint64)
        if mmap:
            return np.asarray(np.memmap(path, dtype="<u8", mode="r")).view(np.uint64)
        return np.fromfile(path, dtype="<u8").astype(np.uint64, copy=False)
    if format == "text":
        return _read_text(path)
    raise ValueError(f"unknown stream format {format!r}")


def _read_text(path: str | os.PathLike) -> np.ndarray:
    values = []
    offset = 0
    with open(path, "rb") as fh:
        for raw in fh:
            token = raw.strip()
            if token:
                if not token.isdigit():
                    raise StreamParseError(f"{path}: not a decimal id: {token[:32]!r}", offset)
                value = int(token)
                if value > _U64_MAX:
                    raise StreamParseError(f"{path}: id {value} exceeds 64 bits", offset)
                values.append(value)
            offset += len(raw)
    return np.array(values, dtype=np.uint64)
