"""
Seedable random streams and inverse-CDF variates.

A stream is identified by (seed, replication, node, purpose). The node name
is reduced with CRC-32 and the purpose with its fixed index below, then fed
to ``numpy.random.SeedSequence(entropy=seed, spawn_key=...)`` driving a PCG64
generator. Both CRC-32 and PCG64 are platform independent, so a stream key
always yields the same sequence.
"""
import math
import zlib
from enum import Enum
from typing import Dict, Tuple

import numpy as np

from app.core.exceptions import InvalidParamsError
from app.schemas.line import (
    ConstantDist, DistributionSpec, ExponentialDist, TriangularDist, UniformDist,
)


class Purpose(str, Enum):
    INTERARRIVAL = "interarrival"
    SERVICE = "service"
    TRANSPORT = "transport"
    QC = "qc"
    ROUTING = "routing"


PURPOSE_INDEX = {
    Purpose.INTERARRIVAL: 0,
    Purpose.SERVICE: 1,
    Purpose.TRANSPORT: 2,
    Purpose.QC: 3,
    Purpose.ROUTING: 4,
}


class RngStream:
    """One independent uniform stream."""

    __slots__ = ("seed", "stream_key", "_generator")

    def __init__(self, seed: int, stream_key: Tuple[str, Purpose], replication: int = 0):
        node, purpose = stream_key
        self.seed = seed
        self.stream_key = stream_key
        sequence = np.random.SeedSequence(
            entropy=seed,
            spawn_key=(replication, zlib.crc32(node.encode("utf-8")), PURPOSE_INDEX[purpose]),
        )
        self._generator = np.random.Generator(np.random.PCG64(sequence))

    def uniform(self) -> float:
        return float(self._generator.random())


class StreamSet:
    """Lazily created streams of one replication, keyed by (node, purpose)."""

    def __init__(self, seed: int, replication: int = 0):
        self.seed = seed
        self.replication = replication
        self._streams: Dict[Tuple[str, Purpose], RngStream] = {}

    def get(self, node: str, purpose: Purpose) -> RngStream:
        key = (node, purpose)
        stream = self._streams.get(key)
        if stream is None:
            stream = RngStream(self.seed, key, self.replication)
            self._streams[key] = stream
        return stream


def param_violation(spec: DistributionSpec) -> str | None:
    """Describe why a distribution breaks its family invariants, or None."""
    if isinstance(spec, ConstantDist):
        values, ok = (spec.value,), spec.value >= 0
    elif isinstance(spec, ExponentialDist):
        values, ok = (spec.mean,), spec.mean > 0
    elif isinstance(spec, UniformDist):
        values, ok = (spec.lo, spec.hi), 0 <= spec.lo <= spec.hi
    elif isinstance(spec, TriangularDist):
        values, ok = (spec.lo, spec.mode, spec.hi), 0 <= spec.lo <= spec.mode <= spec.hi
    else:
        return f"unknown distribution {spec!r}"
    if not all(math.isfinite(v) for v in values):
        return f"{spec.family} parameters must be finite"
    if not ok:
        rules = {
            "constant": "value >= 0",
            "exponential": "mean > 0",
            "uniform": "0 <= lo <= hi",
            "triangular": "0 <= lo <= mode <= hi",
        }
        return f"{spec.family} requires {rules[spec.family]}"
    return None


def check_params(spec: DistributionSpec) -> None:
    problem = param_violation(spec)
    if problem:
        raise InvalidParamsError(problem)


def mean_of(spec: DistributionSpec) -> float:
    if isinstance(spec, ConstantDist):
        return spec.value
    if isinstance(spec, ExponentialDist):
        return spec.mean
    if isinstance(spec, UniformDist):
        return (spec.lo + spec.hi) / 2.0
    return (spec.lo + spec.mode + spec.hi) / 3.0


def inverse_cdf(spec: DistributionSpec, u: float) -> float:
    """Map a uniform draw u in [0, 1) to a duration in hours."""
    if isinstance(spec, ConstantDist):
        return spec.value
    if isinstance(spec, ExponentialDist):
        return -spec.mean * math.log1p(-u)
    if isinstance(spec, UniformDist):
        return spec.lo + u * (spec.hi - spec.lo)
    lo, mode, hi = spec.lo, spec.mode, spec.hi
    if hi == lo:
        return lo
    split = (mode - lo) / (hi - lo)
    if u < split:
        return lo + math.sqrt(u * (hi - lo) * (mode - lo))
    return hi - math.sqrt((1.0 - u) * (hi - lo) * (hi - mode))


def draw(spec: DistributionSpec, stream: RngStream) -> float:
    """Unchecked sampling for specs already validated with the model."""
    if isinstance(spec, ConstantDist):
        return spec.value
    return inverse_cdf(spec, stream.uniform())


def sample(spec: DistributionSpec, stream: RngStream) -> float:
    """Draw one duration; Constant consumes no draw, every other family exactly one."""
    check_params(spec)
    return draw(spec, stream)
