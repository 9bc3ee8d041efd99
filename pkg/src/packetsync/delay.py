"""Gaussian delay models and deterministic, stream-addressed random numbers.

Packet exchange delay (master firing to slave timestamping) and processing
delay (timestamping to correction) are each modelled as a Gaussian with a
configurable mean and variance, truncated below at a physical floor.

All randomness in the simulator flows through :class:`RngStream`, which is
fully determined by a ``(seed, stream_id)`` pair. Each node gets one stream
per noise source, so adding or removing a node never perturbs the random
sequence seen by any other node.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class DelayModel:
    """Gaussian delay: mean and variance in seconds/seconds^2, floored below."""

    mean: float
    variance: float = 0.0
    floor: float = 0.0

    def __post_init__(self) -> None:
        if self.floor < 0.0:
            raise ValueError(f"delay floor must be >= 0, got {self.floor}")
        if self.mean < self.floor:
            raise ValueError(
                f"delay mean {self.mean} must be >= floor {self.floor}"
            )
        if self.variance < 0.0:
            raise ValueError(f"delay variance must be >= 0, got {self.variance}")

    @property
    def std(self) -> float:
        return math.sqrt(self.variance)


class RngStream:
    """Deterministic random stream addressed by (seed, stream_id).

    The same pair yields the same sample sequence on every platform;
    distinct stream ids yield statistically independent sequences.
    """

    def __init__(self, seed: int, stream_id: int = 0):
        if seed < 0:
            raise ValueError(f"seed must be a non-negative integer, got {seed}")
        if stream_id < 0:
            raise ValueError(f"stream_id must be >= 0, got {stream_id}")
        self.seed = seed
        self.stream_id = stream_id
        self._gen = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence([seed, stream_id]))
        )

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"

    def normal(self, mean: float = 0.0, std: float = 1.0) -> float:
        return float(self._gen.normal(mean, std))

    def normals(self, mean: float, std: float, n: int) -> np.ndarray:
        return self._gen.normal(mean, std, size=n)

    def replay(self) -> "RngStream":
        """Fresh stream at the start of the identical sequence."""
        return RngStream(self.seed, self.stream_id)


def stream_for(seed: int, node_id: str, source: str) -> RngStream:
    """Stream for one (node, noise source) pair.

    The stream id is derived from a stable hash of the node id and source
    name, never from list positions, so scenario edits elsewhere cannot
    shift a node's random sequence.
    """
    digest = hashlib.sha256(f"{node_id}:{source}".encode()).digest()
    return RngStream(seed, int.from_bytes(digest[:8], "big"))


def sample(model: DelayModel, rng: RngStream) -> float:
    """Draw one delay in seconds; truncated below at the model floor."""
    return max(model.floor, rng.normal(model.mean, model.std))
