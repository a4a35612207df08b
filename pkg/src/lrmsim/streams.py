"""Deterministic, replica-addressable randomness and elementary samplers.

Every random quantity in the package is a pure function of a 128-bit address
``(seed, stream_id)`` feeding a counter-based Philox generator.  Stream ``k``
of a replica ensemble is addressable directly (no need to fast-forward through
streams ``0..k-1``), and draws are bit-identical whether they happen in numpy
code or inside a numba kernel holding the same generator.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class RngStream:
    """Address of an independent random stream.

    ``stream_id`` is a free 64-bit namespace: replica indices, or values from
    :meth:`substream` for named sub-streams.
    """

    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        """Fresh generator positioned at the start of this stream."""
        key = [self.seed & _MASK64, self.stream_id & _MASK64]
        return np.random.Generator(np.random.Philox(key=key))

    def substream(self, k: int) -> "RngStream":
        """Stream with id offset by ``k`` (replica ``k`` of this stream's block)."""
        return RngStream(self.seed, (self.stream_id + k) & _MASK64)


def stream_block(seed: int, block: int) -> RngStream:
    """Base stream of a named block; replicas live at ``substream(k)``.

    Blocks are spaced ``2**32`` apart so ensembles of up to ``2**32`` replicas
    never collide across blocks.
    """
    return RngStream(seed, (block << 32) & _MASK64)


@dataclass
class BrownianPath:
    """Driving Brownian motion sampled on a uniform grid, ``B(0) = 0``."""

    du: float
    values: np.ndarray

    @property
    def u_max(self) -> float:
        return self.du * (len(self.values) - 1)

    def grid(self) -> np.ndarray:
        return self.du * np.arange(len(self.values))


def brownian_path(du: float, u_max: float, stream: RngStream) -> BrownianPath:
    """Sample a Brownian path on the grid ``k*du`` covering ``[0, u_max]``.

    The path has ``ceil(u_max/du)`` i.i.d. N(0, du) increments.
    """
    if not (du > 0.0) or not (u_max >= du):
        raise InvalidParameterError(f"need du > 0 and u_max >= du, got du={du}, u_max={u_max}")
    nsteps = int(math.ceil(u_max / du - 1e-12))
    rg = stream.generator()
    values = np.empty(nsteps + 1)
    values[0] = 0.0
    np.cumsum(rg.standard_normal(nsteps) * math.sqrt(du), out=values[1:])
    return BrownianPath(du, values)


def refine_path(path: BrownianPath, factor: int, stream: RngStream) -> BrownianPath:
    """Brownian-bridge midpoint refinement of ``path`` by a power-of-two factor.

    The refined path agrees with the input exactly at the coarse grid points;
    each halving inserts midpoints with the conditional bridge law
    ``N(linear interpolation, step/4)``.
    """
    if factor < 1 or factor & (factor - 1):
        raise InvalidParameterError(f"factor must be a power of 2, got {factor}")
    rg = stream.generator()
    values = path.values
    du = path.du
    while factor > 1:
        mid = 0.5 * (values[:-1] + values[1:]) + math.sqrt(du / 4.0) * rg.standard_normal(len(values) - 1)
        merged = np.empty(2 * len(values) - 1)
        merged[0::2] = values
        merged[1::2] = mid
        values, du, factor = merged, du / 2.0, factor // 2
    return BrownianPath(du, values.copy() if values is path.values else values)


def sample_gamma(shape, stream: RngStream, size=None):
    """Gamma(shape, scale 1) draw(s)."""
    if np.any(np.asarray(shape) <= 0.0):
        raise InvalidParameterError(f"gamma shape must be positive, got {shape}")
    return stream.generator().gamma(shape, 1.0, size=size)


def sample_inverse_gaussian(mean, shape, stream: RngStream, size=None):
    """Inverse-Gaussian IG(mean, shape) draw(s) (transform-with-rejection)."""
    if np.any(np.asarray(mean) <= 0.0) or np.any(np.asarray(shape) <= 0.0):
        raise InvalidParameterError(f"IG parameters must be positive, got mean={mean}, shape={shape}")
    return stream.generator().wald(mean, shape, size=size)


def sample_sinh_v(K, stream: RngStream, size=None):
    """Draw from the environment-increment density ~ exp(-K sinh(v/2)^2 + v/2).

    Exact route: if Z ~ IG(1, K/2) then V = -log Z has this density, so no
    rejection envelope is needed.
    """
    if np.any(np.asarray(K) <= 0.0):
        raise InvalidParameterError(f"K must be positive, got {K}")
    return -np.log(stream.generator().wald(1.0, np.asarray(K) / 2.0, size=size))


def sinh_v_logdensity(K: float, v) -> np.ndarray:
    """Log of the (normalized) density exp(-K sinh(v/2)^2 + v/2), for GOF tests.

    Normalization constant sqrt(K / (4 pi)).
    """
    v = np.asarray(v, dtype=float)
    return 0.5 * math.log(K / (4.0 * math.pi)) - K * np.sinh(v / 2.0) ** 2 + v / 2.0
