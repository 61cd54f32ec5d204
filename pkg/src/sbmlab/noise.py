"""Reproducible discretized space-time white noise.

Every replica owns one generator built from ``(base_seed, stream_id)``:
numpy's counter-based Philox bit generator keyed through a
:class:`numpy.random.SeedSequence` whose spawn key is the stream id. Distinct
stream ids give non-overlapping streams without coordination.

The increments returned here are plain standard normals, one per cell. The
solvers multiply them by ``sqrt(dt/dx)``, which turns a normal into the
cell-averaged white-noise increment over one time step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

__all__ = [
    "GENERATOR_VERSION",
    "SeedSpec",
    "NoiseIncrement",
    "make_generator",
    "white_increment",
    "correlated_pair",
    "draw_block",
]

GENERATOR_VERSION = f"numpy-{np.__version__}:Philox4x64-10:SeedSequence(base_seed,spawn_key=(stream_id,)):standard_normal"

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class SeedSpec:
    base_seed: int
    stream_id: int = 0

    def __post_init__(self):
        if self.stream_id < 0:
            raise ValueError("stream_id must be nonnegative")


def make_generator(seed: SeedSpec) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed.base_seed) & _MASK64, spawn_key=(int(seed.stream_id),))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class NoiseIncrement:
    xi: np.ndarray
    xi2: Optional[np.ndarray] = None

    @property
    def paired(self) -> bool:
        return self.xi2 is not None


def white_increment(gen: np.random.Generator, N: int) -> NoiseIncrement:
    return NoiseIncrement(gen.standard_normal(N))


def _check_rho(rho: float):
    if not -1.0 <= rho <= 1.0:
        raise ValueError(f"correlation must lie in [-1, 1], got {rho}")


def _partner(xi, xi_perp, rho):
    if rho == 1.0:
        return xi.copy()
    if rho == -1.0:
        return -xi
    return rho * xi + math.sqrt(1.0 - rho * rho) * xi_perp


def correlated_pair(gen: np.random.Generator, N: int, rho: float) -> NoiseIncrement:
    """``xi2 = rho*xi + sqrt(1-rho**2)*xi_perp``.

    For ``|rho| = 1`` no independent partner is drawn, so the stream advances
    by ``N`` normals; otherwise by ``2N`` (``xi`` first, then ``xi_perp``).
    """
    _check_rho(rho)
    if abs(rho) == 1.0:
        xi = gen.standard_normal(N)
        return NoiseIncrement(xi, _partner(xi, None, rho))
    both = gen.standard_normal((2, N))
    return NoiseIncrement(both[0], _partner(both[0], both[1], rho))


def draw_block(gen: np.random.Generator, steps: int, N: int, rho: Optional[float] = None):
    """Noise for ``steps`` consecutive steps in one call.

    Consumes the stream exactly like ``steps`` successive calls to
    :func:`white_increment` (``rho is None``) or :func:`correlated_pair`.
    Returns ``xi`` of shape ``(steps, N)``, plus ``xi2`` when ``rho`` is given.
    """
    if rho is None:
        return gen.standard_normal((steps, N)), None
    _check_rho(rho)
    if abs(rho) == 1.0:
        xi = gen.standard_normal((steps, N))
        return xi, _partner(xi, None, rho)
    both = gen.standard_normal((steps, 2, N))
    xi = both[:, 0, :]
    return xi, _partner(xi, both[:, 1, :], rho)
