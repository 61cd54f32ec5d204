"""Uniform periodic grid, grid functions, pairings and the discrete heat flow.

The real line is replaced by the torus ``[-L, L)`` sampled at ``N`` points.
Every stochastic stepper in the package uses the same 3-point stencil as
:func:`heat_step`, so deterministic and stochastic evolutions share one
discrete Laplacian.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "GridSpec",
    "GridFunction",
    "make_grid",
    "sample",
    "pair",
    "total_mass",
    "mean_bar",
    "heat_kernel",
    "heat_step",
    "heat_semigroup",
    "positive_part",
    "negative_part",
    "laplacian",
    "LAMBDA_MAX",
    "HorizonError",
    "check_horizon",
]

#: explicit-scheme stability bound on dt/dx**2
LAMBDA_MAX = 1.0
_LAMBDA_SLACK = 1e-12


@dataclass(frozen=True)
class GridSpec:
    """Periodic grid on ``[-L, L)`` with ``N`` points."""

    L: float
    N: int

    def __post_init__(self):
        if not (isinstance(self.N, (int, np.integer)) and self.N >= 4 and self.N % 2 == 0):
            raise ValueError(f"N must be an even integer >= 4, got {self.N!r}")
        if not (math.isfinite(self.L) and self.L > 0):
            raise ValueError(f"L must be positive, got {self.L!r}")

    @property
    def dx(self) -> float:
        return 2.0 * self.L / self.N

    @property
    def x(self) -> np.ndarray:
        return -self.L + self.dx * np.arange(self.N)

    def lam(self, dt: float) -> float:
        return dt / self.dx**2


def make_grid(L: float, N: int) -> GridSpec:
    return GridSpec(float(L), int(N) if float(N).is_integer() else N)


class GridFunction:
    """Real values on a :class:`GridSpec`. Immutable.

    Supports ``+``, ``-`` and scalar / pointwise ``*`` with other grid
    functions on the same grid.
    """

    __slots__ = ("spec", "values")

    def __init__(self, spec: GridSpec, values):
        arr = np.array(values, dtype=np.float64)
        if arr.shape != (spec.N,):
            raise ValueError(f"expected {spec.N} values, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("grid function values must be finite")
        arr.flags.writeable = False
        object.__setattr__(self, "spec", spec)
        object.__setattr__(self, "values", arr)

    def __setattr__(self, name, value):
        raise AttributeError("GridFunction is immutable")

    def __reduce__(self):
        return (GridFunction, (self.spec, np.array(self.values)))

    def __repr__(self):
        return f"GridFunction(L={self.spec.L}, N={self.spec.N}, max={self.values.max():.4g})"

    def _other(self, other):
        if isinstance(other, GridFunction):
            _check_same(self, other)
            return other.values
        return other

    def __add__(self, other):
        return GridFunction(self.spec, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return GridFunction(self.spec, self.values - self._other(other))

    def __rsub__(self, other):
        return GridFunction(self.spec, self._other(other) - self.values)

    def __mul__(self, other):
        return GridFunction(self.spec, self.values * self._other(other))

    __rmul__ = __mul__

    def __neg__(self):
        return GridFunction(self.spec, -self.values)

    def __abs__(self):
        return GridFunction(self.spec, np.abs(self.values))

    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))

    @classmethod
    def constant(cls, spec: GridSpec, c: float) -> "GridFunction":
        return cls(spec, np.full(spec.N, float(c)))

    @classmethod
    def zeros(cls, spec: GridSpec) -> "GridFunction":
        return cls(spec, np.zeros(spec.N))


def _check_same(f: GridFunction, g: GridFunction):
    if f.spec != g.spec:
        raise ValueError(f"grid mismatch: {f.spec} vs {g.spec}")


def sample(spec: GridSpec, d) -> GridFunction:
    """Evaluate a descriptor (any callable on an array of points) at the grid points."""
    if hasattr(d, "sample"):
        values = d.sample(spec)
    else:
        values = d(spec.x)
    return GridFunction(spec, np.broadcast_to(np.asarray(values, dtype=np.float64), (spec.N,)))


def pair(f: GridFunction, g: GridFunction) -> float:
    """Riemann-sum pairing ``sum_j f_j g_j dx``."""
    _check_same(f, g)
    return float(np.sum(f.values * g.values) * f.spec.dx)


def total_mass(f: GridFunction) -> float:
    return float(np.sum(f.values) * f.spec.dx)


def mean_bar(f: GridFunction) -> float:
    return total_mass(f) / (2.0 * f.spec.L)


def heat_kernel(t: float, x):
    """Gaussian kernel of ``u_t = u_xx / 2`` on the line."""
    if not t > 0:
        raise ValueError(f"heat kernel needs t > 0, got {t}")
    x = np.asarray(x, dtype=np.float64)
    out = np.exp(-(x * x) / (2.0 * t)) / math.sqrt(2.0 * math.pi * t)
    return float(out) if out.ndim == 0 else out


def laplacian(a: np.ndarray) -> np.ndarray:
    """Undivided periodic second difference along the last axis."""
    return np.roll(a, 1, axis=-1) + np.roll(a, -1, axis=-1) - 2.0 * a


def check_lambda(lam: float):
    if not lam <= LAMBDA_MAX + _LAMBDA_SLACK:
        raise ValueError(
            f"stability bound violated: lambda = dt/dx^2 = {lam:.6g} > {LAMBDA_MAX}"
        )


class HorizonError(ValueError):
    pass


def check_horizon(spec: GridSpec, T: float, allow_wraparound: bool = False):
    """Enforce the torus-horizon rule ``sqrt(T) <= L/4``.

    Mass started near the origin then stays far from the seam at ``+-L``.
    ``allow_wraparound`` skips the check, for data where wrap-around does not
    matter (flat initial conditions) or is accepted knowingly.
    """
    if T < 0:
        raise ValueError(f"horizon must be nonnegative, got {T}")
    if not allow_wraparound and math.sqrt(T) > spec.L / 4.0 * (1 + 1e-12):
        raise HorizonError(
            f"torus-horizon rule violated: sqrt(T) = {math.sqrt(T):.4g} > L/4 = {spec.L / 4:.4g}"
        )


def _heat_step_array(a: np.ndarray, lam: float) -> np.ndarray:
    return a + (0.5 * lam) * laplacian(a)


def heat_step(f: GridFunction, dt: float) -> GridFunction:
    """One explicit step of ``u_t = u_xx / 2``; requires ``dt/dx**2 <= 1``."""
    lam = f.spec.lam(dt)
    check_lambda(lam)
    return GridFunction(f.spec, _heat_step_array(f.values, lam))


def heat_semigroup(f: GridFunction, t: float, dt: float) -> GridFunction:
    """Discrete ``S_t f``: ``ceil(t/dt)`` heat steps, the last one shortened.

    Times within ``1e-9`` relative of a multiple of ``dt`` are treated as exact
    multiples, so ``S_{k dt}`` is exactly ``k`` full steps.
    """
    if t < 0:
        raise ValueError(f"t must be nonnegative, got {t}")
    lam = f.spec.lam(dt)
    check_lambda(lam)
    n_full, rest = _split_time(t, dt)
    a = f.values
    for _ in range(n_full):
        a = _heat_step_array(a, lam)
    if rest > 0:
        a = _heat_step_array(a, f.spec.lam(rest))
    return GridFunction(f.spec, a)


def _split_time(t: float, dt: float) -> tuple[int, float]:
    ratio = t / dt
    k = round(ratio)
    if abs(ratio - k) <= 1e-9 * max(1.0, ratio):
        return int(k), 0.0
    n_full = int(math.floor(ratio))
    return n_full, t - n_full * dt


def heat_powers(f: GridFunction, n: int, dt: float) -> np.ndarray:
    """Array of shape ``(n+1, N)`` holding ``S_{k dt} f`` for ``k = 0..n``."""
    lam = f.spec.lam(dt)
    check_lambda(lam)
    out = np.empty((n + 1, f.spec.N))
    out[0] = f.values
    for k in range(n):
        out[k + 1] = _heat_step_array(out[k], lam)
    return out


def positive_part(f: GridFunction) -> GridFunction:
    return GridFunction(f.spec, np.maximum(f.values, 0.0))


def negative_part(f: GridFunction) -> GridFunction:
    return GridFunction(f.spec, np.maximum(-f.values, 0.0))
