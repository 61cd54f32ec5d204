"""Steppers for the symbiotic branching model (SBM) and the parabolic
Anderson model (PAM) on a periodic grid.

Two schemes are available through :attr:`SchemeParams.scheme`.

``"euler"`` is plain explicit Euler-Maruyama, noise coefficient at the old
state, then clipping at zero::

    U_i' = U_i + (lam/2) lap(U_i) + sqrt(max(U1*U2, 0)) xi_i sqrt(dt/dx)
    V'   = V   + (lam/2) lap(V)   + V xi sqrt(dt/dx)

``"split"`` (default) takes the heat step ``H`` first and then the noise
substep on ``H U``. For the PAM and for the SBM with ``rho != 1`` the noise
substep is the same Gaussian increment with the coefficient evaluated at
``H U``. For the SBM with ``rho = 1`` both components receive one common
increment, and the smaller component ``m`` follows the exact transition of
``dm = sqrt(M m) dW`` with ``M`` (the larger one) frozen over the step: a
Poisson mixture of Gamma laws. That increment has mean exactly zero, keeps
both components nonnegative without clipping and leaves ``U1 - U2`` equal to
its heat-evolved value. Gaussian increments plus clipping add mass wherever
one component is near zero and the other is not, which is the regime that
longtime runs spend most of their time in.

Clipping for ``|rho| = 1`` keeps the noise-free combination intact
(``U1 - U2`` for ``rho = 1``, ``U1 + U2`` for ``rho = -1``).

Single-replica functions (:func:`step_sbm`, :func:`step_pam`,
:func:`simulate`) and the batched :func:`iterate_batch` share the same array
kernels, so a replica gives bit-identical numbers alone or inside a batch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterator, Mapping, Optional, Sequence, Union

import numpy as np

from .grid import GridFunction, GridSpec, check_lambda, laplacian
from .noise import NoiseIncrement, SeedSpec, draw_block, make_generator

__all__ = [
    "SchemeParams",
    "SbmState",
    "PamState",
    "Trajectory",
    "step_sbm",
    "step_pam",
    "xy_view",
    "simulate",
    "iterate_batch",
    "steps_for",
    "checkpoint_steps",
]


SCHEMES = ("split", "euler")


@dataclass(frozen=True)
class SchemeParams:
    """Time step and scheme switches.

    ``noise_scale`` and ``drift_scale`` exist for fault injection only and
    are 1 in every correct run.
    """

    dt: float
    dx: float
    clip_negative: bool = True
    noise_scale: float = 1.0
    drift_scale: float = 1.0
    scheme: str = "split"

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; choose from {SCHEMES}")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        check_lambda(self.lam)

    @property
    def lam(self) -> float:
        return self.dt / self.dx**2

    @property
    def noise_factor(self) -> float:
        return self.noise_scale * math.sqrt(self.dt / self.dx)

    @classmethod
    def for_grid(
        cls,
        spec: GridSpec,
        lam: float = 0.5,
        T: Optional[float] = None,
        checkpoints: Sequence[float] = (),
        **kw,
    ) -> "SchemeParams":
        """Largest ``dt <= lam*dx**2`` that puts ``T`` and all checkpoints on the step grid."""
        check_lambda(lam)
        dt0 = lam * spec.dx**2
        if T is None or T <= 0:
            return cls(dt0, spec.dx, **kw)
        n = max(1, math.ceil(T / dt0 - 1e-9))
        for _ in range(100000):
            if all(_is_multiple(t * n / T) for t in checkpoints):
                return cls(T / n, spec.dx, **kw)
            n += 1
        raise ValueError("no step size puts every checkpoint on the step grid")

    def with_dt(self, dt: float) -> "SchemeParams":
        return replace(self, dt=dt)


def _is_multiple(r: float) -> bool:
    return abs(r - round(r)) <= 1e-9 * max(1.0, abs(r))


def steps_for(t: float, dt: float) -> int:
    """Number of steps to reach ``t``; rejects times off the step grid."""
    r = t / dt
    if t < 0 or not _is_multiple(r):
        raise ValueError(f"time {t} is not a multiple of dt = {dt}")
    return int(round(r))


def checkpoint_steps(checkpoints: Sequence[float], dt: float) -> list[int]:
    ks = [steps_for(t, dt) for t in checkpoints]
    if any(b <= a for a, b in zip(ks, ks[1:])):
        raise ValueError("checkpoint times must be strictly increasing")
    return ks


@dataclass(frozen=True)
class SbmState:
    U1: GridFunction
    U2: GridFunction
    t: float = 0.0
    rho: float = 1.0

    def __post_init__(self):
        if self.U1.spec != self.U2.spec:
            raise ValueError("U1 and U2 live on different grids")
        if np.any(self.U1.values < 0) or np.any(self.U2.values < 0):
            raise ValueError("SBM components must be nonnegative")
        if not -1.0 <= self.rho <= 1.0:
            raise ValueError(f"rho must lie in [-1, 1], got {self.rho}")

    @property
    def spec(self) -> GridSpec:
        return self.U1.spec


@dataclass(frozen=True)
class PamState:
    V: GridFunction
    t: float = 0.0

    def __post_init__(self):
        if np.any(self.V.values < 0):
            raise ValueError("PAM state must be nonnegative")

    @property
    def spec(self) -> GridSpec:
        return self.V.spec


# -- array kernels ---------------------------------------------------------


def sbm_unclipped(U1, U2, xi1, xi2, lam, noise_factor, drift_scale=1.0, split=False):
    d = 0.5 * lam * drift_scale
    H1 = U1 + d * laplacian(U1)
    H2 = U2 + d * laplacian(U2)
    C1, C2 = (H1, H2) if split else (U1, U2)
    sig = np.sqrt(np.maximum(C1 * C2, 0.0)) * noise_factor
    return H1 + sig * xi1, H2 + sig * xi2


def sbm_feller(U1, U2, lam, var_factor, gens, drift_scale=1.0):
    """``rho = 1`` split step; ``var_factor = noise_scale**2 * dt/dx``.

    ``U1``, ``U2`` have shape ``(B, N)``; row ``b`` draws from ``gens[b]``.
    """
    d = 0.5 * lam * drift_scale
    H1 = U1 + d * laplacian(U1)
    H2 = U2 + d * laplacian(U2)
    Y = H1 - H2
    low = np.maximum(np.minimum(H1, H2), 0.0)
    theta = np.maximum(H1, H2) * (0.5 * var_factor)
    rate = np.divide(low, theta, out=np.zeros_like(low), where=theta > 0)
    new = np.empty_like(low)
    for b, g in enumerate(gens):
        new[b] = g.standard_gamma(g.poisson(rate[b])) * theta[b]
    up = Y >= 0
    return np.where(up, new + Y, new), np.where(up, new, new - Y)


def clip_sbm(A1, A2, rho):
    """Restore nonnegativity in place; returns clipped-cell counts along the last axis."""
    if rho == 1.0:
        low = np.minimum(A1, A2)
        neg = low < 0
        if neg.any():
            shift = np.where(neg, -low, 0.0)
            A1 += shift
            A2 += shift
            np.maximum(A1, 0.0, out=A1)
            np.maximum(A2, 0.0, out=A2)
        return np.count_nonzero(neg, axis=-1)
    if rho == -1.0:
        n1, n2 = A1 < 0, A2 < 0
        neg = n1 | n2
        if neg.any():
            A2 += np.where(n1, A1, 0.0)
            A1 += np.where(n2, A2, 0.0)
            A1[n1] = 0.0
            A2[n2] = 0.0
            np.maximum(A1, 0.0, out=A1)
            np.maximum(A2, 0.0, out=A2)
        return np.count_nonzero(neg, axis=-1)
    n = np.count_nonzero(A1 < 0, axis=-1) + np.count_nonzero(A2 < 0, axis=-1)
    np.maximum(A1, 0.0, out=A1)
    np.maximum(A2, 0.0, out=A2)
    return n


def pam_unclipped(V, xi, lam, noise_factor, drift_scale=1.0, split=False):
    H = V + (0.5 * lam * drift_scale) * laplacian(V)
    return H + (noise_factor * (H if split else V)) * xi


def clip_pam(A):
    neg = A < 0
    n = np.count_nonzero(neg, axis=-1)
    if neg.any():
        A[neg] = 0.0
    return n


# -- single-state API ------------------------------------------------------


def _check_noise(spec: GridSpec, noise: NoiseIncrement, paired: bool):
    if noise.xi.shape != (spec.N,):
        raise ValueError(f"noise has shape {noise.xi.shape}, grid has N={spec.N}")
    if paired and (noise.xi2 is None or noise.xi2.shape != (spec.N,)):
        raise ValueError("SBM step needs a correlated noise pair")


def _uses_feller(p: SchemeParams, rho: Optional[float]) -> bool:
    return p.scheme == "split" and rho == 1.0


def step_sbm(s: SbmState, p: SchemeParams, noise) -> SbmState:
    """Advance one step.

    ``noise`` is a correlated :class:`NoiseIncrement` pair, or, for the
    ``"split"`` scheme at ``rho = 1``, the replica's generator.
    """
    if _uses_feller(p, s.rho):
        if not isinstance(noise, np.random.Generator):
            raise TypeError("the split scheme at rho = 1 draws its own increments; pass a Generator")
        A1, A2 = sbm_feller(
            s.U1.values[None], s.U2.values[None], p.lam, p.noise_scale**2 * p.dt / p.dx,
            [noise], p.drift_scale,
        )
        A1, A2 = A1[0], A2[0]
    else:
        _check_noise(s.spec, noise, paired=True)
        A1, A2 = sbm_unclipped(
            s.U1.values, s.U2.values, noise.xi, noise.xi2, p.lam, p.noise_factor, p.drift_scale,
            split=p.scheme == "split",
        )
        if p.clip_negative:
            clip_sbm(A1, A2, s.rho)
    return SbmState(GridFunction(s.spec, A1), GridFunction(s.spec, A2), s.t + p.dt, s.rho)


def step_pam(s: PamState, p: SchemeParams, noise: NoiseIncrement) -> PamState:
    _check_noise(s.spec, noise, paired=False)
    A = pam_unclipped(
        s.V.values, noise.xi, p.lam, p.noise_factor, p.drift_scale, split=p.scheme == "split"
    )
    if p.clip_negative:
        clip_pam(A)
    return PamState(GridFunction(s.spec, A), s.t + p.dt)


def xy_view(s: SbmState) -> tuple[GridFunction, GridFunction]:
    return s.U1 + s.U2, s.U1 - s.U2


# -- batched engine --------------------------------------------------------

State = Union[SbmState, PamState]


@dataclass
class BatchCounters:
    clips: np.ndarray  # per replica


def iterate_batch(
    initial: State,
    p: SchemeParams,
    seeds: Sequence[SeedSpec],
    n_steps: int,
    chunk: int = 64,
    counters: Optional[BatchCounters] = None,
) -> Iterator[tuple[int, tuple[np.ndarray, ...]]]:
    """Yield ``(k, fields)`` for ``k = 0..n_steps`` over a batch of replicas.

    ``fields`` is ``(U1, U2)`` or ``(V,)``, each of shape ``(len(seeds), N)``.
    Replica ``i`` is driven by its own generator from ``seeds[i]``. The yielded
    arrays are reused on the next step; copy them to keep them.
    """
    spec = initial.spec
    if abs(spec.dx - p.dx) > 1e-12 * spec.dx:
        raise ValueError("scheme dx does not match the grid")
    B, N = len(seeds), spec.N
    gens = [make_generator(s) for s in seeds]
    sbm = isinstance(initial, SbmState)
    rho = initial.rho if sbm else None
    if sbm:
        fields = (np.tile(initial.U1.values, (B, 1)), np.tile(initial.U2.values, (B, 1)))
    else:
        fields = (np.tile(initial.V.values, (B, 1)),)
    clips = counters.clips if counters is not None else np.zeros(B, dtype=np.int64)
    split = p.scheme == "split"
    yield 0, fields
    if sbm and _uses_feller(p, rho):
        var_factor = p.noise_scale**2 * p.dt / p.dx
        for k in range(1, n_steps + 1):
            fields = sbm_feller(fields[0], fields[1], p.lam, var_factor, gens, p.drift_scale)
            yield k, fields
        return
    k = 0
    while k < n_steps:
        m = min(chunk, n_steps - k)
        blocks = [draw_block(g, m, N, rho) for g in gens]
        xi = np.stack([b[0] for b in blocks], axis=1)  # (m, B, N)
        xi2 = np.stack([b[1] for b in blocks], axis=1) if sbm else None
        for j in range(m):
            if sbm:
                A1, A2 = sbm_unclipped(
                    fields[0], fields[1], xi[j], xi2[j], p.lam, p.noise_factor, p.drift_scale, split
                )
                if p.clip_negative:
                    clips += clip_sbm(A1, A2, rho)
                fields = (A1, A2)
            else:
                A = pam_unclipped(fields[0], xi[j], p.lam, p.noise_factor, p.drift_scale, split)
                if p.clip_negative:
                    clips += clip_pam(A)
                fields = (A,)
            k += 1
            yield k, fields


# -- trajectories ----------------------------------------------------------


@dataclass
class Trajectory:
    times: np.ndarray
    observables: dict = field(default_factory=dict)
    fields: dict = field(default_factory=dict)
    clip_count: int = 0
    #: smallest value of X - |Y| seen at any checkpoint (SBM only)
    min_x_minus_abs_y: float = float("nan")


def simulate(
    initial: State,
    T: float,
    p: SchemeParams,
    seed: SeedSpec,
    checkpoints: Optional[Sequence[float]] = None,
    observables: Optional[Mapping[str, GridFunction]] = None,
    record_fields: bool = False,
) -> Trajectory:
    """Run one replica to time ``T`` and record observables at checkpoints.

    Always records total masses (``mass_U1``, ``mass_U2`` or ``mass_V``). For
    every named test function ``g`` in ``observables`` it records
    ``<U1,g>``, ``<U2,g>``, ``<X,g>``, ``<Y,g>`` (keys ``U1:g`` etc.) or ``V:g``.
    Checkpoint times are absolute (the state's own ``t`` is ignored).
    """
    n_steps = steps_for(T, p.dt)
    if checkpoints is None:
        checkpoints = [0.0, T]
    ks = checkpoint_steps(checkpoints, p.dt)
    if ks and ks[-1] > n_steps:
        raise ValueError("checkpoint beyond the horizon")
    observables = dict(observables or {})
    spec = initial.spec
    for g in observables.values():
        if g.spec != spec:
            raise ValueError("test function on a different grid")
    sbm = isinstance(initial, SbmState)
    names = ["U1", "U2", "X", "Y"] if sbm else ["V"]
    rec: dict[str, list] = {f"mass_{nm}": [] for nm in (names[:2] if sbm else names)}
    for gname in observables:
        for nm in names:
            rec[f"{nm}:{gname}"] = []
    fields_rec: dict[str, list] = {nm: [] for nm in (names[:2] if sbm else names)} if record_fields else {}
    counters = BatchCounters(np.zeros(1, dtype=np.int64))
    min_gap = math.inf
    wanted = set(ks)
    for k, f in iterate_batch(initial, p, [seed], ks[-1] if ks else 0, counters=counters):
        if k not in wanted:
            continue
        if sbm:
            U1, U2 = f[0][0], f[1][0]
            arrays = {"U1": U1, "U2": U2, "X": U1 + U2, "Y": U1 - U2}
            min_gap = min(min_gap, float(np.min(arrays["X"] - np.abs(arrays["Y"]))))
            rec["mass_U1"].append(float(np.sum(U1) * spec.dx))
            rec["mass_U2"].append(float(np.sum(U2) * spec.dx))
        else:
            arrays = {"V": f[0][0]}
            rec["mass_V"].append(float(np.sum(arrays["V"]) * spec.dx))
        for gname, g in observables.items():
            for nm in names:
                rec[f"{nm}:{gname}"].append(float(np.sum(arrays[nm] * g.values) * spec.dx))
        for nm in fields_rec:
            fields_rec[nm].append(arrays[nm].copy())
    return Trajectory(
        times=np.array([k * p.dt for k in ks]),
        observables={k: np.array(v) for k, v in rec.items()},
        fields={k: np.array(v) for k, v in fields_rec.items()},
        clip_count=int(counters.clips[0]),
        min_x_minus_abs_y=min_gap if sbm else float("nan"),
    )
