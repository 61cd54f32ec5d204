"""Monte Carlo checks of the SBM/PAM duality, the PAM self-duality and the
martingale problems.

The duality relates the completely positively correlated SBM (``rho = 1``)
to an independent PAM ``V`` started from the test function ``phi``::

    E[exp(-<X_T, phi>)] = E[exp(-<X_0, V_T> - 1/2 int_0^T <V_r^2, Y_{T-r}^2> dr)]

with ``X = U1 + U2`` and ``Y = U1 - U2 = S_t(U1_0 - U2_0)``. Each side is
estimated from its own ensemble on its own seed streams.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .ensemble import STREAM_FAMILY, run_replicas, seeds_for
from .grid import GridFunction, GridSpec, heat_powers, laplacian, total_mass
from .spde import BatchCounters, PamState, SbmState, SchemeParams, checkpoint_steps, iterate_batch, steps_for
from .stats import MCEstimate, compare, ks_two_sample

__all__ = [
    "DualityConfig",
    "DualityReport",
    "MartingaleReport",
    "UniquenessReport",
    "duality_lhs",
    "duality_rhs",
    "duality_check",
    "self_duality_check",
    "mp_martingale_check",
    "uniqueness_proxy_check",
    "KS_ALPHA",
]

KS_ALPHA = 0.01


@dataclass(frozen=True)
class DualityConfig:
    """Everything one duality-type run needs.

    ``rho`` is 1 for the model under study; other values only appear through
    fault injection. ``lhs_stream`` / ``rhs_stream`` are stream-id offsets.
    """

    scheme: SchemeParams
    U1: GridFunction
    U2: GridFunction
    phi: GridFunction
    T: float
    n: int
    base_seed: int = 0
    rho: float = 1.0
    z_max: float = 4.0
    batch_size: int = 500
    workers: int = 1
    lhs_stream: int = STREAM_FAMILY["lhs"]
    rhs_stream: int = STREAM_FAMILY["rhs"]

    @property
    def spec(self) -> GridSpec:
        return self.U1.spec

    @property
    def n_steps(self) -> int:
        return steps_for(self.T, self.scheme.dt)

    def echo(self) -> dict:
        p = self.scheme
        return {
            "L": self.spec.L,
            "N": self.spec.N,
            "dt": p.dt,
            "lambda": p.lam,
            "clip": p.clip_negative,
            "noise_scale": p.noise_scale,
            "drift_scale": p.drift_scale,
            "rho": self.rho,
            "T": self.T,
            "n": self.n,
            "base_seed": self.base_seed,
        }


@dataclass(frozen=True)
class DualityReport:
    lhs: MCEstimate
    rhs: MCEstimate
    z: float
    passed: bool
    config: dict = field(default_factory=dict)
    diagnostic: str = ""

    def mirrored(self) -> "DualityReport":
        return replace(self, lhs=self.rhs, rhs=self.lhs)


def _report(lhs, rhs, z_max, echo) -> DualityReport:
    c = compare(lhs, rhs, z_max, min_n=min(30, lhs.n, rhs.n))
    return DualityReport(lhs, rhs, c.z, c.passed, echo, c.diagnostic)


# -- batch workers (top level so they pickle) ------------------------------


def _x_pairing_batch(cfg: DualityConfig, scheme: SchemeParams, offset: int, idx):
    init = SbmState(cfg.U1, cfg.U2, 0.0, cfg.rho)
    n_steps = steps_for(cfg.T, scheme.dt)
    phi, dx = cfg.phi.values, cfg.spec.dx
    out = None
    for k, (U1, U2) in iterate_batch(init, scheme, seeds_for(cfg.base_seed, idx, offset), n_steps):
        if k == n_steps:
            out = ((U1 + U2) * phi).sum(axis=1) * dx
    return {"pairing": out}


def _rhs_batch(cfg: DualityConfig, ysq: np.ndarray, idx):
    n_steps = cfg.n_steps
    dt, dx = cfg.scheme.dt, cfg.spec.dx
    X0 = cfg.U1.values + cfg.U2.values
    integral = np.zeros(len(idx))
    end = None
    for k, (V,) in iterate_batch(
        PamState(cfg.phi), cfg.scheme, seeds_for(cfg.base_seed, idx, cfg.rhs_stream), n_steps
    ):
        g = (V * V * ysq[n_steps - k]).sum(axis=1) * dx
        if n_steps:
            w = 0.5 if k in (0, n_steps) else 1.0
            integral += (w * dt) * g
        if k == n_steps:
            end = (V * X0).sum(axis=1) * dx
    return {"value": np.exp(-end - 0.5 * integral)}


def duality_lhs_samples(cfg: DualityConfig) -> np.ndarray:
    res = run_replicas(
        _x_pairing_batch, cfg.n, cfg, cfg.scheme, cfg.lhs_stream,
        batch_size=cfg.batch_size, workers=cfg.workers,
    )
    return np.exp(-res["pairing"])


def duality_lhs(cfg: DualityConfig) -> MCEstimate:
    """Estimate ``E[exp(-<X_T, phi>)]`` over ``cfg.n`` SBM replicas."""
    return MCEstimate.from_samples(duality_lhs_samples(cfg))


def duality_rhs(cfg: DualityConfig) -> MCEstimate:
    """Estimate the PAM side, with the time integral by the trapezoid rule on the step grid."""
    Y0 = cfg.U1 - cfg.U2
    ysq = heat_powers(Y0, cfg.n_steps, cfg.scheme.dt) ** 2
    res = run_replicas(_rhs_batch, cfg.n, cfg, ysq, batch_size=cfg.batch_size, workers=cfg.workers)
    return MCEstimate.from_samples(res["value"])


def duality_check(cfg: DualityConfig) -> DualityReport:
    return _report(duality_lhs(cfg), duality_rhs(cfg), cfg.z_max, cfg.echo())


# -- self-duality ----------------------------------------------------------


def _pam_pairing_batch(V0, test, scheme, T, base_seed, offset, idx):
    n_steps = steps_for(T, scheme.dt)
    out = None
    for k, (V,) in iterate_batch(PamState(V0), scheme, seeds_for(base_seed, idx, offset), n_steps):
        if k == n_steps:
            out = (V * test.values).sum(axis=1) * V0.spec.dx
    return {"pairing": out}


def self_duality_check(
    phi: GridFunction,
    psi: GridFunction,
    scheme: SchemeParams,
    T: float,
    n: int,
    base_seed: int = 0,
    z_max: float = 4.0,
    lhs_stream: int = STREAM_FAMILY["lhs"],
    rhs_stream: int = STREAM_FAMILY["rhs"],
    batch_size: int = 500,
    workers: int = 1,
) -> DualityReport:
    """Compare ``E[exp(-<W_T, psi>)]`` (``W_0 = phi``) with ``E[exp(-<phi, V_T>)]`` (``V_0 = psi``).

    The two PAM ensembles run on disjoint stream families. Calling again with
    ``phi``/``psi`` swapped and the stream offsets swapped returns the
    mirrored report.
    """
    kw = dict(batch_size=batch_size, workers=workers)
    lhs = run_replicas(_pam_pairing_batch, n, phi, psi, scheme, T, base_seed, lhs_stream, **kw)
    rhs = run_replicas(_pam_pairing_batch, n, psi, phi, scheme, T, base_seed, rhs_stream, **kw)
    echo = {
        "L": phi.spec.L, "N": phi.spec.N, "dt": scheme.dt, "lambda": scheme.lam,
        "T": T, "n": n, "base_seed": base_seed,
    }
    return _report(
        MCEstimate.from_samples(np.exp(-lhs["pairing"])),
        MCEstimate.from_samples(np.exp(-rhs["pairing"])),
        z_max,
        echo,
    )


# -- martingale problems ---------------------------------------------------


@dataclass(frozen=True)
class MartingaleReport:
    """Per-checkpoint z statistics.

    ``mean_z`` tests ``E[M_t] = 0``; ``bracket_z`` tests ``E[M_t^2] = E[<M>_t]``
    by the paired difference ``M_t^2 - <M>_t``; ``mass_z[name]`` tests that the
    mean total mass equals its initial value.
    """

    times: np.ndarray
    mean_z: np.ndarray
    bracket_z: np.ndarray
    mass_z: dict
    mass_mean: dict
    mass_stderr: dict
    bracket_mean: np.ndarray
    m2_mean: np.ndarray
    z_max: float
    clip_events: int

    @property
    def passed(self) -> bool:
        zs = [self.mean_z, self.bracket_z, *self.mass_z.values()]
        return bool(all(np.all(z <= self.z_max) for z in zs))


def _mp_batch(init, scheme, n_steps, ks, tests, base_seed, offset, idx):
    """Martingale ``M_k = <X_k, S_{T-t_k} phi> - <X_0, S_T phi>`` and its discrete bracket.

    ``tests[k]`` is ``S_{(n-k) dt} phi``. Step ``k -> k+1`` adds
    ``<noise_k, tests[k+1]>`` to ``M``, so the bracket is the left-point sum
    ``dt * sum_{j<k} <sigma_j^2, tests[j+1]^2>`` with ``sigma^2 = X^2 - Y^2``
    (or ``V^2``) taken where the scheme evaluates its noise coefficient: the
    current state for ``euler``, the heat-stepped state for ``split``. This is
    the exact compensator of ``M^2`` up to clipping.
    """
    dx, dt = init.spec.dx, scheme.dt
    sbm = isinstance(init, SbmState)
    split = scheme.scheme == "split"
    B = len(idx)
    pos = {k: i for i, k in enumerate(ks)}
    M = np.zeros((B, len(ks)))
    br = np.zeros((B, len(ks)))
    masses = {nm: np.zeros((B, len(ks))) for nm in (("U1", "U2") if sbm else ("V",))}
    bracket = np.zeros(B)
    m0 = None
    counters = BatchCounters(np.zeros(B, dtype=np.int64))
    coef = (lambda a: a + (0.5 * scheme.lam * scheme.drift_scale) * laplacian(a)) if split else (lambda a: a)
    for k, f in iterate_batch(init, scheme, seeds_for(base_seed, idx, offset), n_steps, counters=counters):
        if sbm:
            U1, U2 = f
            X = U1 + U2
        else:
            (X,) = f
        pk = (X * tests[k]).sum(axis=1) * dx
        if k == 0:
            m0 = pk
        if k in pos:
            i = pos[k]
            M[:, i] = pk - m0
            br[:, i] = bracket
            if sbm:
                masses["U1"][:, i] = U1.sum(axis=1) * dx
                masses["U2"][:, i] = U2.sum(axis=1) * dx
            else:
                masses["V"][:, i] = X.sum(axis=1) * dx
        if k < n_steps:
            if sbm:
                sq = 4.0 * coef(U1) * coef(U2)  # X^2 - Y^2
            else:
                sq = coef(X) ** 2
            bracket = bracket + dt * (sq * tests[k + 1] ** 2).sum(axis=1) * dx
    out = {"M": M, "bracket": br, "clips": counters.clips}
    out.update({f"mass_{nm}": v for nm, v in masses.items()})
    return out


def _z_zero_mean(x) -> float:
    est = MCEstimate.from_samples(x)
    if est.stderr == 0.0:
        return 0.0 if est.mean == 0.0 else math.inf
    return abs(est.mean) / est.stderr


def mp_martingale_check(
    init,
    phi: GridFunction,
    scheme: SchemeParams,
    T: float,
    checkpoints: Sequence[float],
    n: int,
    base_seed: int = 0,
    z_max: float = 4.0,
    batch_size: int = 500,
    workers: int = 1,
) -> MartingaleReport:
    """Check first-moment flatness and the bracket of the martingale problem.

    ``init`` is an :class:`SbmState` (checks the problem for ``X``) or a
    :class:`PamState` (checks it for ``V``).
    """
    n_steps = steps_for(T, scheme.dt)
    ks = checkpoint_steps(checkpoints, scheme.dt)
    tests = heat_powers(phi, n_steps, scheme.dt)[::-1]
    res = run_replicas(
        _mp_batch, n, init, scheme, n_steps, ks, tests, base_seed, STREAM_FAMILY["lhs"],
        batch_size=batch_size, workers=workers,
    )
    M, br = res["M"], res["bracket"]
    mean_z = np.array([_z_zero_mean(M[:, i]) for i in range(len(ks))])
    bracket_z = np.array([_z_zero_mean(M[:, i] ** 2 - br[:, i]) for i in range(len(ks))])
    mass_z, mass_mean, mass_se = {}, {}, {}
    initial = (
        {"mass_U1": init.U1, "mass_U2": init.U2} if isinstance(init, SbmState) else {"mass_V": init.V}
    )
    for key, f0 in initial.items():
        m, m0 = res[key], total_mass(f0)
        ests = [MCEstimate.from_samples(m[:, i]) for i in range(len(ks))]
        mass_mean[key] = np.array([e.mean for e in ests])
        mass_se[key] = np.array([e.stderr for e in ests])
        mass_z[key] = np.array([_z_zero_mean(m[:, i] - m0) for i in range(len(ks))])
    return MartingaleReport(
        times=np.array([k * scheme.dt for k in ks]),
        mean_z=mean_z,
        bracket_z=bracket_z,
        mass_z=mass_z,
        mass_mean=mass_mean,
        mass_stderr=mass_se,
        bracket_mean=br.mean(axis=0),
        m2_mean=(M**2).mean(axis=0),
        z_max=z_max,
        clip_events=int(res["clips"].sum()),
    )


# -- uniqueness proxy ------------------------------------------------------


@dataclass(frozen=True)
class UniquenessReport:
    """Two-sample KS comparisons of ``<X_T, phi>``.

    ``same_dt``: independent seeds, same step. ``refined``: step ``dt`` against
    ``dt/2`` at fixed ``dx``; it passes when the KS statistic stays within the
    0.01-level critical value plus ``allowance``.
    """

    ks_same: float
    p_same: float
    ks_refined: float
    p_refined: float
    critical: float
    allowance: float
    n: int

    @property
    def passed_same(self) -> bool:
        return self.p_same >= KS_ALPHA

    @property
    def passed_refined(self) -> bool:
        return self.ks_refined <= self.critical + self.allowance

    @property
    def passed(self) -> bool:
        return self.passed_same and self.passed_refined


def ks_critical(n: int, m: int, alpha: float = KS_ALPHA) -> float:
    """Asymptotic two-sample KS critical value."""
    c = math.sqrt(-0.5 * math.log(alpha / 2.0))
    return c * math.sqrt((n + m) / (n * m))


#: extra KS distance tolerated between step sizes dt and dt/2. A refinement
#: study (dt, dt/2, dt/4, n = 2e4, three seeds) found dt-vs-dt/2 distances
#: indistinguishable from same-dt distances; 0.005 is its resolution.
REFINEMENT_ALLOWANCE = 0.005


def x_pairing_samples(cfg: DualityConfig, scheme: Optional[SchemeParams] = None, offset: int = 0):
    scheme = scheme or cfg.scheme
    res = run_replicas(
        _x_pairing_batch, cfg.n, cfg, scheme, offset, batch_size=cfg.batch_size, workers=cfg.workers
    )
    return res["pairing"]


def uniqueness_proxy_check(cfg: DualityConfig, allowance: float = REFINEMENT_ALLOWANCE) -> UniquenessReport:
    a = x_pairing_samples(cfg, offset=STREAM_FAMILY["a"])
    b = x_pairing_samples(cfg, offset=STREAM_FAMILY["b"])
    c = x_pairing_samples(cfg, cfg.scheme.with_dt(cfg.scheme.dt / 2), offset=STREAM_FAMILY["c"])
    d_same, p_same = ks_two_sample(a, b)
    d_ref, p_ref = ks_two_sample(a, c)
    return UniquenessReport(d_same, p_same, d_ref, p_ref, ks_critical(cfg.n, cfg.n), allowance, cfg.n)
