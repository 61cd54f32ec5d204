"""Dispatch a validated :class:`ExperimentConfig` to its experiment and tabulate the result."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import ExperimentConfig
from .duality import (
    DualityConfig,
    DualityReport,
    REFINEMENT_ALLOWANCE,
    duality_check,
    mp_martingale_check,
    self_duality_check,
    uniqueness_proxy_check,
)
from .ensemble import STREAM_FAMILY
from .experiments import (
    EnsembleConfig,
    LongtimeReport,
    global_extinction_experiment,
    heat_longtime_suite,
    local_extinction_experiment,
    pam_decay_experiment,
)
from .grid import sample
from .noise import GENERATOR_VERSION, SeedSpec
from .spde import PamState, SbmState, simulate

__all__ = ["RunResult", "execute", "TIDY_COLUMNS", "REPORT_COLUMNS"]

TIDY_COLUMNS = ["kind", "checkpoint", "time", "observable", "statistic", "value"]
REPORT_COLUMNS = [
    "kind", "n", "lhs_mean", "lhs_stderr", "rhs_mean", "rhs_stderr", "z", "pass",
    "base_seed", "lhs_stream", "rhs_stream", "L", "N", "T", "dt", "lambda", "clip", "scheme",
    "noise_scale", "drift_scale", "rho", "generator",
]
UNIQUENESS_COLUMNS = [
    "kind", "n", "ks_same", "p_same", "ks_refined", "p_refined", "critical", "allowance",
    "pass_same", "pass_refined", "pass", "base_seed", "dt", "lambda", "generator",
]


@dataclass
class RunResult:
    kind: str
    passed: bool
    tables: dict  # file stem -> (columns, rows)
    verdicts: dict
    summary: list = field(default_factory=list)
    fields: list = field(default_factory=list)  # (name, t, values)
    plottable: str = ""  # file stem of the tidy table, if any


_FAULT_USE = {
    "noise-scale": None,
    "drift-scale": None,
    "wrong-rho": {"duality", "mp-check", "uniqueness-proxy"},
}


def _check_faults(cfg: ExperimentConfig):
    for kind in cfg.faults:
        allowed = _FAULT_USE[kind]
        if cfg.kind == "heat-suite" or (allowed is not None and cfg.kind not in allowed):
            raise ValueError(f"fault {kind} does not apply to experiment {cfg.kind}")


def _duality_cfg(cfg: ExperimentConfig, workers: int) -> DualityConfig:
    spec = cfg.spec
    return DualityConfig(
        scheme=cfg.scheme_params(),
        U1=sample(spec, cfg.descriptor("u1")),
        U2=sample(spec, cfg.descriptor("u2")),
        phi=sample(spec, cfg.descriptor("phi")),
        T=cfg.T,
        n=cfg.replicas,
        base_seed=cfg.seed,
        rho=cfg.effective_rho,
        z_max=cfg.z_max,
        batch_size=cfg.batch_size,
        workers=workers,
    )


def _report_row(cfg: ExperimentConfig, rep: DualityReport, scheme):
    return [
        cfg.kind, rep.lhs.n, rep.lhs.mean, rep.lhs.stderr, rep.rhs.mean, rep.rhs.stderr, rep.z, rep.passed,
        cfg.seed, STREAM_FAMILY["lhs"], STREAM_FAMILY["rhs"], cfg.L, cfg.N, cfg.T, scheme.dt, scheme.lam,
        scheme.clip_negative, scheme.scheme, scheme.noise_scale, scheme.drift_scale, cfg.effective_rho,
        GENERATOR_VERSION,
    ]


def _tidy(cfg: ExperimentConfig, rep: LongtimeReport):
    rows = [[cfg.kind, i, t, obs, stat, v] for i, t, obs, stat, v in rep.rows()]
    for name, ok in rep.verdicts.items():
        rows.append([cfg.kind, "", "", "verdict", name, int(ok)])
    rows.append([cfg.kind, "", "", "verdict", "all", int(rep.passed)])
    return TIDY_COLUMNS, rows


def _ensemble(cfg: ExperimentConfig, workers: int) -> EnsembleConfig:
    return EnsembleConfig(
        spec=cfg.spec, T=cfg.T, checkpoints=cfg.checkpoints, n=cfg.replicas, scheme=cfg.scheme_params(),
        base_seed=cfg.seed, z_max=cfg.z_max, batch_size=cfg.batch_size, workers=workers,
        allow_wraparound=cfg.allow_wraparound,
    )


def _thresholds(cfg: ExperimentConfig, prefix: str) -> dict:
    th = cfg.thresholds
    out = {"eps_rel": th.get("eps_rel", 0.1)}
    mapping = {
        "final_fraction": f"{prefix}_final_fraction",
        "sqrt_decay_factor": "pam_sqrt_decay_factor",
        "median_u2_rel": "global_median_u2_rel",
        "u1_rel_tol": f"{prefix}_u1_rel_tol",
    }
    for key, target in mapping.items():
        if key in th:
            out[target] = th[key]
    return out


def _dump(cfg: ExperimentConfig, init) -> list:
    traj = simulate(init, cfg.T, cfg.scheme_params(), SeedSpec(cfg.seed, STREAM_FAMILY["lhs"]),
                    checkpoints=cfg.checkpoints, record_fields=True)
    out = []
    for name, arrs in traj.fields.items():
        for t, a in zip(traj.times, arrs):
            out.append((name, float(t), np.asarray(a)))
    return out


def _lines(rep: LongtimeReport) -> list:
    return [f"{name}: {'pass' if ok else 'FAIL'}" + (f" ({rep.notes[name]})" if name in rep.notes else "")
            for name, ok in rep.verdicts.items()]


def execute(cfg: ExperimentConfig, workers: int = 1) -> RunResult:
    """Run the experiment described by ``cfg``. Results do not depend on ``workers``."""
    _check_faults(cfg)
    kind, spec = cfg.kind, cfg.spec

    if kind == "duality":
        dcfg = _duality_cfg(cfg, workers)
        rep = duality_check(dcfg)
        line = f"lhs {rep.lhs.mean:.6f} +- {rep.lhs.stderr:.2g}, rhs {rep.rhs.mean:.6f} +- {rep.rhs.stderr:.2g}, z = {rep.z:.3f}"
        return RunResult(kind, rep.passed, {"report": (REPORT_COLUMNS, [_report_row(cfg, rep, dcfg.scheme)])},
                         {"z_within_bound": rep.passed}, [line])

    if kind == "self-duality":
        scheme = cfg.scheme_params()
        phi, psi = sample(spec, cfg.descriptor("phi")), sample(spec, cfg.descriptor("psi"))
        rep = self_duality_check(phi, psi, scheme, cfg.T, cfg.replicas, cfg.seed, cfg.z_max,
                                 batch_size=cfg.batch_size, workers=workers)
        line = f"lhs {rep.lhs.mean:.6f} +- {rep.lhs.stderr:.2g}, rhs {rep.rhs.mean:.6f} +- {rep.rhs.stderr:.2g}, z = {rep.z:.3f}"
        return RunResult(kind, rep.passed, {"report": (REPORT_COLUMNS, [_report_row(cfg, rep, scheme)])},
                         {"z_within_bound": rep.passed}, [line])

    if kind == "uniqueness-proxy":
        dcfg = _duality_cfg(cfg, workers)
        rep = uniqueness_proxy_check(dcfg, cfg.thresholds.get("allowance", REFINEMENT_ALLOWANCE))
        row = [kind, rep.n, rep.ks_same, rep.p_same, rep.ks_refined, rep.p_refined, rep.critical, rep.allowance,
               rep.passed_same, rep.passed_refined, rep.passed, cfg.seed, dcfg.scheme.dt, dcfg.scheme.lam,
               GENERATOR_VERSION]
        lines = [f"same dt: KS = {rep.ks_same:.4f}, p = {rep.p_same:.3g}",
                 f"dt vs dt/2: KS = {rep.ks_refined:.4f} (bound {rep.critical + rep.allowance:.4f})"]
        return RunResult(kind, rep.passed, {"report": (UNIQUENESS_COLUMNS, [row])},
                         {"same_dt": rep.passed_same, "refined_dt": rep.passed_refined}, lines)

    if kind == "mp-check":
        scheme = cfg.scheme_params()
        phi = sample(spec, cfg.descriptor("phi"))
        v0 = sample(spec, cfg.descriptor("v0")) if "v0" in cfg.data else phi
        inits = {
            "X": SbmState(sample(spec, cfg.descriptor("u1")), sample(spec, cfg.descriptor("u2")), 0.0, cfg.effective_rho),
            "V": PamState(v0),
        }
        rows, verdicts, lines = [], {}, []
        for proc, init in inits.items():
            r = mp_martingale_check(init, phi, scheme, cfg.T, cfg.checkpoints, cfg.replicas, cfg.seed,
                                    cfg.z_max, batch_size=cfg.batch_size, workers=workers)
            per = {"mean_z": r.mean_z, "bracket_z": r.bracket_z, "m2_mean": r.m2_mean, "bracket_mean": r.bracket_mean}
            for name in r.mass_z:
                per[f"{name}_mean"] = r.mass_mean[name]
                per[f"{name}_stderr"] = r.mass_stderr[name]
                per[f"{name}_z"] = r.mass_z[name]
            for stat, vals in per.items():
                for i, (t, v) in enumerate(zip(r.times, vals)):
                    rows.append([kind, i, t, proc, stat, v])
            verdicts[f"{proc}_mean_flat"] = bool(np.all(r.mean_z <= cfg.z_max))
            verdicts[f"{proc}_bracket"] = bool(np.all(r.bracket_z <= cfg.z_max))
            for name, z in r.mass_z.items():
                verdicts[f"{proc}_{name}_martingale"] = bool(np.all(z <= cfg.z_max))
            lines.append(f"{proc}: max mean z {np.max(r.mean_z):.2f}, max bracket z {np.max(r.bracket_z):.2f}, "
                         f"max mass z {max(np.max(z) for z in r.mass_z.values()):.2f}, clips {r.clip_events}")
        passed = all(verdicts.values())
        for name, ok in verdicts.items():
            rows.append([kind, "", "", "verdict", name, int(ok)])
        rows.append([kind, "", "", "verdict", "all", int(passed)])
        return RunResult(kind, passed, {"checkpoints": (TIDY_COLUMNS, rows)}, verdicts, lines, plottable="checkpoints")

    if kind == "heat-suite":
        lam = cfg.lam if cfg.dt is None else cfg.dt / spec.dx**2
        rep = heat_longtime_suite(cfg.descriptor("f"), spec, cfg.T, lam=lam,
                                  n_checkpoints=max(len(cfg.checkpoints) - 1, 1))
    elif kind == "pam-decay":
        ens = _ensemble(cfg, workers)
        rep = pam_decay_experiment(cfg.descriptor("v0"), cfg.descriptor("g"), ens, _thresholds(cfg, "pam"))
    elif kind == "global-extinction":
        ens = _ensemble(cfg, workers)
        rep = global_extinction_experiment(cfg.descriptor("phi"), cfg.descriptor("psi"), ens, _thresholds(cfg, "global"))
    elif kind == "local-extinction":
        ens = _ensemble(cfg, workers)
        rep = local_extinction_experiment(cfg.descriptor("phi"), cfg.descriptor("psi"), cfg.descriptor("g"), ens,
                                          _thresholds(cfg, "local"))
    else:  # pragma: no cover - parse_config rejects unknown kinds
        raise ValueError(f"unknown experiment kind {kind!r}")

    fields = []
    if cfg.dump_fields and kind != "heat-suite":
        if kind == "pam-decay":
            init = PamState(sample(spec, cfg.descriptor("v0")))
        else:
            a, b = sample(spec, cfg.descriptor("phi")), sample(spec, cfg.descriptor("psi"))
            if rep.params.get("swapped"):
                a, b = b, a
            init = SbmState(a, b)
        fields = _dump(cfg, init)
    return RunResult(kind, rep.passed, {"checkpoints": _tidy(cfg, rep)}, dict(rep.verdicts), _lines(rep),
                     fields, plottable="checkpoints")
