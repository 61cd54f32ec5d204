"""Experiment configuration: INI text in, validated :class:`ExperimentConfig` out.

The grammar is documented in ``docs/config.md``. Every problem found is
reported with the line it came from; one bad file yields all its errors at
once rather than the first one.
"""

from __future__ import annotations

import configparser
import hashlib
import json
import math
import re
from dataclasses import asdict, dataclass, field, replace
from typing import Optional

from .descriptors import Descriptor, DescriptorError, parse_descriptor
from .grid import LAMBDA_MAX, GridSpec
from .spde import SCHEMES, SchemeParams

__all__ = ["ExperimentConfig", "ConfigError", "parse_config", "KINDS", "FAULT_KINDS", "apply_fault"]

#: experiment kind -> one-line description with the result it exercises
KINDS = {
    "duality": "SBM/PAM duality (Theorem 2.3): E exp(-<X_T,phi>) against the PAM expectation",
    "self-duality": "PAM self-duality (Corollary and extended Lemma): swap initial datum and test function",
    "mp-check": "martingale problems (MP)_X and (MP)_V: mean flatness, bracket, mass martingales (Lemma 2.5)",
    "heat-suite": "heat equation long-time propositions: mass, L1 to M p_t, negative part, sup bound, mean",
    "pam-decay": "PAM mass decay: <V_t,g> -> 0 in probability, E sqrt<V_t,1> decreasing",
    "global-extinction": "global coexistence is impossible (Theorem 2.9): <U2_t,1> -> 0, <U1_t,1> -> <phi-psi,1>",
    "local-extinction": "local coexistence is impossible (Theorem 2.10): <U1_t,g> -> (mean phi - mean psi)<g,1>",
    "uniqueness-proxy": "uniqueness in law (Theorem 2.4) proxy: KS tests of <X_T,phi> across seeds and dt",
}

#: data keys each kind needs, then the optional ones
_DATA = {
    "duality": (("u1", "u2", "phi"), ()),
    "self-duality": (("phi", "psi"), ()),
    "mp-check": (("u1", "u2", "phi"), ("v0",)),
    "heat-suite": (("f",), ()),
    "pam-decay": (("v0", "g"), ()),
    "global-extinction": (("phi", "psi"), ()),
    "local-extinction": (("phi", "psi", "g"), ()),
    "uniqueness-proxy": (("u1", "u2", "phi"), ()),
}

_DEFAULT_REPLICAS = {
    "duality": 10000, "self-duality": 10000, "mp-check": 10000, "heat-suite": 1,
    "pam-decay": 2000, "global-extinction": 2000, "local-extinction": 2000, "uniqueness-proxy": 5000,
}

_MODELS = ("sbm", "pam", "heat")
_DEFAULT_MODEL = {
    "duality": "sbm", "self-duality": "pam", "mp-check": "sbm", "heat-suite": "heat",
    "pam-decay": "pam", "global-extinction": "sbm", "local-extinction": "sbm", "uniqueness-proxy": "sbm",
}

_THRESHOLDS = {
    "z_max": 4.0,
    "eps_rel": 0.1,
    "final_fraction": None,
    "sqrt_decay_factor": None,
    "median_u2_rel": None,
    "u1_rel_tol": None,
    "allowance": None,
}

_KEYS = {
    "experiment": {"kind"},
    "grid": {"L", "N"},
    "scheme": {"lambda", "dt", "clip", "scheme"},
    "model": {"type", "rho"},
    "data": {"u1", "u2", "v0", "phi", "psi", "g", "f"},
    "run": {"T", "checkpoints", "replicas", "seed", "batch_size", "allow_wraparound", "dump_fields"},
    "thresholds": set(_THRESHOLDS),
}

FAULT_KINDS = ("noise-scale", "drift-scale", "wrong-rho")


class ConfigError(ValueError):
    """All problems found in one config. ``errors`` is a list of ``(line, message)``."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("\n".join(f"line {ln}: {msg}" if ln else msg for ln, msg in self.errors))


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    L: float
    N: int
    T: float
    lam: Optional[float] = 0.5
    dt: Optional[float] = None
    clip: bool = True
    scheme: str = "split"
    model: str = "sbm"
    rho: float = 1.0
    data: dict = field(default_factory=dict)
    checkpoints: tuple = ()
    replicas: int = 10000
    seed: int = 0
    batch_size: int = 500
    allow_wraparound: bool = False
    dump_fields: bool = False
    thresholds: dict = field(default_factory=dict)
    faults: dict = field(default_factory=dict)

    @property
    def spec(self) -> GridSpec:
        return GridSpec(self.L, self.N)

    @property
    def z_max(self) -> float:
        return self.thresholds.get("z_max", 4.0)

    def descriptor(self, name: str) -> Descriptor:
        return parse_descriptor(self.data[name])

    def scheme_params(self) -> SchemeParams:
        kw = dict(
            clip_negative=self.clip,
            scheme=self.scheme,
            noise_scale=self.faults.get("noise-scale", 1.0),
            drift_scale=self.faults.get("drift-scale", 1.0),
        )
        if self.dt is not None:
            return SchemeParams(self.dt, self.spec.dx, **kw)
        return SchemeParams.for_grid(self.spec, self.lam, T=self.T, checkpoints=self.checkpoints, **kw)

    @property
    def effective_rho(self) -> float:
        return self.faults.get("wrong-rho", self.rho)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["checkpoints"] = list(self.checkpoints)
        return d

    def hash(self) -> str:
        """Short digest of everything that influences results."""
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def with_overrides(self, seed=None, replicas=None, faults=None) -> "ExperimentConfig":
        cfg = self
        if seed is not None:
            cfg = replace(cfg, seed=int(seed))
        if replicas is not None:
            cfg = replace(cfg, replicas=int(replicas))
        if faults:
            cfg = replace(cfg, faults={**cfg.faults, **faults})
        return cfg


def apply_fault(text: str) -> dict:
    """Parse ``KIND=FACTOR`` from the command line."""
    kind, sep, value = text.partition("=")
    kind = kind.strip()
    if not sep or kind not in FAULT_KINDS:
        raise ValueError(f"fault must be one of {', '.join(FAULT_KINDS)} as KIND=VALUE, got {text!r}")
    return {kind: float(value)}


def _line_index(text: str) -> dict:
    """Map ``(section, key)`` and ``(section, None)`` to 1-based line numbers."""
    where, section = {}, None
    for i, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        m = re.match(r"\[([^\]]+)\]", line)
        if m:
            section = m.group(1).strip()
            where.setdefault((section, None), i)
            continue
        key = re.split(r"[=:]", line, maxsplit=1)[0].strip()
        if section is not None and key:
            where.setdefault((section, key), i)
    return where


_BOOL = {"true": True, "yes": True, "on": True, "1": True, "false": False, "no": False, "off": False, "0": False}


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate config text; raises :class:`ConfigError` listing every problem."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.ParsingError as exc:
        raise ConfigError([(ln, f"cannot parse {line!r}") for ln, line in exc.errors]) from None
    except configparser.Error as exc:
        raise ConfigError([(getattr(exc, "lineno", None), str(exc).splitlines()[0])]) from None

    where = _line_index(text)
    errors: list = []

    def err(section, key, msg):
        errors.append((where.get((section, key)) or where.get((section, None)), msg))

    for section in cp.sections():
        if section not in _KEYS:
            err(section, None, f"unknown section [{section}]")
            continue
        for key in cp[section]:
            if key not in _KEYS[section]:
                err(section, key, f"unknown key {key!r} in [{section}]")

    def get(section, key, conv, default=None, required=False):
        if not cp.has_option(section, key):
            if required:
                err(section, None, f"missing required key {key!r} in [{section}]")
            return default
        raw = cp.get(section, key).strip()
        try:
            return conv(raw)
        except (ValueError, KeyError):
            err(section, key, f"bad value for {key}: {raw!r}")
            return default

    def as_bool(raw):
        return _BOOL[raw.lower()]

    def as_int(raw):
        v = float(raw)
        if not v.is_integer():
            raise ValueError(raw)
        return int(v)

    kind = get("experiment", "kind", str, required=True)
    if kind is not None and kind not in KINDS:
        err("experiment", "kind", f"unknown experiment kind {kind!r}; known: {', '.join(KINDS)}")
        kind = None

    L = get("grid", "L", float, required=True)
    N = get("grid", "N", as_int, required=True)
    if N is not None and (N < 4 or N % 2):
        err("grid", "N", f"grid invariant: N must be an even integer >= 4, got {N}")
        N = None
    if L is not None and not (math.isfinite(L) and L > 0):
        err("grid", "L", f"grid invariant: L must be positive, got {L}")
        L = None

    lam = get("scheme", "lambda", float)
    dt = get("scheme", "dt", float)
    if lam is not None and dt is not None:
        err("scheme", "dt", "give either lambda or dt, not both")
    if dt is not None and not dt > 0:
        err("scheme", "dt", f"dt must be positive, got {dt}")
        dt = None
    if lam is not None and not lam > 0:
        err("scheme", "lambda", f"lambda must be positive, got {lam}")
        lam = None
    if lam is None and dt is None:
        lam = 0.5
    eff_lam = lam if dt is None else (dt / (2 * L / N) ** 2 if L and N else None)
    if eff_lam is not None and eff_lam > LAMBDA_MAX + 1e-12:
        key = "lambda" if dt is None else "dt"
        err("scheme", key, f"stability bound violated: lambda = dt/dx^2 = {eff_lam:.6g} > {LAMBDA_MAX}")
    clip = get("scheme", "clip", as_bool, True)
    scheme = get("scheme", "scheme", str, "split")
    if scheme not in SCHEMES:
        err("scheme", "scheme", f"unknown scheme {scheme!r}; known: {', '.join(SCHEMES)}")

    model = get("model", "type", str, _DEFAULT_MODEL.get(kind, "sbm"))
    if model not in _MODELS:
        err("model", "type", f"unknown model {model!r}; known: {', '.join(_MODELS)}")
    elif kind is not None and model != _DEFAULT_MODEL[kind]:
        err("model", "type", f"experiment {kind} runs model {_DEFAULT_MODEL[kind]}, not {model}")
    rho = get("model", "rho", float, 1.0)
    if rho is not None and not -1.0 <= rho <= 1.0:
        err("model", "rho", f"correlation must lie in [-1, 1], got {rho}")
    elif kind is not None and model == "sbm" and rho != 1.0:
        err("model", "rho", f"experiment {kind} is stated for rho = 1 (use --fault wrong-rho to perturb it)")

    data = {}
    if cp.has_section("data"):
        for key in cp["data"]:
            if key in _KEYS["data"]:
                raw = cp.get("data", key).strip()
                try:
                    parse_descriptor(raw)
                    data[key] = raw
                except DescriptorError as exc:
                    err("data", key, f"bad descriptor for {key}: {exc}")
    if kind is not None:
        required, optional = _DATA[kind]
        for key in required:
            if key not in data and not any(ln for ln, m in errors if f"for {key}:" in m):
                err("data", None, f"experiment {kind} needs data key {key!r}")
        for key in set(data) - set(required) - set(optional):
            err("data", key, f"data key {key!r} is not used by experiment {kind}")

    T = get("run", "T", float, required=True)
    allow = get("run", "allow_wraparound", as_bool, False)
    if T is not None:
        if not T >= 0:
            err("run", "T", f"horizon must be nonnegative, got {T}")
        elif L is not None and not allow and math.sqrt(T) > L / 4 * (1 + 1e-12):
            err(
                "run", "T",
                f"torus-horizon rule violated: sqrt(T) = {math.sqrt(T):.4g} > L/4 = {L / 4:.4g}"
                " (set allow_wraparound = true in [run] to override)",
            )
    checkpoints = get("run", "checkpoints", _parse_checkpoints, None)
    if T is None or not T >= 0:
        checkpoints = ()
    else:
        if checkpoints is None:
            checkpoints = tuple(T * i / 10 for i in range(11)) if T > 0 else (0.0,)
        elif checkpoints and checkpoints[0] == "every":
            step = checkpoints[1]
            count = int(math.floor(T / step + 1e-9))
            checkpoints = tuple(step * i for i in range(count + 1))
        else:
            if any(c < 0 or c > T * (1 + 1e-12) for c in checkpoints):
                err("run", "checkpoints", "checkpoints must lie in [0, T]")
            if any(b <= a for a, b in zip(checkpoints, checkpoints[1:])):
                err("run", "checkpoints", "checkpoints must be strictly increasing")
            if checkpoints and checkpoints[0] != 0.0:
                checkpoints = (0.0,) + tuple(checkpoints)
    replicas = get("run", "replicas", as_int, _DEFAULT_REPLICAS.get(kind, 1000))
    if replicas is not None and replicas < 2 and kind != "heat-suite":
        err("run", "replicas", f"need at least 2 replicas, got {replicas}")
    seed = get("run", "seed", as_int, 0)
    batch_size = get("run", "batch_size", as_int, 500)
    if batch_size is not None and batch_size < 1:
        err("run", "batch_size", "batch_size must be positive")
    dump = get("run", "dump_fields", as_bool, False)

    thresholds = {}
    for key, default in _THRESHOLDS.items():
        val = get("thresholds", key, float, default)
        if val is not None:
            thresholds[key] = val
    if thresholds.get("z_max", 1.0) <= 0:
        err("thresholds", "z_max", "z_max must be positive")

    if errors:
        raise ConfigError(sorted(errors, key=lambda e: (e[0] or 0)))
    cfg = ExperimentConfig(
        kind=kind, L=L, N=N, T=T, lam=lam, dt=dt, clip=clip, scheme=scheme, model=model, rho=rho,
        data=data, checkpoints=tuple(checkpoints), replicas=replicas, seed=seed, batch_size=batch_size,
        allow_wraparound=allow, dump_fields=dump, thresholds=thresholds,
    )
    if kind != "heat-suite":
        try:
            cfg.scheme_params()
        except ValueError as exc:
            raise ConfigError([(where.get(("scheme", None)), str(exc))]) from None
    return cfg


def _parse_checkpoints(raw: str) -> tuple:
    """``0, 0.1, 0.5`` or ``every 2.0``."""
    m = re.fullmatch(r"every\s+(\S+)", raw)
    if m:
        step = float(m.group(1))
        if not step > 0:
            raise ValueError(raw)
        return ("every", step)
    return tuple(float(v) for v in raw.replace(",", " ").split())
