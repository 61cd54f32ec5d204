from pathlib import Path

import pytest

from sbmlab.config import KINDS, ConfigError, apply_fault, parse_config

MINIMAL = """
[experiment]
kind = duality
[grid]
L = 5
N = 64
[data]
u1 = gaussian(mass=1.5) + const(0.2)
u2 = gaussian(mass=1)
phi = gaussian(mass=1)
[run]
T = 0.25
"""


def test_minimal_defaults():
    cfg = parse_config(MINIMAL)
    assert cfg.lam == 0.5 and cfg.z_max == 4.0
    assert cfg.scheme == "split" and cfg.rho == 1.0 and cfg.clip
    assert cfg.replicas == 10000
    # dt is shrunk so that checkpoints land on the step grid
    lam = cfg.scheme_params().dt / cfg.spec.dx**2
    assert 0.25 <= lam <= 0.5


def test_lambda_above_bound_names_rule():
    with pytest.raises(ConfigError) as exc:
        parse_config(MINIMAL.replace("[data]", "[scheme]\nlambda = 1.5\n[data]"))
    assert "stability bound" in str(exc.value)


def test_horizon_rule():
    with pytest.raises(ConfigError) as exc:
        parse_config(MINIMAL.replace("T = 0.25", "T = 100"))
    assert "torus-horizon rule" in str(exc.value)
    cfg = parse_config(MINIMAL.replace("T = 0.25", "T = 100\nallow_wraparound = true"))
    assert cfg.allow_wraparound


def test_unknown_key_reports_line():
    text = MINIMAL.replace("N = 64", "N = 64\nwidth = 3")
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    line = text.splitlines().index("width = 3") + 1
    assert (line, "unknown key 'width' in [grid]") in exc.value.errors


def test_all_errors_collected():
    text = MINIMAL.replace("N = 64", "N = 63").replace("u2 = gaussian(mass=1)", "u2 = nope(1)")
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    assert len(exc.value.errors) >= 2


def test_rho_fixed_for_sbm():
    with pytest.raises(ConfigError, match="rho = 1"):
        parse_config(MINIMAL.replace("[run]", "[model]\nrho = 0.5\n[run]"))


def test_checkpoints_every():
    cfg = parse_config(MINIMAL.replace("T = 0.25", "T = 0.25\ncheckpoints = every 0.05"))
    assert cfg.checkpoints == pytest.approx((0, 0.05, 0.1, 0.15, 0.2, 0.25))


def test_eight_kinds_and_shipped_configs_parse():
    assert len(KINDS) == 8
    configs = sorted(Path(__file__).parent.parent.joinpath("configs").glob("*.ini"))
    kinds = {parse_config(p.read_text()).kind for p in configs}
    assert kinds == set(KINDS)


def test_hash_depends_on_content():
    a = parse_config(MINIMAL)
    assert a.hash() == parse_config(MINIMAL).hash()
    assert a.hash() != a.with_overrides(seed=9).hash()


def test_faults():
    assert apply_fault("noise-scale=2") == {"noise-scale": 2.0}
    with pytest.raises(ValueError):
        apply_fault("bogus=1")


def test_zero_horizon_is_valid():
    cfg = parse_config(MINIMAL.replace("T = 0.25", "T = 0"))
    assert cfg.checkpoints == (0.0,)
    assert cfg.scheme_params().dt > 0
