import json

import pytest

from sbmlab.cli import describe, list_experiments, main
from sbmlab.config import KINDS

SMALL_MP = """
[experiment]
kind = mp-check
[grid]
L = 5
N = 64
[data]
u1 = gaussian(mass=1.5) + const(0.2)
u2 = gaussian(mass=1)
phi = gaussian(mass=1)
[run]
T = 0.1
checkpoints = 0, 0.05, 0.1
replicas = 1000
seed = 1
"""

SMALL_DUALITY = """
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
T = 0.1
replicas = 300
seed = 3
"""


@pytest.fixture
def cfgfile(tmp_path):
    def make(text, name="c.ini"):
        p = tmp_path / name
        p.write_text(text)
        return str(p)
    return make


def test_run_pass_writes_outputs(cfgfile, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["run", "--config", cfgfile(SMALL_DUALITY), "--out", str(out)]) == 0
    man = json.loads((out / "manifest.json").read_text())
    assert man["passed"] and man["config_hash"] and "Philox" in man["generator"]
    assert (out / "report.csv").exists()
    assert "PASS" in capsys.readouterr().out


def test_noise_fault_fails_with_exit_1(cfgfile, tmp_path):
    out = tmp_path / "out"
    code = main(["run", "--config", cfgfile(SMALL_MP), "--out", str(out), "--fault", "noise-scale=2"])
    assert code == 1
    assert json.loads((out / "manifest.json").read_text())["config"]["faults"] == {"noise-scale": 2.0}


def test_rerun_is_byte_identical(cfgfile, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    c = cfgfile(SMALL_MP)
    main(["run", "--config", c, "--out", str(a)])
    main(["run", "--config", c, "--out", str(b), "--workers", "2", "--deterministic"])
    csvs = sorted(p.name for p in a.glob("*.csv"))
    assert csvs
    for name in csvs:
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_usage_errors_exit_2(cfgfile, tmp_path, capsys):
    bad = cfgfile(SMALL_DUALITY.replace("[data]", "[scheme]\nlambda = 1.5\n[data]"), "bad.ini")
    assert main(["run", "--config", bad, "--out", str(tmp_path / "o")]) == 2
    assert "stability bound" in capsys.readouterr().err
    assert main(["run", "--config", str(tmp_path / "missing.ini"), "--out", str(tmp_path / "o")]) == 2
    with pytest.raises(SystemExit) as exc:
        main(["run", "--config"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2
    assert main(["run", "--config", cfgfile(SMALL_DUALITY), "--out", str(tmp_path), "--fault", "bogus=3"]) == 2


def test_unwritable_out_dir_exit_2(cfgfile, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["run", "--config", cfgfile(SMALL_DUALITY), "--out", str(blocker / "sub")]) == 2


def test_list_and_describe(capsys):
    assert main(["list"]) == 0
    listed = capsys.readouterr().out
    assert all(k in listed for k in KINDS) and list_experiments().count("\n") == 7
    assert "Theorem 2.9" in describe("global-extinction")
    assert main(["describe", "nope"]) == 2


def test_plot_from_csv(cfgfile, tmp_path):
    out = tmp_path / "out"
    main(["run", "--config", cfgfile(SMALL_MP), "--out", str(out), "--plot"])
    svgs = list(out.glob("*.svg"))
    assert svgs
    assert main(["plot", "--csv", str(out / "checkpoints.csv"), "--out", str(tmp_path / "p")]) == 0
