import numpy as np
from numpy.testing import assert_array_equal

from sbmlab.io import read_csv, read_field, write_csv, write_field


def test_field_roundtrip(tmp_path):
    v = np.random.default_rng(0).normal(size=64)
    p = write_field(tmp_path / "f.bin", v, 5.0, 0.125)
    got, L, t = read_field(p)
    assert_array_equal(got, v)
    assert (L, t) == (5.0, 0.125)
    raw = p.read_bytes()
    assert raw[:8] == b"SBMFIELD" and len(raw) == 32 + 8 * 64


def test_csv_carries_hash(tmp_path):
    p = write_csv(tmp_path / "r.csv", ["a", "b"], [(1, 0.1), (2, 1 / 3)], "abc123")
    meta, rows = read_csv(p)
    assert meta["config_hash"] == "abc123"
    assert rows[0]["config_hash"] == "abc123"
    assert float(rows[1]["b"]) == 1 / 3
