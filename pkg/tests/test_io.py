import numpy as np
import pytest

from snls.dynamics import EquationSpec, solve
from snls.grid import make_grid
from snls.io import (
    FormatError,
    read_trajectory_bin,
    read_trajectory_csv,
    write_norms_csv,
    write_trajectory_bin,
    write_trajectory_csv,
)
from snls.profiles import gaussian


@pytest.fixture
def traj():
    g = make_grid(8, 32)
    return solve(gaussian(g, 1.0, velocity=1.0), EquationSpec(), (0, 0.1), 0.01, stride=3)


def test_binary_round_trip(tmp_path, traj):
    p = write_trajectory_bin(traj, tmp_path / "t.bin")
    back = read_trajectory_bin(p)
    assert back.grid == traj.grid
    assert np.array_equal(back.times, traj.times)
    assert np.array_equal(back.states, traj.states)
    assert np.array_equal(back.running, traj.running)


def test_binary_header(tmp_path, traj):
    raw = write_trajectory_bin(traj, tmp_path / "t.bin").read_bytes()
    assert raw[:4] == b"SNLS"
    assert int.from_bytes(raw[4:8], "little") == 1
    assert int.from_bytes(raw[8:16], "little") == 32
    assert int.from_bytes(raw[16:24], "little") == len(traj)


@pytest.mark.parametrize("mutate", [lambda b: b"XXXX" + b[4:], lambda b: b[:-8],
                                    lambda b: b[:4] + (9).to_bytes(4, "little") + b[8:]])
def test_binary_rejects_corruption(tmp_path, traj, mutate):
    p = write_trajectory_bin(traj, tmp_path / "t.bin")
    p.write_bytes(mutate(p.read_bytes()))
    with pytest.raises(FormatError):
        read_trajectory_bin(p)


def test_csv_round_trip(tmp_path, traj):
    p = write_trajectory_csv(traj, tmp_path / "t.csv")
    assert p.read_text().splitlines()[0] == "t,x,re,im"
    back = read_trajectory_csv(p, traj.grid.L)
    assert np.array_equal(back.times, traj.times)
    assert np.array_equal(back.states, traj.states)


def test_csv_deterministic(tmp_path, traj):
    a = write_trajectory_csv(traj, tmp_path / "a.csv").read_bytes()
    b = write_trajectory_csv(traj, tmp_path / "b.csv").read_bytes()
    assert a == b


def test_norms_csv(tmp_path, traj):
    lines = write_norms_csv(traj, tmp_path / "n.csv").read_text().splitlines()
    assert lines[0] == "t,mass,l10,x2"
    assert len(lines) == len(traj) + 1
    assert float(lines[1].split(",")[1]) == pytest.approx(1.0, rel=1e-12)
