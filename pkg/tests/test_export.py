import json

import numpy as np
import pytest

from flapwing.compare import compare_series
from flapwing.errors import ExportError
from flapwing.export import (RECORD_COLUMNS, read_record, read_wake_grid, write_cycle_csv, write_record,
                             write_report, write_wake_grid)
from flapwing.simulator import SimConfig, run
from flapwing.wake import PlaneSpec, horseshoe, sample_plane


@pytest.fixture(scope="module")
def record():
    return run(SimConfig(duration=0.01))


def test_record_round_trip(tmp_path, record):
    write_record(record, tmp_path)
    back = read_record(tmp_path)
    for name in ("t", "force", "moment", "gamma", "gait", "constraint_residual", "loop_residual",
                 "zeta_t", "zeta"):
        assert np.array_equal(getattr(back, name), getattr(record, name)), name
    assert np.array_equal(back.lift, record.lift)
    assert back.meta == json.loads(json.dumps(record.meta))


def test_exports_are_byte_stable(tmp_path, record):
    a = [p.read_bytes() for p in write_record(record, tmp_path / "a")]
    b = [p.read_bytes() for p in write_record(run(SimConfig(duration=0.01)), tmp_path / "b")]
    assert a == b
    header = (tmp_path / "a" / "forces.csv").read_text().splitlines()[0]
    assert header == ",".join(RECORD_COLUMNS)


def test_report_holds_compare_values(tmp_path):
    t = np.arange(0, 2, 1e-3)
    x = np.sin(2 * np.pi * 4.5 * t)
    rep = compare_series(t, x, 0.5 * x, t, 1.1 * x, 0.4 * x, 4.5)
    path = write_report(rep, tmp_path / "r.json")
    doc = json.loads(path.read_text())
    assert doc["rms_lift"] == rep.rms_lift and doc["rms_drag"] == rep.rms_drag
    assert doc["offset_s"] == rep.offset_s
    rows = write_cycle_csv(rep, tmp_path / "c.csv").read_text().splitlines()
    assert len(rows) == 101
    assert write_report(rep, tmp_path / "r2.json").read_bytes() == path.read_bytes()


def test_wake_grid_rows(tmp_path):
    plane = PlaneSpec(-0.5, (-1, 1), (-0.5, 0.5), 9, 6)
    grid = sample_plane(horseshoe([0, 0.3, 0], [0, -0.3, 0], 1.0), plane)
    path = write_wake_grid(grid, tmp_path / "w.csv", {"degenerate": False})
    meta, rows = read_wake_grid(path)
    assert rows.shape == (9 * 6, 7)
    assert meta["plane"]["ny"] == 9 and meta["units"]["curl"] == "1/s" and meta["degenerate"] is False
    assert np.array_equal(rows[:, 3:6], grid.vel.reshape(-1, 3))


def test_unwritable_path_names_it(tmp_path, record):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(ExportError) as exc:
        write_record(record, blocker / "sub")
    assert str(blocker) in str(exc.value)
    with pytest.raises(OSError):  # also catchable as an OS error
        write_record(record, blocker / "sub")
