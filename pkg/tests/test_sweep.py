import math

import numpy as np
import pytest

from ris_ambient.ambient import diffraction_path_gain, pole_path_gain
from ris_ambient.scenario import corner_paths, pole_paths
from ris_ambient.sweep import CSV_COLUMNS, default_distances, evaluate_row, read_csv, run_sweep, to_csv


@pytest.fixture(scope="module")
def sweep(baseline):
    return run_sweep(baseline)


def test_default_distances():
    d = default_distances()
    assert len(d) == 40 and d[0] == pytest.approx(20.0) and d[-1] == pytest.approx(200.0)
    assert np.allclose(np.diff(np.log(d)), np.log(10) / 39)


def test_ambient_is_sum_of_mechanisms(baseline, sweep):
    for row in sweep.rows[::7]:
        d = row.rx_distance_m
        expected = math.fsum(
            [diffraction_path_gain(p, baseline).linear for p in corner_paths(baseline, d)]
            + [pole_path_gain(p, baseline).linear for p in pole_paths(baseline, d)]
        )
        assert row.ambient_total.linear == pytest.approx(expected, rel=1e-12)
        assert row.ambient_total.linear == pytest.approx(
            row.diffraction_total.linear + row.pole_total.linear, rel=1e-12
        )


def test_mechanisms_fall_with_distance(sweep):
    series = {
        "ambient": [r.ambient_total.linear for r in sweep.rows],
        "ris_ideal": [r.ris_ideal.gain.linear for r in sweep.rows],
        "ris_spread": [r.ris_spread.gain.linear for r in sweep.rows],
    }
    for name in ("NE", "NW", "SW", "SE"):
        series[f"corner_{name}"] = [r.corners[name].gain.linear for r in sweep.rows]
        series[f"pole_{name}"] = [r.poles[name].gain.linear for r in sweep.rows]
    for name, values in series.items():
        assert np.all(np.diff(values) <= 0), name


def test_rows_sorted_and_independent(baseline):
    shuffled = run_sweep(baseline, [150.0, 30.0, 75.0])
    assert [r.rx_distance_m for r in shuffled.rows] == [30.0, 75.0, 150.0]
    alone = evaluate_row(baseline, 75.0)
    assert shuffled.rows[1].ambient_total == alone.ambient_total
    assert shuffled.nearest(80.0).rx_distance_m == 75.0


def test_bad_distance_lists(baseline):
    with pytest.raises(ValueError, match="empty"):
        run_sweep(baseline, [])
    with pytest.raises(ValueError, match="beyond the intersection"):
        run_sweep(baseline, [5.0, 50.0])
    with pytest.raises(ValueError):
        run_sweep(baseline, [math.nan])


def test_absent_mechanisms_are_reported(make_scenario):
    wide = make_scenario(street_half_width_m=15.0)
    row = evaluate_row(wide, 20.0)
    assert not row.poles["NW"].present
    assert row.poles["NW"].reason == "pole_forward_scatter"
    present = [m.gain.linear for m in (*row.corners.values(), *row.poles.values()) if m.present]
    assert len(present) == 7
    assert row.ambient_total.linear == pytest.approx(math.fsum(present), rel=1e-15)

    low = make_scenario(frequency_hz=7e9)
    row = evaluate_row(low, 50.0)
    assert {m.reason for m in row.poles.values()} == {"pole_below_hf_limit"}
    assert row.pole_total.linear == 0.0 and row.ambient_total.linear > 0


def test_advantage_columns(sweep):
    r = sweep.rows[10]
    assert r.ris_advantage_db == pytest.approx(r.ris_spread.gain.db - r.ambient_total.db, abs=1e-12)
    assert r.ris_ideal_advantage_db == pytest.approx(r.ris_ideal.gain.db - r.ambient_total.db, abs=1e-12)
    assert r.ris_ideal_advantage_db > r.ris_advantage_db


def test_single_row_csv(baseline):
    data = to_csv(run_sweep(baseline, [50.0]))
    text = data.decode()
    meta_lines = [l for l in text.splitlines() if l.startswith("#")]
    body = [l for l in text.splitlines() if not l.startswith("#")]
    assert len(body) == 2
    assert tuple(body[0].split(",")) == CSV_COLUMNS
    assert any("distance_definition" in l for l in meta_lines)
    assert any('"frequency_hz": 28000000000.0' in l for l in meta_lines)


def test_csv_round_trip_and_db_consistency(sweep):
    meta, rows = read_csv(to_csv(sweep))
    assert meta["scenario"]["frequency_hz"] == 28e9
    assert meta["version"] == sweep.metadata["version"]
    assert len(rows) == len(sweep.rows) == 40
    for orig, rec in zip(sweep.rows, rows):
        assert rec["rx_distance_m"] == orig.rx_distance_m
        assert rec["ambient_total_linear"] == pytest.approx(orig.ambient_total.linear, rel=1e-12)
        assert rec["ris_spread_linear"] == orig.ris_spread.gain.linear
        for col in CSV_COLUMNS:
            if col.endswith("_linear") and rec[col] is not None:
                assert rec[col.replace("_linear", "_db")] == pytest.approx(10 * math.log10(rec[col]), abs=1e-9)
        assert rec["pole_NE_reason"] == ""


def test_csv_empty_cells_for_absent(make_scenario):
    _, rows = read_csv(to_csv(run_sweep(make_scenario(street_half_width_m=15.0), [20.0])))
    assert rows[0]["pole_NW_linear"] is None and rows[0]["pole_NW_db"] is None
    assert rows[0]["pole_NW_reason"] == "pole_forward_scatter"


def test_csv_is_deterministic(baseline):
    assert to_csv(run_sweep(baseline)) == to_csv(run_sweep(baseline))
