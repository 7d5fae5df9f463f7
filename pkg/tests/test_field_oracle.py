import dataclasses
import math

import numpy as np
import pytest
from scipy import stats

from ris_ambient.field_oracle import (
    CSV_COLUMNS,
    JITTER_MAX,
    MIN_TRIALS,
    ApertureGrid,
    FactorizationError,
    FieldGrid,
    FieldRole,
    McEstimate,
    aperture_integral,
    check_sampling,
    cholesky_with_jitter,
    correlation_matrix_1d,
    make_grid,
    mc_mean_power,
    oracle_report,
    reports_to_csv,
    sample_field_pair,
    worker_count,
)
from ris_ambient.ris import coherence_scales
from ris_ambient.scenario import SPEED_OF_LIGHT, AngleSpreadSpec, SegmentMode

LAM = SPEED_OF_LIGHT / 28e9
K = 2 * math.pi / LAM
AZ, EL = math.radians(14.0), math.radians(0.6)
BASE = AngleSpreadSpec(AZ, EL)
W_COH = coherence_scales(LAM, BASE).w_coh_m


def test_correlation_matrix_examples():
    y = np.array([0.0, 1e-3, 5e-3])
    assert np.all(correlation_matrix_1d(y, 0.0, K) == 1.0)
    lag = math.sqrt(2) / (K * AZ)
    c = correlation_matrix_1d([0.0, lag], AZ, K)
    assert c[0, 1] == pytest.approx(math.exp(-1), rel=1e-12)
    # exp(-x^2/2) = 0.01 at x = sqrt(2 ln 100) = 3.0348542587702927
    assert correlation_matrix_1d([0.0, 3.04 / (K * AZ)], AZ, K)[0, 1] < 0.01
    assert correlation_matrix_1d([0.0, 3.03 / (K * AZ)], AZ, K)[0, 1] > 0.01
    big = correlation_matrix_1d(np.linspace(0, 0.1, 64), AZ, K)
    assert np.array_equal(big, big.T)
    assert np.linalg.eigvalsh(big).min() > -1e-12


def test_cholesky_jitter_policy():
    L, jitter = cholesky_with_jitter(np.ones((5, 5)))
    assert jitter == 0.0
    assert np.allclose(L @ L.T, 1.0)
    L, jitter = cholesky_with_jitter(correlation_matrix_1d(np.linspace(0, 0.01, 8), AZ, K))
    assert jitter == pytest.approx(1e-10)
    assert np.allclose(L @ L.T, correlation_matrix_1d(np.linspace(0, 0.01, 8), AZ, K), atol=1e-9)
    # slightly indefinite: needs more than the starting jitter
    _, jitter = cholesky_with_jitter(np.array([[1.0, 1 + 1e-8], [1 + 1e-8, 1.0]]))
    assert 1e-10 < jitter <= JITTER_MAX
    with pytest.raises(FactorizationError) as err:
        cholesky_with_jitter(np.array([[1.0, 1.001], [1.001, 1.0]]))
    assert err.value.jitter == pytest.approx(JITTER_MAX)


def test_grid_construction_and_sampling_check():
    g = make_grid(0.3, 0.3, LAM, BASE)
    scales = coherence_scales(LAM, BASE)
    assert g.dy_m <= scales.w_coh_m / 4 and g.dz_m <= scales.h_coh_m / 4
    assert g.nz >= 16
    assert make_grid(0.3, 0.3, LAM, AngleSpreadSpec(0.0, 0.0)).ny == 1
    assert g.y_m[0] == pytest.approx(-0.15 + g.dy_m / 2) and g.y_m[-1] == pytest.approx(0.15 - g.dy_m / 2)
    with pytest.raises(ValueError, match="too coarse along y"):
        check_sampling(ApertureGrid(0.3, 0.3, 20, 16), LAM, BASE)
    with pytest.raises(ValueError):
        ApertureGrid(0.0, 1.0, 4, 4)


def _lag_grid():
    # 16 samples over 4 w_coh: sample i and i + 4 are one coherence width apart
    return ApertureGrid(4 * W_COH, 0.01, 16, 1), AngleSpreadSpec(AZ, 0.0)


@pytest.fixture(scope="module")
def field_samples():
    grid, sp = _lag_grid()
    inc, scat = [], []
    for seed in range(10_000):
        a, b = sample_field_pair(grid, sp, K, seed)
        inc.append(a.values[0])
        scat.append(b.values[0])
    return np.array(inc), np.array(scat)


def test_field_statistics(field_samples):
    inc, scat = field_samples
    for f in (inc, scat):
        assert np.mean(np.abs(f[:, 5]) ** 2) == pytest.approx(1.0, abs=0.05)
        lag = np.mean(f[:, 5] * np.conj(f[:, 9]))
        assert lag.real == pytest.approx(math.exp(-math.pi / 2), abs=0.03)
        assert abs(lag.imag) < 0.03
        assert abs(np.mean(f[:, 5] ** 2)) < 0.03  # circular
    # incident and scattered are independent
    assert abs(np.mean(inc[:, 5] * np.conj(scat[:, 5]))) < 0.03


def test_field_is_unit_complex_gaussian(field_samples):
    inc, _ = field_samples
    power = np.abs(inc[:, 7]) ** 2  # Exp(1) for CN(0, 1)
    edges = stats.expon.ppf(np.linspace(0, 1, 21))
    observed, _ = np.histogram(power, bins=edges)
    assert stats.chisquare(observed).pvalue > 0.01


def test_field_modes():
    grid = make_grid(0.05, 0.3, LAM, BASE)
    inc, scat = sample_field_pair(grid, AngleSpreadSpec(0.0, 0.0), K, 1)
    assert np.all(inc.values == 1) and np.all(scat.values == 1)
    one = AngleSpreadSpec(AZ, EL, SegmentMode.RIS_TO_RX_ONLY)
    inc, scat = sample_field_pair(grid, one, K, 1)
    assert np.all(inc.values == 1) and not np.all(scat.values == 1)
    assert inc.role is FieldRole.INCIDENT and scat.role is FieldRole.SCATTERED
    a, _ = sample_field_pair(grid, BASE, K, 99)
    b, _ = sample_field_pair(grid, BASE, K, 99)
    assert np.array_equal(a.values, b.values)


def test_aperture_integral_examples():
    grid = ApertureGrid(0.3, 0.2, 12, 8)
    ones = FieldGrid(np.ones((8, 12), complex), grid, FieldRole.INCIDENT)
    assert aperture_integral(ones, ones) == pytest.approx(0.06, rel=1e-14)
    rng = np.random.default_rng(3)
    vals = rng.standard_normal((8, 12)) + 1j * rng.standard_normal((8, 12))
    xi = FieldGrid(vals, grid, FieldRole.INCIDENT)
    assert aperture_integral(xi, ones) == pytest.approx(grid.dy_m * grid.dz_m * vals.sum(), rel=1e-14)
    conj = aperture_integral(xi, FieldGrid(np.conj(vals), grid, FieldRole.SCATTERED))
    assert conj.imag == pytest.approx(0.0, abs=1e-15) and conj.real > 0
    other = FieldGrid(np.ones((8, 11), complex), ApertureGrid(0.3, 0.2, 11, 8), FieldRole.SCATTERED)
    with pytest.raises(ValueError, match="grid mismatch"):
        aperture_integral(ones, other)


def test_mc_matches_per_trial_sampling():
    grid = make_grid(0.03, 0.03, LAM, BASE)
    est = mc_mean_power(grid, BASE, K, 130, 7, workers=1)
    manual = []
    for t in range(130):
        inc, scat = sample_field_pair(grid, BASE, K, np.random.SeedSequence(7, spawn_key=(t,)))
        manual.append(abs(aperture_integral(inc, scat)) ** 2)
    assert est.mean_power == pytest.approx(np.mean(manual), rel=1e-10)


def test_mc_bit_identical_across_workers():
    grid = make_grid(0.1, 0.1, LAM, BASE)
    runs = [mc_mean_power(grid, BASE, K, 300, 2024, workers=w) for w in (1, 2, 5)]
    assert len({(r.mean_power, r.std_error) for r in runs}) == 1
    assert worker_count(3) == 3 and worker_count(0) >= 1


def test_worker_env(monkeypatch):
    monkeypatch.setenv("RIS_AMBIENT_THREADS", "2")
    assert worker_count() == 2


def test_mc_deterministic_cases():
    grid = make_grid(0.3, 0.2, LAM, AngleSpreadSpec(0.0, 0.0))
    est = mc_mean_power(grid, AngleSpreadSpec(0.0, 0.0), K, MIN_TRIALS, 0)
    assert est.mean_power == pytest.approx(0.06**2, rel=1e-12)
    assert est.std_error == 0.0
    rep = oracle_report(est)
    assert rep.verdict == "degenerate-pass" and rep.passed
    with pytest.raises(ValueError):
        mc_mean_power(grid, AngleSpreadSpec(0.0, 0.0), K, MIN_TRIALS - 1, 0)
    with pytest.raises(ValueError):
        mc_mean_power(grid, AngleSpreadSpec(0.0, 0.0), K, MIN_TRIALS, 2**64)


def test_standard_error_shrinks_as_root_n():
    grid = make_grid(0.1, 0.1, LAM, BASE)
    small = mc_mean_power(grid, BASE, K, 500, 11)
    large = mc_mean_power(grid, BASE, K, 5000, 11)
    assert small.std_error / large.std_error == pytest.approx(math.sqrt(10), rel=0.2)


def _estimate(mean, se, exact=1.0):
    grid = ApertureGrid(0.3, 0.3, 4, 4)
    return McEstimate(mean, se, 1000, exact, 5, 1.2, grid, BASE, 1e-10, LAM)


def test_oracle_report_thresholds():
    assert oracle_report(_estimate(1.004, 0.01)).verdict == "pass"
    assert oracle_report(_estimate(1.004, 0.01)).z_score == pytest.approx(0.4)
    bad = oracle_report(_estimate(1.05, 0.01))
    assert bad.verdict == "fail" and not bad.passed and bad.z_score == pytest.approx(5.0)
    assert oracle_report(_estimate(1.05, 0.01), threshold=6).passed
    assert oracle_report(_estimate(2.0, 0.0)).verdict == "fail"
    text = oracle_report(_estimate(1.004, 0.01)).to_text()
    for key in ("mc_mean_m4", "std_err_m4", "analytic_exact_m4", "analytic_min_approx_m4", "z_score", "verdict"):
        assert f"{key} = " in text


def test_reports_csv_columns():
    reps = [oracle_report(_estimate(1.004, 0.01)), oracle_report(_estimate(1.05, 0.01))]
    lines = reports_to_csv(reps).splitlines()
    assert tuple(lines[0].split(",")) == CSV_COLUMNS
    assert CSV_COLUMNS == (
        "aperture_w", "aperture_h", "trials", "mc_mean", "std_err",
        "analytic_exact", "analytic_min_approx", "z_score", "verdict",
    )
    assert lines[1].endswith(",pass") and lines[2].endswith(",fail")
    assert float(lines[1].split(",")[3]) == 1.004


def test_report_carries_estimate():
    est = mc_mean_power(make_grid(0.03, 0.03, LAM, BASE), BASE, K, 2000, 1)
    rep = oracle_report(est)
    assert rep.mc_mean == est.mean_power and rep.analytic_exact == est.analytic_prediction
    assert rep.analytic_min_approx > 0 and rep.trials == 2000
    shifted = oracle_report(dataclasses.replace(est, analytic_prediction=est.analytic_prediction * 2.0))
    assert not shifted.passed
