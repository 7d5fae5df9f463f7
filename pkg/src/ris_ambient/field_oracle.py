"""Monte Carlo check of the angle-spread RIS power.

Each trial draws the incident and scattered decorrelation fields on a discretized
aperture, forms the aperture integral ``dy dz sum(xi_inc * xi_scat)`` and records its
squared magnitude. The mean over trials estimates ``A_RIS * A_eff``.

The deterministic plane-wave phase ``exp(i k p.(s - o))`` and the RIS phase that
cancels it multiply to exactly one at every aperture point, so they are left out of
the integrand altogether.

Fields with separable Gaussian correlation are drawn as ``L_z G L_y^T`` with ``L`` the
Cholesky factors of the two 1-D correlation matrices and ``G`` iid CN(0, 1), which
avoids factoring the full ``(ny*nz)**2`` covariance.
"""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .ris import coherence_scales, effective_area, effective_area_exact
from .scenario import AngleSpreadSpec, SegmentMode

JITTER_START = 1e-10
JITTER_MAX = 1e-6
# Trials per work unit; fixed so that results do not depend on worker count.
CHUNK_TRIALS = 64
MIN_TRIALS = 100
Z_THRESHOLD = 3.0
THREADS_ENV = "RIS_AMBIENT_THREADS"


class FactorizationError(np.linalg.LinAlgError):
    def __init__(self, message: str, jitter: float):
        super().__init__(message)
        self.jitter = jitter


class FieldRole(str, Enum):
    INCIDENT = "incident"
    SCATTERED = "scattered"


@dataclass(frozen=True)
class ApertureGrid:
    """Cell-centered sampling of a ``width_m x height_m`` aperture."""

    width_m: float
    height_m: float
    ny: int
    nz: int

    def __post_init__(self):
        if self.width_m <= 0 or self.height_m <= 0:
            raise ValueError("aperture dimensions must be positive")
        if self.ny < 1 or self.nz < 1:
            raise ValueError("grid needs at least one sample per axis")

    @property
    def dy_m(self) -> float:
        return self.width_m / self.ny

    @property
    def dz_m(self) -> float:
        return self.height_m / self.nz

    @property
    def y_m(self) -> np.ndarray:
        return (np.arange(self.ny) + 0.5) * self.dy_m - 0.5 * self.width_m

    @property
    def z_m(self) -> np.ndarray:
        return (np.arange(self.nz) + 0.5) * self.dz_m - 0.5 * self.height_m

    @property
    def area_m2(self) -> float:
        return self.width_m * self.height_m


def make_grid(
    width_m: float,
    height_m: float,
    wavelength_m: float,
    spreads: AngleSpreadSpec,
    samples_per_coherence: int = 4,
    min_samples: int = 16,
) -> ApertureGrid:
    """Grid with spacing no coarser than ``1/samples_per_coherence`` of each coherence scale.

    Axes without decorrelation get a single sample. Decorrelated axes get at least
    ``min_samples``: apertures shorter than a coherence scale otherwise end up with two
    or three midpoints, and the Riemann-sum bias (~1.5%) rivals the noise of 10^4 trials.
    """
    scales = coherence_scales(wavelength_m, spreads)

    def count(length, scale):
        if math.isinf(scale):
            return 1
        return max(min_samples, math.ceil(length * samples_per_coherence / scale))

    return ApertureGrid(width_m, height_m, count(width_m, scales.w_coh_m), count(height_m, scales.h_coh_m))


def check_sampling(grid: ApertureGrid, wavelength_m: float, spreads: AngleSpreadSpec, samples_per_coherence: int = 4) -> None:
    """Raise ``ValueError`` if the grid is coarser than the coherence scales allow."""
    scales = coherence_scales(wavelength_m, spreads)
    for axis, step, scale in (("y", grid.dy_m, scales.w_coh_m), ("z", grid.dz_m, scales.h_coh_m)):
        if step > scale / samples_per_coherence * (1 + 1e-12):
            raise ValueError(
                f"grid too coarse along {axis}: spacing {step:.4g} m > coherence scale / {samples_per_coherence} "
                f"= {scale / samples_per_coherence:.4g} m"
            )


@dataclass(frozen=True)
class FieldGrid:
    values: np.ndarray  # (nz, ny) complex
    grid: ApertureGrid
    role: FieldRole


def correlation_matrix_1d(coords, spread_rad: float, wavenumber_k: float) -> np.ndarray:
    c = np.asarray(coords, dtype=float)
    d = c[:, None] - c[None, :]
    return np.exp(-0.5 * (wavenumber_k * spread_rad * d) ** 2)


def cholesky_with_jitter(corr: np.ndarray) -> tuple[np.ndarray, float]:
    """Lower Cholesky factor of ``corr + jitter * I``, escalating jitter tenfold on failure.

    Returns ``(L, jitter)``; jitter is 0.0 for a 1x1 or exactly rank-one matrix handled
    as a special case. Raises :class:`FactorizationError` past ``JITTER_MAX``.
    """
    n = corr.shape[0]
    if np.all(corr == 1.0):
        # fully coherent: every sample shares one draw
        L = np.zeros_like(corr)
        L[:, 0] = 1.0
        return L, 0.0
    jitter = JITTER_START
    eye = np.eye(n)
    while jitter <= JITTER_MAX * (1 + 1e-9):
        try:
            return np.linalg.cholesky(corr + jitter * eye), jitter
        except np.linalg.LinAlgError:
            jitter *= 10.0
    raise FactorizationError(f"Cholesky failed even with jitter {jitter / 10:g}", jitter / 10)


@dataclass(frozen=True)
class _Factors:
    lz: np.ndarray
    ly: np.ndarray
    jitter: float
    n_fields: int  # 0 = no randomness, 1 = scattered only, 2 = both


def _factors(grid: ApertureGrid, spreads: AngleSpreadSpec, wavenumber_k: float) -> _Factors:
    lz, jz = cholesky_with_jitter(correlation_matrix_1d(grid.z_m, spreads.elevation_rms_rad, wavenumber_k))
    ly, jy = cholesky_with_jitter(correlation_matrix_1d(grid.y_m, spreads.azimuth_rms_rad, wavenumber_k))
    mode = spreads.scattered_segments
    if mode is SegmentMode.NONE or (spreads.azimuth_rms_rad == 0 and spreads.elevation_rms_rad == 0):
        n = 0
    elif mode is SegmentMode.RIS_TO_RX_ONLY:
        n = 1
    else:
        n = 2
    return _Factors(lz, ly, max(jz, jy), n)


def _trial_rng(master_seed: int, trial_index: int) -> np.random.Generator:
    # equivalent to SeedSequence(master_seed).spawn(...)[trial_index]
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(trial_index,)))


def _draw(rng: np.random.Generator, n_fields: int, grid: ApertureGrid) -> np.ndarray:
    """iid standard normals, real/imag stacked: shape (n_fields, 2, nz, ny)."""
    return rng.standard_normal((n_fields, 2, grid.nz, grid.ny))


def _correlate(f: _Factors, white: np.ndarray) -> np.ndarray:
    """Apply ``L_z . L_y^T`` to stacked real/imag normals; returns complex fields."""
    *lead, nz, ny = white.shape
    # two flat GEMMs instead of one small GEMM per (trial, field, part) slice
    x = (white.reshape(-1, ny) @ f.ly.T).reshape(*lead, nz, ny)
    x = (np.swapaxes(x, -1, -2).reshape(-1, nz) @ f.lz.T).reshape(*lead, ny, nz)
    x = np.swapaxes(x, -1, -2)
    return (x[..., 0, :, :] + 1j * x[..., 1, :, :]) / math.sqrt(2.0)


def sample_field_pair(
    grid: ApertureGrid, spreads: AngleSpreadSpec, wavenumber_k: float, seed
) -> tuple[FieldGrid, FieldGrid]:
    """One realization of ``(xi_inc, xi_scat)``.

    ``seed`` may be anything :func:`numpy.random.default_rng` accepts. Fields that carry
    no spread are returned as exact ones.
    """
    check_sampling(grid, 2 * math.pi / wavenumber_k, spreads)
    f = _factors(grid, spreads, wavenumber_k)
    ones = np.ones((grid.nz, grid.ny), dtype=complex)
    if f.n_fields == 0:
        return FieldGrid(ones, grid, FieldRole.INCIDENT), FieldGrid(ones.copy(), grid, FieldRole.SCATTERED)
    fields = _correlate(f, _draw(np.random.default_rng(seed), f.n_fields, grid))
    inc = fields[0] if f.n_fields == 2 else ones
    return FieldGrid(inc, grid, FieldRole.INCIDENT), FieldGrid(fields[-1], grid, FieldRole.SCATTERED)


def aperture_integral(xi_inc: FieldGrid, xi_scat: FieldGrid) -> complex:
    if xi_inc.grid != xi_scat.grid or xi_inc.values.shape != xi_scat.values.shape:
        raise ValueError(f"grid mismatch: {xi_inc.values.shape} on {xi_inc.grid} vs {xi_scat.values.shape} on {xi_scat.grid}")
    g = xi_inc.grid
    return complex(g.dy_m * g.dz_m * np.sum(xi_inc.values * xi_scat.values))


def _chunk_powers(f: _Factors, grid: ApertureGrid, master_seed: int, start: int, stop: int) -> np.ndarray:
    white = np.stack([_draw(_trial_rng(master_seed, t), f.n_fields, grid) for t in range(start, stop)])
    fields = _correlate(f, white)  # (trials, n_fields, nz, ny)
    product = fields[:, 0] * fields[:, 1] if f.n_fields == 2 else fields[:, 0]
    s = grid.dy_m * grid.dz_m * product.sum(axis=(-2, -1))
    return np.abs(s) ** 2


def worker_count(workers: int | None = None) -> int:
    if workers is None:
        workers = int(os.environ.get(THREADS_ENV, "0") or 0)
    if workers <= 0:
        workers = os.cpu_count() or 1
    return workers


@dataclass(frozen=True)
class McEstimate:
    mean_power: float
    std_error: float
    trials: int
    analytic_prediction: float
    master_seed: int
    analytic_min_approx: float
    grid: ApertureGrid
    spreads: AngleSpreadSpec
    jitter: float
    wavelength_m: float


def mc_mean_power(
    grid: ApertureGrid,
    spreads: AngleSpreadSpec,
    wavenumber_k: float,
    trials: int,
    master_seed: int,
    workers: int | None = None,
) -> McEstimate:
    """Estimate ``<|aperture integral|^2>`` (units m^4) over ``trials`` realizations.

    Trial ``t`` always uses the substream ``SeedSequence(master_seed, spawn_key=(t,))``,
    and trials are grouped into fixed chunks, so the estimate is bit-identical for any
    worker count.
    """
    if trials < MIN_TRIALS:
        raise ValueError(f"need at least {MIN_TRIALS} trials, got {trials}")
    if not 0 <= master_seed < 2**64:
        raise ValueError("master_seed must be a 64-bit unsigned integer")
    wavelength = 2 * math.pi / wavenumber_k
    check_sampling(grid, wavelength, spreads)
    f = _factors(grid, spreads, wavenumber_k)
    exact = grid.area_m2 * effective_area_exact(grid.width_m, grid.height_m, wavelength, spreads)
    approx = grid.area_m2 * effective_area(
        grid.width_m, grid.height_m, coherence_scales(wavelength, spreads)
    ).a_eff_m2

    if f.n_fields == 0:
        # deterministic integrand: every trial sees the same |sum|^2
        ones = np.ones((grid.nz, grid.ny), dtype=complex)
        p = abs(aperture_integral(FieldGrid(ones, grid, FieldRole.INCIDENT), FieldGrid(ones, grid, FieldRole.SCATTERED))) ** 2
        return McEstimate(p, 0.0, trials, exact, master_seed, approx, grid, spreads, f.jitter, wavelength)

    bounds = [(s, min(s + CHUNK_TRIALS, trials)) for s in range(0, trials, CHUNK_TRIALS)]
    n_workers = min(worker_count(workers), len(bounds))
    if n_workers == 1:
        parts = [_chunk_powers(f, grid, master_seed, a, b) for a, b in bounds]
    else:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            parts = list(pool.map(lambda ab: _chunk_powers(f, grid, master_seed, *ab), bounds))
    powers = np.concatenate(parts)
    return McEstimate(
        mean_power=float(np.mean(powers)),
        std_error=float(np.std(powers, ddof=1) / math.sqrt(trials)),
        trials=trials,
        analytic_prediction=exact,
        master_seed=master_seed,
        analytic_min_approx=approx,
        grid=grid,
        spreads=spreads,
        jitter=f.jitter,
        wavelength_m=wavelength,
    )


@dataclass(frozen=True)
class OracleReport:
    aperture_w_m: float
    aperture_h_m: float
    trials: int
    master_seed: int
    mc_mean: float
    std_err: float
    analytic_exact: float
    analytic_min_approx: float
    z_score: float
    verdict: str  # pass | fail | degenerate-pass
    jitter: float = 0.0
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.verdict != "fail"

    def to_lines(self) -> list[str]:
        lines = [
            f"aperture_w_m = {self.aperture_w_m:.6g}",
            f"aperture_h_m = {self.aperture_h_m:.6g}",
            f"trials = {self.trials}",
            f"master_seed = {self.master_seed}",
            f"mc_mean_m4 = {self.mc_mean:.12e}",
            f"std_err_m4 = {self.std_err:.12e}",
            f"analytic_exact_m4 = {self.analytic_exact:.12e}",
            f"analytic_min_approx_m4 = {self.analytic_min_approx:.12e}",
            f"mc_vs_min_approx_db = {_db_ratio(self.mc_mean, self.analytic_min_approx):+.4f}",
            f"z_score = {self.z_score:+.4f}",
            f"cholesky_jitter = {self.jitter:g}",
        ]
        lines += [f"{k} = {v}" for k, v in self.extra.items()]
        lines.append(f"verdict = {self.verdict}")
        return lines

    def to_text(self) -> str:
        return "\n".join(self.to_lines()) + "\n"


CSV_COLUMNS = (
    "aperture_w",
    "aperture_h",
    "trials",
    "mc_mean",
    "std_err",
    "analytic_exact",
    "analytic_min_approx",
    "z_score",
    "verdict",
)


def _db_ratio(a: float, b: float) -> float:
    return 10 * math.log10(a / b) if a > 0 and b > 0 else math.nan


def oracle_report(estimate: McEstimate, threshold: float = Z_THRESHOLD) -> OracleReport:
    """Compare an estimate against the exact analytic prediction at ``threshold`` sigma."""
    diff = estimate.mean_power - estimate.analytic_prediction
    if estimate.std_error == 0.0:
        degenerate = math.isclose(estimate.mean_power, estimate.analytic_prediction, rel_tol=1e-12)
        z = 0.0 if degenerate else math.copysign(math.inf, diff)
        verdict = "degenerate-pass" if degenerate else "fail"
    else:
        z = diff / estimate.std_error
        verdict = "pass" if abs(z) <= threshold else "fail"
    return OracleReport(
        aperture_w_m=estimate.grid.width_m,
        aperture_h_m=estimate.grid.height_m,
        trials=estimate.trials,
        master_seed=estimate.master_seed,
        mc_mean=estimate.mean_power,
        std_err=estimate.std_error,
        analytic_exact=estimate.analytic_prediction,
        analytic_min_approx=estimate.analytic_min_approx,
        z_score=z,
        verdict=verdict,
        jitter=estimate.jitter,
    )


def reports_to_csv(reports) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in reports:
        writer.writerow(
            [repr(r.aperture_w_m), repr(r.aperture_h_m), r.trials, repr(r.mc_mean), repr(r.std_err),
             repr(r.analytic_exact), repr(r.analytic_min_approx), repr(r.z_score), r.verdict]
        )
    return buf.getvalue()


_SEED_SCRAMBLE = 0x9E3779B97F4A7C15

# Area factor one would get if each coherence scale doubled when only one segment scatters.
DOUBLED_SCALES_FACTOR = 4.0
# Gaussian result for an unbounded aperture: sqrt(2) per axis.
GAUSSIAN_SEGMENT_FACTOR = 2.0


@dataclass(frozen=True)
class SegmentFactorComparison:
    mc_ratio: float
    mc_ratio_std_err: float
    analytic_exact_ratio: float
    gaussian_unbounded_ratio: float = GAUSSIAN_SEGMENT_FACTOR
    doubled_scales_ratio: float = DOUBLED_SCALES_FACTOR

    def to_lines(self) -> list[str]:
        return [
            f"segment_factor_mc = {self.mc_ratio:.6f} +/- {self.mc_ratio_std_err:.6f}",
            f"segment_factor_analytic_exact = {self.analytic_exact_ratio:.6f}",
            f"segment_factor_gaussian_unbounded = {self.gaussian_unbounded_ratio:.6f}",
            f"segment_factor_if_scales_doubled = {self.doubled_scales_ratio:.6f}",
        ]


def segment_factor(
    width_m: float,
    height_m: float,
    wavelength_m: float,
    azimuth_rms_rad: float,
    elevation_rms_rad: float,
    trials: int,
    master_seed: int,
    workers: int | None = None,
) -> SegmentFactorComparison:
    """Power ratio, RIS->Rx-only scatter over scatter on both segments, for one aperture.

    Both runs share one grid (fine enough for the both-segment case). The one-segment run
    uses a seed scrambled from ``master_seed`` so the two means are independent, which
    is what the ratio's standard error assumes.
    """
    both = AngleSpreadSpec(azimuth_rms_rad, elevation_rms_rad, SegmentMode.BOTH)
    one = AngleSpreadSpec(azimuth_rms_rad, elevation_rms_rad, SegmentMode.RIS_TO_RX_ONLY)
    grid = make_grid(width_m, height_m, wavelength_m, both)
    k = 2 * math.pi / wavelength_m
    est_both = mc_mean_power(grid, both, k, trials, master_seed, workers)
    est_one = mc_mean_power(grid, one, k, trials, master_seed ^ _SEED_SCRAMBLE, workers)
    ratio = est_one.mean_power / est_both.mean_power
    rel = math.hypot(est_one.std_error / est_one.mean_power, est_both.std_error / est_both.mean_power)
    return SegmentFactorComparison(
        mc_ratio=ratio,
        mc_ratio_std_err=ratio * rel,
        analytic_exact_ratio=est_one.analytic_prediction / est_both.analytic_prediction,
    )
