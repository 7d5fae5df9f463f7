"""Analytic RIS receive power, ideal and angle-spread degraded.

Under a Gaussian field correlation ``rho(yd, zd) = exp(-k^2 yd^2 az^2/2 - k^2 zd^2 el^2/2)``
a RIS that only compensates the mean plane-wave phase gains ``A_RIS * A_eff`` instead
of ``A_RIS**2``, where ``A_eff`` is the integral of the product of the per-segment
correlations over the aperture.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

from scipy import integrate

from .ambient import PathGain, absorption_factor
from .scenario import AngleSpreadSpec, RisPath, Scenario, SegmentMode

QUAD_RTOL = 1e-8


class QuadratureError(ArithmeticError):
    """Adaptive quadrature failed to reach the requested tolerance."""


@dataclass(frozen=True)
class CoherenceScales:
    w_coh_m: float
    h_coh_m: float
    segment_mode: SegmentMode


@dataclass(frozen=True)
class EffectiveArea:
    a_eff_m2: float
    a_ris_m2: float

    @property
    def degradation_db(self) -> float:
        return 10.0 * math.log10(self.a_eff_m2 / self.a_ris_m2)


def _coherence_length(wavelength_m: float, spread_rad: float) -> float:
    if spread_rad == 0:
        return math.inf
    return wavelength_m / (2.0 * math.sqrt(math.pi) * spread_rad)


def coherence_scales(wavelength_m: float, spreads: AngleSpreadSpec) -> CoherenceScales:
    """Coherence width/height of the product of the decorrelation fields.

    With both segments scattered the product carries ``rho**2``, whose integral over
    the whole line is ``lambda / (2 sqrt(pi) spread)``. With only the RIS->Rx segment
    scattered the product carries a single ``rho``, and the same integral is larger by
    exactly ``sqrt(2)``. A zero spread, or mode ``none``, gives ``math.inf``.
    """
    mode = spreads.scattered_segments
    if mode is SegmentMode.NONE:
        return CoherenceScales(math.inf, math.inf, mode)
    w = _coherence_length(wavelength_m, spreads.azimuth_rms_rad)
    h = _coherence_length(wavelength_m, spreads.elevation_rms_rad)
    if mode is SegmentMode.RIS_TO_RX_ONLY:
        w *= math.sqrt(2.0)
        h *= math.sqrt(2.0)
    return CoherenceScales(w, h, mode)


def effective_area(w_m: float, h_m: float, scales: CoherenceScales) -> EffectiveArea:
    """Min-approximation of the coherent area (clamps each scale to the aperture)."""
    if w_m <= 0 or h_m <= 0:
        raise ValueError("RIS dimensions must be positive")
    return EffectiveArea(min(scales.w_coh_m, w_m) * min(scales.h_coh_m, h_m), w_m * h_m)


def _gauss_rate(wavenumber_k: float, spread_rad: float, mode: SegmentMode) -> float:
    """Exponent ``a`` in ``exp(-a * d**2)`` for the correlation product along one axis."""
    per_segment = 0.5 * (wavenumber_k * spread_rad) ** 2
    if mode is SegmentMode.BOTH:
        return 2.0 * per_segment
    if mode is SegmentMode.RIS_TO_RX_ONLY:
        return per_segment
    return 0.0


def _windowed_integral(length_m: float, rate: float) -> float:
    """``(1/L) * int_{-L}^{L} (L - |d|) exp(-rate d^2) dd`` by adaptive quadrature."""
    if rate == 0:
        return length_m
    # exp(-rate d^2) underflows past 30 / sqrt(rate); keep quad away from the flat tail
    upper = min(length_m, 30.0 / math.sqrt(rate))
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err = integrate.quad(
                lambda d: (length_m - d) * math.exp(-rate * d * d),
                0.0,
                upper,
                epsabs=0.0,
                epsrel=QUAD_RTOL,
                limit=200,
            )
        except integrate.IntegrationWarning as exc:
            raise QuadratureError(f"quadrature did not converge to rtol={QUAD_RTOL:g}: {exc}") from exc
    if err > 10 * QUAD_RTOL * abs(val):
        raise QuadratureError(f"quadrature achieved only abs err {err:.3g} on {val:.6g}")
    return 2.0 * val / length_m


def effective_area_exact(w_m: float, h_m: float, wavelength_m: float, spreads: AngleSpreadSpec) -> float:
    """Coherent area from the exact aperture double integral.

    ``(1/A) * int int (w-|yd|)(h-|zd|) rho_inc rho_scat dyd dzd``; the correlation is
    separable, so this is the product of two 1-D windowed integrals.
    """
    if w_m <= 0 or h_m <= 0:
        raise ValueError("RIS dimensions must be positive")
    k = 2.0 * math.pi / wavelength_m
    mode = spreads.scattered_segments
    return _windowed_integral(w_m, _gauss_rate(k, spreads.azimuth_rms_rad, mode)) * _windowed_integral(
        h_m, _gauss_rate(k, spreads.elevation_rms_rad, mode)
    )


def _ris_link_factor(path: RisPath, scenario: Scenario) -> float:
    cos_inc = math.cos(path.theta_inc_rad)
    r_inc, r_scat = path.r_inc_m, path.r_scat_m
    return (
        cos_inc**2
        * absorption_factor(scenario.absorption_np_per_m, r_inc + r_scat)
        / ((4 * math.pi) ** 2 * r_inc**2 * r_scat**2)
    )


def ideal_ris_path_gain(path: RisPath, scenario: Scenario) -> PathGain:
    """Perfectly co-phased RIS; independent of frequency."""
    return PathGain(scenario.ris_area_m2**2 * _ris_link_factor(path, scenario))


def spread_ris_path_gain(path: RisPath, scenario: Scenario) -> PathGain:
    """RIS that compensates only the mean plane-wave phase, using the min-approximation area."""
    scales = coherence_scales(scenario.wavelength_m, scenario.angle_spread)
    area = effective_area(scenario.ris_width_m, scenario.ris_height_m, scales)
    return PathGain(area.a_ris_m2 * area.a_eff_m2 * _ris_link_factor(path, scenario))
