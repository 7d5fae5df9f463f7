"""Ambient around-the-corner mechanisms: GTD wedge diffraction and pole scatter.

All path gains are normalized by transmit power and both antenna gains, and carry an
exponential absorption factor ``exp(-kappa * total_length)`` with kappa in Np/m
applied to power.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

from .scenario import CORNER_WEDGE_N, CornerPath, Polarization, PolePath, Scenario

# Smallest tolerated |cos(pi/n) - cos((phi_inc -/+ phi_d)/n)| before GTD blows up.
SHADOW_BOUNDARY_EPS = 1e-3
# High-frequency limit for the cylinder scattering width.
MIN_KA = 20.0


class DomainError(ValueError):
    """Inputs outside the asymptotic regime a closed-form model is valid in.

    ``code`` is a short machine-readable reason used in sweep output.
    """

    def __init__(self, message: str, code: str):
        super().__init__(message)
        self.code = code


@dataclass(frozen=True)
class PathGain:
    """Dimensionless ``P_R / (P_T G_T G_R)``."""

    linear: float

    def __post_init__(self):
        if not self.linear >= 0:
            raise ValueError(f"path gain must be non-negative, got {self.linear!r}")

    @property
    def db(self) -> float:
        return 10.0 * math.log10(self.linear) if self.linear > 0 else -math.inf

    def __add__(self, other: "PathGain") -> "PathGain":
        return PathGain(self.linear + other.linear)


@dataclass(frozen=True)
class DiffractionCoefficient:
    value: complex
    polarization: Polarization
    wedge_n: float


def absorption_factor(kappa_np_per_m: float, length_m: float) -> float:
    return math.exp(-kappa_np_per_m * length_m)


def gtd_coefficient(
    phi_inc_rad: float,
    phi_d_rad: float,
    wedge_n: float,
    wavenumber_k: float,
    polarization: Polarization | str,
) -> DiffractionCoefficient:
    """Keller wedge diffraction coefficient (no transition functions).

    Angles are measured from one face of a wedge with exterior angle ``wedge_n * pi``;
    the result does not depend on which face is used as the reference.
    """
    polarization = Polarization(polarization)
    c0 = math.cos(math.pi / wedge_n)
    den_minus = c0 - math.cos((phi_inc_rad - phi_d_rad) / wedge_n)
    den_plus = c0 - math.cos((phi_inc_rad + phi_d_rad) / wedge_n)
    worst = min(abs(den_minus), abs(den_plus))
    if worst < SHADOW_BOUNDARY_EPS:
        raise DomainError(
            f"GTD invalid near shadow boundary: |denominator| = {worst:.3g} < {SHADOW_BOUNDARY_EPS:g} "
            f"(phi_inc={phi_inc_rad:.6g}, phi_d={phi_d_rad:.6g})",
            "gtd_shadow_boundary",
        )
    sign = 1.0 if polarization is Polarization.HARD else -1.0
    prefactor = cmath.exp(1j * math.pi / 4) * math.sin(math.pi / wedge_n) / (wedge_n * math.sqrt(2 * math.pi * wavenumber_k))
    value = prefactor * (1.0 / den_minus + sign / den_plus)
    return DiffractionCoefficient(value=value, polarization=polarization, wedge_n=wedge_n)


def diffraction_path_gain(path: CornerPath, scenario: Scenario, polarization: Polarization | str | None = None) -> PathGain:
    pol = scenario.polarization if polarization is None else Polarization(polarization)
    d = gtd_coefficient(path.phi_inc_rad, path.phi_d_rad, CORNER_WEDGE_N, scenario.wavenumber, pol)
    r, rp = path.r_post_m, path.r_pre_m
    lam = scenario.wavelength_m
    linear = lam**2 * abs(d.value) ** 2 / (16 * math.pi**2 * r * rp * (r + rp))
    return PathGain(linear * absorption_factor(scenario.absorption_np_per_m, r + rp))


def pole_scattering_width(radius_m: float, phi_prime_rad: float, wavenumber_k: float) -> float:
    """Bistatic scattering width (m) of a perfectly conducting cylinder, optics limit."""
    ka = wavenumber_k * radius_m
    if ka <= MIN_KA:
        raise DomainError(f"below high-frequency limit: ka = {ka:.4g} <= {MIN_KA:g}", "pole_below_hf_limit")
    bound = ka ** (-1.0 / 3.0)
    if abs(math.pi - phi_prime_rad) <= bound:
        raise DomainError(
            f"too close to forward scatter: |pi - phi'| = {abs(math.pi - phi_prime_rad):.4g} "
            f"<= (ka)^(-1/3) = {bound:.4g}",
            "pole_forward_scatter",
        )
    return math.pi * radius_m * math.cos(phi_prime_rad / 2.0)


def pole_path_gain(path: PolePath, scenario: Scenario) -> PathGain:
    sigma = pole_scattering_width(scenario.pole_radius_m, path.phi_prime_rad, scenario.wavenumber)
    r1, r2 = path.r1_m, path.r2_m
    lam = scenario.wavelength_m
    linear = lam**2 * sigma / (2 * math.pi * (4 * math.pi) ** 2 * r1 * r2 * (r1 + r2))
    return PathGain(linear * absorption_factor(scenario.absorption_np_per_m, r1 + r2))
