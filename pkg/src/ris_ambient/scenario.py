"""Street-intersection scenario and per-mechanism path geometry.

Plan-view layout (all heights equal, elevation ignored):

* origin at the intersection center, x points east, y points north;
* street A runs east-west, street B north-south, both ``2 * street_half_width_m`` wide;
* the transmitter sits on the street A centerline at ``(-tx_corner_distance_m, 0)``;
* the receiver sits on the street B centerline at ``(0, rx_corner_distance_m)``;
* one building per quadrant, with its corner at ``(sx * W/2, sy * W/2)``;
* one pole per corner, pushed ``pole_setback_m`` diagonally into the intersection;
* the RIS hangs on the west wall (``x = W/2``) of the north-east building, its near
  edge flush with the corner, facing west down street A toward the transmitter.
"""

from __future__ import annotations

import copy
import math
from collections.abc import Mapping, Sequence
from dataclasses import asdict, dataclass
from enum import Enum
from typing import Any

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0  # m/s

# Exterior angle of a right-angle building corner, in units of pi.
CORNER_WEDGE_N = 1.5


class ConfigError(ValueError):
    """Invalid scenario configuration; ``key`` names the offending entry."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


class GeometryError(ValueError):
    """Receiver or transmitter placement incompatible with the layout."""


class Polarization(str, Enum):
    HARD = "hard"
    SOFT = "soft"


class SegmentMode(str, Enum):
    """Which link segments carry angle spread."""

    BOTH = "both"
    RIS_TO_RX_ONLY = "ris_to_rx_only"
    NONE = "none"


@dataclass(frozen=True)
class AngleSpreadSpec:
    azimuth_rms_rad: float
    elevation_rms_rad: float
    scattered_segments: SegmentMode = SegmentMode.BOTH

    def __post_init__(self):
        for name in ("azimuth_rms_rad", "elevation_rms_rad"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise ConfigError(f"angle_spread.{name}", f"must be finite and >= 0, got {value!r}")
        object.__setattr__(self, "scattered_segments", SegmentMode(self.scattered_segments))

    @property
    def is_ideal(self) -> bool:
        """True when no decorrelation applies at all."""
        return self.scattered_segments is SegmentMode.NONE or (
            self.azimuth_rms_rad == 0.0 and self.elevation_rms_rad == 0.0
        )


@dataclass(frozen=True)
class Scenario:
    frequency_hz: float
    tx_corner_distance_m: float
    street_half_width_m: float
    pole_radius_m: float
    pole_setback_m: float
    absorption_np_per_m: float
    ris_width_m: float
    ris_height_m: float
    angle_spread: AngleSpreadSpec
    polarization: Polarization = Polarization.HARD

    def __post_init__(self):
        object.__setattr__(self, "polarization", Polarization(self.polarization))

    @property
    def wavelength_m(self) -> float:
        return SPEED_OF_LIGHT / self.frequency_hz

    @property
    def wavenumber(self) -> float:
        return 2.0 * math.pi / self.wavelength_m

    @property
    def ris_area_m2(self) -> float:
        return self.ris_width_m * self.ris_height_m

    def to_dict(self) -> dict[str, Any]:
        """Plain nested dict, suitable for echoing into output metadata."""
        d = asdict(self)
        d["polarization"] = self.polarization.value
        d["angle_spread"]["scattered_segments"] = self.angle_spread.scattered_segments.value
        return d


@dataclass(frozen=True)
class CornerPath:
    corner: str
    r_pre_m: float
    r_post_m: float
    phi_inc_rad: float
    phi_d_rad: float


@dataclass(frozen=True)
class PolePath:
    pole: str
    r1_m: float
    r2_m: float
    phi_prime_rad: float


@dataclass(frozen=True)
class RisPath:
    r_inc_m: float
    r_scat_m: float
    theta_inc_rad: float
    s_hat: np.ndarray
    o_hat: np.ndarray


# --------------------------------------------------------------------------- config

_NUMERIC_KEYS = {
    # key: (strictly positive?, default or None when required)
    "frequency_hz": (True, None),
    "tx_corner_distance_m": (True, None),
    "street_half_width_m": (True, 10.0),
    "pole_radius_m": (True, None),
    "pole_setback_m": (True, 1.0),
    "absorption_np_per_m": (False, None),
    "ris_width_m": (True, None),
    "ris_height_m": (True, None),
}
_SPREAD_KEYS = ("azimuth_rms_rad", "elevation_rms_rad", "scattered_segments")
_TOP_KEYS = set(_NUMERIC_KEYS) | {"polarization"}

BASELINE_CONFIG: dict[str, Any] = {
    "frequency_hz": 28e9,
    "tx_corner_distance_m": 100.0,
    "street_half_width_m": 10.0,
    "pole_radius_m": 0.12,
    "pole_setback_m": 1.0,
    "absorption_np_per_m": 0.005,
    "ris_width_m": 0.3,
    "ris_height_m": 0.3,
    "polarization": "hard",
    "angle_spread": {
        "azimuth_rms_rad": math.radians(14.0),
        "elevation_rms_rad": math.radians(0.6),
        "scattered_segments": "both",
    },
}


def baseline_config() -> dict[str, Any]:
    """A fresh copy of the 28 GHz reference configuration."""
    return copy.deepcopy(BASELINE_CONFIG)


def _number(key: str, value: Any) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(key, f"expected a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise ConfigError(key, f"must be finite, got {value!r}")
    return value


def build_scenario(config: Mapping[str, Any]) -> Scenario:
    """Validate a key/value document and turn it into a :class:`Scenario`.

    Unknown keys are rejected so that typos never silently fall back to defaults.
    """
    for key in config:
        if key not in _TOP_KEYS and key != "angle_spread":
            raise ConfigError(key, "unknown key")

    values: dict[str, Any] = {}
    for key, (positive, default) in _NUMERIC_KEYS.items():
        if key not in config:
            if default is None:
                raise ConfigError(key, "missing required key")
            values[key] = default
            continue
        v = _number(key, config[key])
        if positive and v <= 0:
            raise ConfigError(key, f"must be > 0, got {v!r}")
        if not positive and v < 0:
            raise ConfigError(key, f"must be >= 0, got {v!r}")
        values[key] = v

    pol = config.get("polarization", "hard")
    try:
        values["polarization"] = Polarization(pol)
    except ValueError:
        raise ConfigError("polarization", f"expected 'hard' or 'soft', got {pol!r}") from None

    spread = config.get("angle_spread")
    if not isinstance(spread, Mapping):
        raise ConfigError("angle_spread", "missing required table")
    for key in spread:
        if key not in _SPREAD_KEYS:
            raise ConfigError(f"angle_spread.{key}", "unknown key")
    for key in _SPREAD_KEYS[:2]:
        if key not in spread:
            raise ConfigError(f"angle_spread.{key}", "missing required key")
    mode = spread.get("scattered_segments", "both")
    try:
        mode = SegmentMode(mode)
    except ValueError:
        raise ConfigError(
            "angle_spread.scattered_segments",
            f"expected one of {[m.value for m in SegmentMode]}, got {mode!r}",
        ) from None
    values["angle_spread"] = AngleSpreadSpec(
        _number("angle_spread.azimuth_rms_rad", spread["azimuth_rms_rad"]),
        _number("angle_spread.elevation_rms_rad", spread["elevation_rms_rad"]),
        mode,
    )
    return Scenario(**values)


def load_config(path) -> dict[str, Any]:
    """Parse a TOML scenario file into a plain dict."""
    try:
        import tomllib
    except ModuleNotFoundError:  # Python < 3.11
        import tomli as tomllib
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def _parse_scalar(text: str) -> Any:
    try:
        import tomllib
    except ModuleNotFoundError:
        import tomli as tomllib
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text.strip()


def apply_overrides(config: Mapping[str, Any], overrides: Sequence[str]) -> dict[str, Any]:
    """Apply ``dotted.key=value`` overrides to a copy of ``config``.

    Values are parsed as TOML scalars (``8e9``, ``"soft"``, ``true``); anything that is
    not valid TOML is kept as a bare string, so ``polarization=soft`` also works.
    Keys that do not already exist in the document are rejected.
    """
    out = copy.deepcopy(dict(config))
    for item in overrides:
        key, sep, raw = item.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(item, "override must look like key=value")
        parts = key.split(".")
        if len(parts) == 1 and parts[0] in _TOP_KEYS:
            node = out
        elif len(parts) == 2 and parts[0] == "angle_spread" and parts[1] in _SPREAD_KEYS:
            node = out.setdefault("angle_spread", {})
            if not isinstance(node, dict):
                raise ConfigError("angle_spread", "expected a table")
        else:
            raise ConfigError(key, "unknown key")
        leaf = parts[-1]
        node[leaf] = _parse_scalar(raw)
    return out


# ------------------------------------------------------------------------- geometry

# Quadrant signs (sx, sy) keyed by the compass name of the building.
CORNERS: dict[str, tuple[int, int]] = {
    "NE": (1, 1),
    "NW": (-1, 1),
    "SW": (-1, -1),
    "SE": (1, -1),
}


def tx_position(scenario: Scenario) -> np.ndarray:
    return np.array([-scenario.tx_corner_distance_m, 0.0])


def rx_position(scenario: Scenario, rx_corner_distance_m: float, rx_offset_m: float = 0.0) -> np.ndarray:
    """Receiver location; a negative distance puts it south of the intersection.

    ``rx_offset_m`` shifts the receiver east of the street B centerline.
    """
    if rx_corner_distance_m == 0 or not math.isfinite(rx_corner_distance_m):
        raise GeometryError(f"receiver distance must be non-zero and finite, got {rx_corner_distance_m!r}")
    p = np.array([rx_offset_m, rx_corner_distance_m], dtype=float)
    _check_open_space(scenario, p, "receiver")
    return p


def _check_open_space(scenario: Scenario, p: np.ndarray, what: str) -> None:
    half = scenario.street_half_width_m
    if abs(p[0]) > half and abs(p[1]) > half:
        raise GeometryError(f"{what} at ({p[0]:g}, {p[1]:g}) m lies inside a building footprint")


def corner_position(scenario: Scenario, name: str) -> np.ndarray:
    sx, sy = CORNERS[name]
    half = scenario.street_half_width_m
    return np.array([sx * half, sy * half])


def pole_position(scenario: Scenario, name: str) -> np.ndarray:
    sx, sy = CORNERS[name]
    inset = scenario.street_half_width_m - scenario.pole_setback_m / math.sqrt(2.0)
    return np.array([sx * inset, sy * inset])


def face_angle(scenario: Scenario, name: str, point: np.ndarray) -> float:
    """Angle of ``point`` seen from a building corner, measured through free space.

    Zero lies along the face parallel to street A; the angle sweeps away from the
    building toward the other face at ``CORNER_WEDGE_N * pi``.
    """
    sx, sy = CORNERS[name]
    v = point - corner_position(scenario, name)
    start = 0.0 if sx > 0 else math.pi
    # the building occupies the 90 degree sector from (sx, 0) to (0, sy); rotate away from it
    sense = -1.0 if sx * sy > 0 else 1.0
    phi = (sense * (math.atan2(v[1], v[0]) - start)) % (2.0 * math.pi)
    if phi > CORNER_WEDGE_N * math.pi + 1e-12:
        raise GeometryError(f"point ({point[0]:g}, {point[1]:g}) is inside the {name} building wedge")
    return phi


def corner_paths(scenario: Scenario, rx_corner_distance_m: float, rx_offset_m: float = 0.0) -> list[CornerPath]:
    """Tx -> corner -> Rx geometry for the four building corners (NE, NW, SW, SE)."""
    tx = tx_position(scenario)
    rx = rx_position(scenario, rx_corner_distance_m, rx_offset_m)
    paths = []
    for name in CORNERS:
        c = corner_position(scenario, name)
        paths.append(
            CornerPath(
                corner=name,
                r_pre_m=float(np.linalg.norm(c - tx)),
                r_post_m=float(np.linalg.norm(rx - c)),
                phi_inc_rad=face_angle(scenario, name, tx),
                phi_d_rad=face_angle(scenario, name, rx),
            )
        )
    return paths


def _angle_between(u: np.ndarray, v: np.ndarray) -> float:
    cross = u[0] * v[1] - u[1] * v[0]  # atan2 stays accurate near 0 and pi, acos does not
    return math.atan2(abs(float(cross)), float(np.dot(u, v)))


def pole_paths(scenario: Scenario, rx_corner_distance_m: float, rx_offset_m: float = 0.0) -> list[PolePath]:
    """Tx -> pole -> Rx geometry; ``phi_prime_rad`` is the bistatic angle (pi = forward)."""
    tx = tx_position(scenario)
    rx = rx_position(scenario, rx_corner_distance_m, rx_offset_m)
    paths = []
    for name in CORNERS:
        p = pole_position(scenario, name)
        r1 = float(np.linalg.norm(p - tx))
        r2 = float(np.linalg.norm(rx - p))
        if r1 == 0 or r2 == 0:
            raise GeometryError(f"terminal coincides with pole {name}")
        paths.append(PolePath(pole=name, r1_m=r1, r2_m=r2, phi_prime_rad=_angle_between(tx - p, rx - p)))
    return paths


def ris_mount(scenario: Scenario) -> tuple[np.ndarray, np.ndarray]:
    """RIS center and outward unit normal as 3-vectors."""
    half = scenario.street_half_width_m
    center = np.array([half, half + 0.5 * scenario.ris_width_m, 0.0])
    normal = np.array([-1.0, 0.0, 0.0])
    return center, normal


def path_via_surface(tx: np.ndarray, rx: np.ndarray, center: np.ndarray, normal: np.ndarray) -> RisPath:
    """RIS path for arbitrary 3-D terminal points and a planar surface."""
    to_ris = center - tx
    to_rx = rx - center
    r_inc = float(np.linalg.norm(to_ris))
    r_scat = float(np.linalg.norm(to_rx))
    if r_inc == 0 or r_scat == 0:
        raise GeometryError("terminal coincides with the RIS center")
    s_hat = to_ris / r_inc
    o_hat = to_rx / r_scat
    cos_inc = float(-np.dot(s_hat, normal))
    if cos_inc <= 0:
        raise GeometryError("transmitter behind the RIS plane")
    if float(np.dot(o_hat, normal)) <= 0:
        raise GeometryError("receiver not illuminated: it lies behind the RIS plane")
    return RisPath(
        r_inc_m=r_inc,
        r_scat_m=r_scat,
        theta_inc_rad=math.acos(min(1.0, cos_inc)),
        s_hat=s_hat,
        o_hat=o_hat,
    )


def ris_path(scenario: Scenario, rx_corner_distance_m: float, rx_offset_m: float = 0.0) -> RisPath:
    center, normal = ris_mount(scenario)
    tx = np.append(tx_position(scenario), 0.0)
    rx = np.append(rx_position(scenario, rx_corner_distance_m, rx_offset_m), 0.0)
    return path_via_surface(tx, rx, center, normal)
