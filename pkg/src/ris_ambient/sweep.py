"""Receiver-distance sweeps over every mechanism, with CSV export."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .ambient import DomainError, PathGain, diffraction_path_gain, pole_path_gain
from .ris import ideal_ris_path_gain, spread_ris_path_gain
from .scenario import CORNERS, GeometryError, Scenario, corner_paths, pole_paths, ris_path


def default_distances() -> np.ndarray:
    """40 log-spaced receiver distances from 20 m to 200 m."""
    return np.geomspace(20.0, 200.0, 40)


@dataclass(frozen=True)
class Mechanism:
    """A path gain, or the reason it could not be evaluated."""

    gain: PathGain | None
    reason: str = ""

    @property
    def present(self) -> bool:
        return self.gain is not None


@dataclass(frozen=True)
class SweepRow:
    rx_distance_m: float
    corners: dict[str, Mechanism]
    poles: dict[str, Mechanism]
    ambient_total: PathGain
    ris_ideal: Mechanism
    ris_spread: Mechanism

    @property
    def ris_advantage_db(self) -> float:
        """Spread-degraded RIS over ambient, in dB."""
        if not self.ris_spread.present:
            return math.nan
        return self.ris_spread.gain.db - self.ambient_total.db

    @property
    def ris_ideal_advantage_db(self) -> float:
        if not self.ris_ideal.present:
            return math.nan
        return self.ris_ideal.gain.db - self.ambient_total.db

    @property
    def diffraction_total(self) -> PathGain:
        return PathGain(sum(m.gain.linear for m in self.corners.values() if m.present))

    @property
    def pole_total(self) -> PathGain:
        return PathGain(sum(m.gain.linear for m in self.poles.values() if m.present))


@dataclass
class SweepResult:
    rows: list[SweepRow]
    metadata: dict = field(default_factory=dict)

    def nearest(self, distance_m: float) -> SweepRow:
        return min(self.rows, key=lambda r: abs(r.rx_distance_m - distance_m))


def _guarded(fn, *args) -> Mechanism:
    try:
        return Mechanism(fn(*args))
    except DomainError as exc:
        return Mechanism(None, exc.code)
    except GeometryError:
        return Mechanism(None, "geometry")


def evaluate_row(scenario: Scenario, rx_distance_m: float) -> SweepRow:
    corners = {p.corner: _guarded(diffraction_path_gain, p, scenario) for p in corner_paths(scenario, rx_distance_m)}
    poles = {p.pole: _guarded(pole_path_gain, p, scenario) for p in pole_paths(scenario, rx_distance_m)}
    try:
        rp = ris_path(scenario, rx_distance_m)
    except GeometryError:
        ideal = spread = Mechanism(None, "geometry")
    else:
        ideal = Mechanism(ideal_ris_path_gain(rp, scenario))
        spread = Mechanism(spread_ris_path_gain(rp, scenario))
    ambient = PathGain(math.fsum(m.gain.linear for m in (*corners.values(), *poles.values()) if m.present))
    return SweepRow(rx_distance_m, corners, poles, ambient, ideal, spread)


def run_sweep(scenario: Scenario, rx_distances_m=None) -> SweepResult:
    """Evaluate every mechanism at each receiver distance (m from the intersection center).

    Rows are independent of each other. A mechanism that falls outside its validity
    domain is kept as absent with a reason code; it contributes nothing to the ambient
    total.
    """
    distances = default_distances() if rx_distances_m is None else np.asarray(rx_distances_m, dtype=float)
    if distances.size == 0:
        raise ValueError("empty distance list")
    if np.any(~np.isfinite(distances)) or np.any(distances <= scenario.street_half_width_m):
        raise ValueError(
            f"receiver distances must be finite and beyond the intersection (> {scenario.street_half_width_m:g} m)"
        )
    rows = [evaluate_row(scenario, float(d)) for d in np.sort(distances)]
    metadata = {
        "artifact": "ris-ambient",
        "version": __version__,
        "distance_definition": "receiver distance from intersection center along the street B centerline",
        "scenario": scenario.to_dict(),
    }
    return SweepResult(rows, metadata)


def _columns() -> list[str]:
    cols = ["rx_distance_m"]
    for prefix in ("diffraction", "pole"):
        for name in CORNERS:
            cols += [f"{prefix}_{name}_linear", f"{prefix}_{name}_db", f"{prefix}_{name}_reason"]
    cols += ["diffraction_total_linear", "diffraction_total_db", "pole_total_linear", "pole_total_db"]
    cols += ["ambient_total_linear", "ambient_total_db"]
    cols += ["ris_ideal_linear", "ris_ideal_db", "ris_ideal_reason"]
    cols += ["ris_spread_linear", "ris_spread_db", "ris_spread_reason"]
    cols += ["ris_advantage_db", "ris_ideal_advantage_db"]
    return cols


CSV_COLUMNS = tuple(_columns())


def _num(x: float) -> str:
    return "" if x is None or math.isnan(x) else repr(float(x))


def _gain_cells(gain: PathGain) -> list[str]:
    return [_num(gain.linear), _num(gain.db)]


def _mech_cells(m: Mechanism) -> list[str]:
    if not m.present:
        return ["", "", m.reason]
    return [*_gain_cells(m.gain), ""]


def to_csv(result: SweepResult) -> bytes:
    """CSV with ``#``-prefixed JSON metadata lines, one header row and one row per distance."""
    if not result.rows:
        raise ValueError("empty sweep result")
    buf = io.StringIO()
    for key, value in result.metadata.items():
        buf.write(f"# {key}: {json.dumps(value, sort_keys=True)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in result.rows:
        cells = [_num(row.rx_distance_m)]
        for name in CORNERS:
            cells += _mech_cells(row.corners[name])
        for name in CORNERS:
            cells += _mech_cells(row.poles[name])
        cells += _gain_cells(row.diffraction_total) + _gain_cells(row.pole_total)
        cells += _gain_cells(row.ambient_total)
        cells += _mech_cells(row.ris_ideal) + _mech_cells(row.ris_spread)
        cells += [_num(row.ris_advantage_db), _num(row.ris_ideal_advantage_db)]
        writer.writerow(cells)
    return buf.getvalue().encode("utf-8")


def read_csv(data: bytes | str) -> tuple[dict, list[dict]]:
    """Inverse of :func:`to_csv`: metadata dict and rows as column -> float | str | None."""
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    metadata, body = {}, []
    for line in text.splitlines():
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition(": ")
            metadata[key] = json.loads(value)
        else:
            body.append(line)
    rows = []
    for rec in csv.DictReader(body):
        parsed = {}
        for k, v in rec.items():
            if k.endswith("_reason"):
                parsed[k] = v
            else:
                parsed[k] = float(v) if v != "" else None
        rows.append(parsed)
    return metadata, rows
