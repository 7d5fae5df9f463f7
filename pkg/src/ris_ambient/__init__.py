"""Around-the-corner coverage: ambient scatter versus an angle-spread-limited RIS."""

__version__ = "0.1.0"

from .ambient import (  # noqa: E402
    DiffractionCoefficient,
    DomainError,
    PathGain,
    diffraction_path_gain,
    gtd_coefficient,
    pole_path_gain,
    pole_scattering_width,
)
from .ris import (  # noqa: E402
    CoherenceScales,
    EffectiveArea,
    coherence_scales,
    effective_area,
    effective_area_exact,
    ideal_ris_path_gain,
    spread_ris_path_gain,
)
from .scenario import (  # noqa: E402
    AngleSpreadSpec,
    ConfigError,
    CornerPath,
    GeometryError,
    Polarization,
    PolePath,
    RisPath,
    Scenario,
    SegmentMode,
    baseline_config,
    build_scenario,
    corner_paths,
    pole_paths,
    ris_path,
)

__all__ = [
    "__version__",
    "DiffractionCoefficient",
    "DomainError",
    "PathGain",
    "diffraction_path_gain",
    "gtd_coefficient",
    "pole_path_gain",
    "pole_scattering_width",
    "CoherenceScales",
    "EffectiveArea",
    "coherence_scales",
    "effective_area",
    "effective_area_exact",
    "ideal_ris_path_gain",
    "spread_ris_path_gain",
    "AngleSpreadSpec",
    "ConfigError",
    "CornerPath",
    "GeometryError",
    "Polarization",
    "PolePath",
    "RisPath",
    "Scenario",
    "SegmentMode",
    "baseline_config",
    "build_scenario",
    "corner_paths",
    "pole_paths",
    "ris_path",
]
