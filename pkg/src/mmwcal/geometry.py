"""Far-field, clearance and material-illumination constraints for
XPD and penetration-loss measurement setups.

All angles are given in degrees at the interface and converted internally.
Distances and heights are in meters, frequencies in Hz.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

SPEED_OF_LIGHT = 299_792_458.0  # m/s

# Pointing error allowed before BORESIGHT is flagged, expressed as the
# boresight gain loss it causes under the Gaussian main-lobe model.
BORESIGHT_GAIN_TOLERANCE_DB = 0.1


class Polarization(str, Enum):
    V = "V"
    H = "H"


class RuleId(str, Enum):
    FAR_FIELD = "FAR_FIELD"
    BORESIGHT = "BORESIGHT"
    CLEARANCE = "CLEARANCE"
    MUT_DISTANCE = "MUT_DISTANCE"
    MUT_EXTENT = "MUT_EXTENT"
    MULTIPATH_MARGIN = "MULTIPATH_MARGIN"


def _check_hpbw(value: float, label: str) -> None:
    if not 0.0 < value < 180.0:
        raise ValueError(f"{label} must lie in (0, 180) degrees, got {value}")


@dataclass(frozen=True)
class Antenna:
    """Directional horn antenna as seen by the planner and the simulator.

    ``xpd_leakage`` is the intrinsic cross-polar rejection of the pair the
    antenna belongs to; only the simulator reads it.
    """

    name: str
    aperture_largest_dim: float
    hpbw_azimuth: float
    hpbw_elevation: float
    gain: float
    xpd_leakage: float = 30.0
    polarization: Polarization = Polarization.V

    def __post_init__(self) -> None:
        if not self.aperture_largest_dim > 0:
            raise ValueError(f"antenna {self.name!r}: aperture must be positive")
        _check_hpbw(self.hpbw_azimuth, f"antenna {self.name!r} hpbw_azimuth")
        _check_hpbw(self.hpbw_elevation, f"antenna {self.name!r} hpbw_elevation")
        if not math.isfinite(self.gain):
            raise ValueError(f"antenna {self.name!r}: gain must be finite")
        if not self.xpd_leakage >= 0:
            raise ValueError(f"antenna {self.name!r}: xpd_leakage must be >= 0 dB")
        object.__setattr__(self, "polarization", Polarization(self.polarization))


@dataclass(frozen=True)
class InternalReflection:
    relative_permittivity: float
    interface_reflection: float  # dB lost at each interface bounce

    def __post_init__(self) -> None:
        if not self.relative_permittivity >= 1.0:
            raise ValueError("relative_permittivity must be >= 1")
        if not self.interface_reflection >= 0:
            raise ValueError("interface_reflection must be >= 0 dB")


@dataclass(frozen=True)
class MaterialSpec:
    name: str
    thickness: float  # cm
    insertion_loss: float  # dB
    extent_height: float  # m
    extent_width: float  # m
    internal_reflection: Optional[InternalReflection] = None

    def __post_init__(self) -> None:
        if not self.thickness > 0:
            raise ValueError(f"material {self.name!r}: thickness must be positive")
        if not self.insertion_loss >= 0:
            raise ValueError(f"material {self.name!r}: insertion_loss must be >= 0")
        if not (self.extent_height > 0 and self.extent_width > 0):
            raise ValueError(f"material {self.name!r}: extents must be positive")


@dataclass(frozen=True)
class SetupGeometry:
    """A single TX/RX placement. Both antennas sit at ``tx_height``."""

    frequency: float
    tr_separation: float
    tx_height: float
    clearance_above_and_sides: float
    tx_antenna: Antenna
    rx_antenna: Antenna
    mut: Optional[MaterialSpec] = None
    pointing_error: Optional[float] = None  # degrees, None when not recorded

    def __post_init__(self) -> None:
        if not self.frequency > 0:
            raise ValueError("frequency must be positive")
        if not self.tr_separation > 0:
            raise ValueError("tr_separation must be positive")
        if not (self.tx_height >= 0 and self.clearance_above_and_sides >= 0):
            raise ValueError("heights must be non-negative")

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.frequency


@dataclass(frozen=True)
class RuleViolation:
    rule_id: RuleId
    observed: float
    required: float
    unit: str
    message: str

    def to_dict(self) -> dict:
        return {
            "rule_id": self.rule_id.value,
            "observed": self.observed,
            "required": self.required,
            "unit": self.unit,
            "message": self.message,
        }


def wavelength(frequency: float) -> float:
    if not frequency > 0:
        raise ValueError("frequency must be positive")
    return SPEED_OF_LIGHT / frequency


def fraunhofer_distance(aperture: float, frequency: float) -> float:
    """Far-field boundary 2 D^2 / lambda in meters."""
    if aperture < 0:
        raise ValueError("aperture must be non-negative")
    return 2.0 * aperture**2 / wavelength(frequency)


def min_tr_separation_xpd(fraunhofer: float) -> float:
    return 5.0 * fraunhofer


def min_tr_separation_penetration(fraunhofer: float) -> float:
    # five far-field lengths on the TX side of the material and five on the RX side
    return 10.0 * fraunhofer


def _half_angle_cot(hpbw_deg: float, strict_halfangle: bool) -> float:
    theta = math.radians(hpbw_deg / 2.0 if strict_halfangle else hpbw_deg)
    return math.cos(theta) / math.sin(theta)


def min_clearance_height(
    tr_separation: float,
    hpbw_tx: float,
    hpbw_rx: float,
    *,
    strict_halfangle: bool = False,
) -> float:
    """Doubled ground/ceiling clearance needed to keep bounces off both main lobes.

    By default each antenna's angle is its full HPBW, which is the convention
    that reproduces the published 1.34 m / 0.61 m heights. With
    ``strict_halfangle`` the angle is HPBW/2 instead. Returns ``inf`` when the
    beams are so wide that no height suffices.
    """
    if not tr_separation > 0:
        raise ValueError("tr_separation must be positive")
    _check_hpbw(hpbw_tx, "hpbw_tx")
    _check_hpbw(hpbw_rx, "hpbw_rx")
    denom = _half_angle_cot(hpbw_tx, strict_halfangle) + _half_angle_cot(
        hpbw_rx, strict_halfangle
    )
    if denom <= 0:
        return math.inf
    return 2.0 * tr_separation / denom


def mut_extent_at(distance: float, hpbw_tx: float, margin_factor: float = 2.0) -> float:
    """Edge-to-edge width of the TX main-lobe footprint at ``distance``, times the margin."""
    if distance < 0:
        raise ValueError("distance must be non-negative")
    if hpbw_tx <= 0:
        return 0.0
    _check_hpbw(hpbw_tx, "hpbw_tx")
    if margin_factor < 1.0:
        raise ValueError("margin_factor must be >= 1")
    return margin_factor * 2.0 * distance * math.tan(math.radians(hpbw_tx) / 2.0)


def min_mut_extent(fraunhofer: float, hpbw_tx: float, margin_factor: float = 2.0) -> float:
    """Minimum MUT height/width with the material five far-field lengths from the TX."""
    if fraunhofer < 0:
        raise ValueError("fraunhofer must be non-negative")
    return mut_extent_at(5.0 * fraunhofer, hpbw_tx, margin_factor)


def fresnel_zone_radius(d1: float, d2: float, wavelength: float, zone_index: int = 1) -> float:
    if d1 < 0 or d2 < 0:
        raise ValueError("d1 and d2 must be non-negative")
    if zone_index < 1:
        raise ValueError("zone_index must be a positive integer")
    if d1 == 0 or d2 == 0:
        return 0.0
    return math.sqrt(zone_index * wavelength * d1 * d2 / (d1 + d2))


def suggest_verification_distances(min_distance: float, count: int = 4) -> list[float]:
    """Distance schedule starting at ``min_distance``.

    Later distances sit 20 to 100 % beyond the first one. Up to five
    distances use +25 % steps; longer schedules are spread evenly over
    [1.2, 2.0] x ``min_distance``.
    """
    if not min_distance > 0:
        raise ValueError("min_distance must be positive")
    if count < 2:
        raise ValueError("count must be at least 2")
    n_extra = count - 1
    if n_extra <= 4:
        factors = [1.0 + 0.25 * k for k in range(1, count)]
    else:
        step = 0.8 / (n_extra - 1)
        factors = [1.2 + step * k for k in range(n_extra)]
    return [min_distance] + [min_distance * f for f in factors]


def _far_field_length(setup: SetupGeometry) -> float:
    return max(
        fraunhofer_distance(setup.tx_antenna.aperture_largest_dim, setup.frequency),
        fraunhofer_distance(setup.rx_antenna.aperture_largest_dim, setup.frequency),
    )


def _clearance_violations(setup: SetupGeometry, strict_halfangle: bool) -> list[RuleViolation]:
    tx, rx = setup.tx_antenna, setup.rx_antenna
    d = setup.tr_separation
    floor_req = min_clearance_height(
        d, tx.hpbw_elevation, rx.hpbw_elevation, strict_halfangle=strict_halfangle
    )
    side_req = max(
        floor_req,
        min_clearance_height(
            d, tx.hpbw_azimuth, rx.hpbw_azimuth, strict_halfangle=strict_halfangle
        ),
    )
    out = []
    if not setup.tx_height > floor_req:
        out.append(
            RuleViolation(
                RuleId.CLEARANCE,
                setup.tx_height,
                floor_req,
                "m",
                f"antenna height {setup.tx_height:.3f} m must exceed {floor_req:.3f} m "
                f"at D_TR = {d:.3f} m to keep the ground bounce outside both HPBWs",
            )
        )
    if not setup.clearance_above_and_sides > side_req:
        out.append(
            RuleViolation(
                RuleId.CLEARANCE,
                setup.clearance_above_and_sides,
                side_req,
                "m",
                f"ceiling/side clearance {setup.clearance_above_and_sides:.3f} m must "
                f"exceed {side_req:.3f} m at D_TR = {d:.3f} m",
            )
        )
    return out


def _boresight_violations(setup: SetupGeometry) -> list[RuleViolation]:
    if setup.pointing_error is None:
        return []
    narrowest = min(
        setup.tx_antenna.hpbw_azimuth,
        setup.tx_antenna.hpbw_elevation,
        setup.rx_antenna.hpbw_azimuth,
        setup.rx_antenna.hpbw_elevation,
    )
    allowed = narrowest * math.sqrt(BORESIGHT_GAIN_TOLERANCE_DB / 12.0)
    if abs(setup.pointing_error) <= allowed:
        return []
    return [
        RuleViolation(
            RuleId.BORESIGHT,
            abs(setup.pointing_error),
            allowed,
            "deg",
            f"pointing error {abs(setup.pointing_error):.2f} deg exceeds {allowed:.2f} deg",
        )
    ]


def validate_xpd_setup(
    setup: SetupGeometry, *, strict_halfangle: bool = False
) -> list[RuleViolation]:
    """Check far-field distance, boresight metadata and bounce clearance.

    Every failed rule is reported; no rule masks another.
    """
    if not isinstance(setup, SetupGeometry):
        raise ValueError(f"expected SetupGeometry, got {type(setup).__name__}")
    violations = []
    required = min_tr_separation_xpd(_far_field_length(setup))
    if setup.tr_separation < required:
        violations.append(
            RuleViolation(
                RuleId.FAR_FIELD,
                setup.tr_separation,
                required,
                "m",
                f"D_TR {setup.tr_separation:.3f} m is below five far-field lengths "
                f"({required:.3f} m)",
            )
        )
    violations.extend(_boresight_violations(setup))
    violations.extend(_clearance_violations(setup, strict_halfangle))
    return violations


def validate_penetration_setup(
    setup: SetupGeometry,
    *,
    strict_halfangle: bool = False,
    margin_factor: float = 2.0,
) -> list[RuleViolation]:
    if not isinstance(setup, SetupGeometry):
        raise ValueError(f"expected SetupGeometry, got {type(setup).__name__}")
    if setup.mut is None:
        raise ValueError("penetration setup requires a material under test")
    mut = setup.mut
    violations = []
    required = min_tr_separation_penetration(_far_field_length(setup))
    if setup.tr_separation < required:
        violations.append(
            RuleViolation(
                RuleId.MUT_DISTANCE,
                setup.tr_separation,
                required,
                "m",
                f"D_TR {setup.tr_separation:.3f} m is below ten far-field lengths "
                f"({required:.3f} m)",
            )
        )
    to_mut = setup.tr_separation / 2.0
    for label, extent, hpbw in (
        ("height", mut.extent_height, setup.tx_antenna.hpbw_elevation),
        ("width", mut.extent_width, setup.tx_antenna.hpbw_azimuth),
    ):
        needed = mut_extent_at(to_mut, hpbw, margin_factor)
        if extent < needed:
            violations.append(
                RuleViolation(
                    RuleId.MUT_EXTENT,
                    extent,
                    needed,
                    "m",
                    f"MUT {label} {extent:.3f} m is smaller than {needed:.3f} m "
                    f"(TX footprint at {to_mut:.3f} m x {margin_factor:g})",
                )
            )
    violations.extend(_boresight_violations(setup))
    violations.extend(_clearance_violations(setup, strict_halfangle))
    return violations
