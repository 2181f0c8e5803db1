"""Synthetic sounder data: image-method rays, band-limited PDPs and
complete measurement records.

Ray amplitudes are in dB relative to the transmit power and already include
spreading loss, antenna pattern gains and any reflection or MUT loss.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from . import analysis
from .geometry import SPEED_OF_LIGHT, Antenna, Polarization, SetupGeometry, wavelength
from .kernels import get_backend
from .records import MeasurementRecord, PowerDelayProfile, dbm_to_mw, mw_to_dbm

SIDE_LOBE_FLOOR_DB = 30.0
DEFAULT_BIN_WIDTH_NS = 2.0  # 500 Mcps sliding correlator
PULSE_SPAN_BINS = 1  # main lobe plus first side lobe each side; fits inside the first-path window
LEAD_BINS = 16  # bins recorded before the first arrival
MIN_BINS = 64
NOISE_JITTER_DB = 3.0


class PathKind(str, Enum):
    DIRECT = "DIRECT"
    GROUND_BOUNCE = "GROUND_BOUNCE"
    CEILING_BOUNCE = "CEILING_BOUNCE"
    MUT_INTERNAL = "MUT_INTERNAL"


@dataclass(frozen=True)
class Ray:
    path_kind: PathKind
    path_length: float  # m
    delay: float  # ns
    departure_angle_off_boresight: float  # deg
    arrival_angle_off_boresight: float  # deg
    amplitude: float  # dB re transmit power

    @property
    def is_reflected(self) -> bool:
        return self.path_kind in (PathKind.GROUND_BOUNCE, PathKind.CEILING_BOUNCE)


@dataclass(frozen=True)
class Environment:
    """Measurement room.

    ``ceiling_height`` is measured from the ground; ``None`` means no ceiling.
    ``reflection_xpd`` is the polarization purity (dB) a bounce leaves behind:
    a reflected ray reaching a cross-polarized receiver carries that much
    depolarized power on top of the antenna leakage.
    """

    ground_reflection: float = 3.0
    ceiling_height: Optional[float] = None
    ceiling_reflection: float = 3.0
    wall_clearance: Optional[float] = None
    noise_floor: float = -100.0
    rng_seed: int = 0
    reflection_xpd: float = 15.0

    def __post_init__(self) -> None:
        if self.ground_reflection < 0 or self.ceiling_reflection < 0:
            raise ValueError("reflection losses must be non-negative")
        if self.reflection_xpd < 0:
            raise ValueError("reflection_xpd must be non-negative")
        if self.ceiling_height is not None and self.ceiling_height <= 0:
            raise ValueError("ceiling_height must be positive")


def antenna_gain_at(antenna: Antenna, off_boresight: float, plane: str = "elevation") -> float:
    """Gaussian main-lobe gain in dBi, floored 30 dB below the peak."""
    if not 0.0 <= off_boresight <= 180.0:
        raise ValueError("off_boresight must lie in [0, 180] degrees")
    if plane == "elevation":
        hpbw = antenna.hpbw_elevation
    elif plane == "azimuth":
        hpbw = antenna.hpbw_azimuth
    else:
        raise ValueError(f"unknown plane {plane!r}")
    rolloff = min(12.0 * (off_boresight / hpbw) ** 2, SIDE_LOBE_FLOOR_DB)
    return antenna.gain - rolloff


def friis_free_space_path_loss(distance: float, frequency: float) -> float:
    if not distance > 0:
        raise ValueError("distance must be positive")
    return 20.0 * math.log10(4.0 * math.pi * distance / wavelength(frequency))


def _ray(kind: PathKind, length: float, angle: float, setup: SetupGeometry, extra_loss: float) -> Ray:
    amplitude = (
        -friis_free_space_path_loss(length, setup.frequency)
        + antenna_gain_at(setup.tx_antenna, angle)
        + antenna_gain_at(setup.rx_antenna, angle)
        - extra_loss
    )
    return Ray(kind, length, length / SPEED_OF_LIGHT * 1e9, angle, angle, amplitude)


def _bounce(kind: PathKind, setup: SetupGeometry, offset: float, loss: float) -> Ray:
    # mirror image sits 2 * offset away vertically; both antennas see the same elevation angle
    d = setup.tr_separation
    rise = 2.0 * offset
    angle = math.degrees(math.atan2(rise, d))
    return _ray(kind, math.hypot(d, rise), angle, setup, loss)


def trace_rays(
    setup: SetupGeometry, env: Environment, transmit_power: float = 0.0
) -> list[Ray]:
    """Direct path plus ground and ceiling image rays, sorted by delay.

    Reflected rays arriving more than 10 dB under the noise floor are dropped.
    """
    rays = [_ray(PathKind.DIRECT, setup.tr_separation, 0.0, setup, 0.0)]
    candidates = [_bounce(PathKind.GROUND_BOUNCE, setup, setup.tx_height, env.ground_reflection)]
    if env.ceiling_height is not None and env.ceiling_height > setup.tx_height:
        candidates.append(
            _bounce(
                PathKind.CEILING_BOUNCE,
                setup,
                env.ceiling_height - setup.tx_height,
                env.ceiling_reflection,
            )
        )
    cutoff = env.noise_floor - 10.0
    rays.extend(r for r in candidates if transmit_power + r.amplitude >= cutoff)
    rays.sort(key=lambda r: r.delay)
    return rays


def cross_polarize(rays: Sequence[Ray], xpd_leakage: float, reflection_xpd: float) -> list[Ray]:
    """Ray set seen by an orthogonally polarized receiver.

    Unreflected rays lose exactly ``xpd_leakage``. Reflected rays also pick up
    depolarized power ``reflection_xpd`` below their co-polar level.
    """
    leak = 10.0 ** (-xpd_leakage / 10.0)
    bounce_leak = 10.0 * math.log10(leak + 10.0 ** (-reflection_xpd / 10.0))
    out = []
    for r in rays:
        drop = -bounce_leak if r.is_reflected else xpd_leakage
        out.append(
            Ray(
                r.path_kind,
                r.path_length,
                r.delay,
                r.departure_angle_off_boresight,
                r.arrival_angle_off_boresight,
                r.amplitude - drop,
            )
        )
    return out


def insert_material(rays: Sequence[Ray], setup: SetupGeometry) -> list[Ray]:
    """Attenuate the direct ray by the MUT and add its internal echo if configured."""
    mut = setup.mut
    if mut is None:
        return list(rays)
    out = []
    for r in rays:
        if r.path_kind is not PathKind.DIRECT:
            out.append(r)
            continue
        direct = Ray(
            r.path_kind,
            r.path_length,
            r.delay,
            r.departure_angle_off_boresight,
            r.arrival_angle_off_boresight,
            r.amplitude - mut.insertion_loss,
        )
        out.append(direct)
        if mut.internal_reflection is not None:
            ir = mut.internal_reflection
            extra = 2.0 * (mut.thickness / 100.0) * math.sqrt(ir.relative_permittivity)
            out.append(
                Ray(
                    PathKind.MUT_INTERNAL,
                    r.path_length + extra,
                    r.delay + extra / SPEED_OF_LIGHT * 1e9,
                    r.departure_angle_off_boresight,
                    r.arrival_angle_off_boresight,
                    direct.amplitude - 2.0 * ir.interface_reflection,
                )
            )
    out.sort(key=lambda r: r.delay)
    return out


def synthesize_pdp(
    rays: Sequence[Ray],
    bin_width: float = DEFAULT_BIN_WIDTH_NS,
    env: Optional[Environment] = None,
    transmit_power: float = 0.0,
    *,
    noise: bool = True,
    backend: Optional[str] = None,
) -> PowerDelayProfile:
    """Render rays onto a delay grid.

    The grid is aligned so the earliest ray falls exactly on a bin. Each ray
    deposits its power through a normalized sinc^2 pulse whose main lobe is
    two bins wide; powers add in milliwatts. The noise floor is always added;
    with ``noise`` it is jittered by up to +/-3 dB per bin from the
    environment's seed.
    """
    if not bin_width > 0:
        raise ValueError("bin_width must be positive")
    env = env or Environment()
    if rays:
        delays = np.array([r.delay for r in rays])
        first = float(delays.min()) - LEAD_BINS * bin_width
        offsets = (delays - first) / bin_width
        n_bins = max(MIN_BINS, int(math.ceil(offsets.max())) + PULSE_SPAN_BINS + 2)
        powers = dbm_to_mw(transmit_power + np.array([r.amplitude for r in rays]))
        signal = get_backend(backend).deposit_pulses(
            np.ascontiguousarray(offsets), np.ascontiguousarray(powers), n_bins, PULSE_SPAN_BINS
        )
    else:
        first = 0.0
        n_bins = MIN_BINS
        signal = np.zeros(n_bins)
    floor_mw = 10.0 ** (env.noise_floor / 10.0)
    if noise:
        rng = np.random.default_rng(env.rng_seed)
        jitter = rng.uniform(-NOISE_JITTER_DB, NOISE_JITTER_DB, n_bins)
        noise_mw = floor_mw * 10.0 ** (jitter / 10.0)
    else:
        noise_mw = np.full(n_bins, floor_mw)
    return PowerDelayProfile(bin_width, mw_to_dbm(signal + noise_mw), env.noise_floor, first)


def measurement_rays(
    setup: SetupGeometry,
    env: Environment,
    tx_pol: Polarization,
    rx_pol: Polarization,
    transmit_power: float = 0.0,
) -> list[Ray]:
    rays = insert_material(trace_rays(setup, env, transmit_power), setup)
    if Polarization(tx_pol) != Polarization(rx_pol):
        rays = cross_polarize(rays, setup.tx_antenna.xpd_leakage, env.reflection_xpd)
    return rays


def simulate_measurement(
    setup: SetupGeometry,
    env: Environment,
    tx_pol: Polarization,
    rx_pol: Polarization,
    transmit_power: float = 0.0,
    *,
    bin_width: float = DEFAULT_BIN_WIDTH_NS,
    noise: bool = True,
    detection_margin: float = analysis.DEFAULT_DETECTION_MARGIN_DB,
) -> MeasurementRecord:
    """One sounder capture, reduced to its first-arriving-component power."""
    rays = measurement_rays(setup, env, tx_pol, rx_pol, transmit_power)
    pdp = synthesize_pdp(rays, bin_width, env, transmit_power, noise=noise)
    return MeasurementRecord(
        distance=setup.tr_separation,
        tx_pol=Polarization(tx_pol),
        rx_pol=Polarization(rx_pol),
        transmit_power=transmit_power,
        received_power_first_path=analysis.first_arriving_component_power(pdp, detection_margin),
        gain_tx=setup.tx_antenna.gain,
        gain_rx=setup.rx_antenna.gain,
        mut_present=setup.mut is not None,
        mut_thickness=setup.mut.thickness if setup.mut is not None else None,
        pdp=pdp,
    )
