"""XPD and penetration-loss estimation from measurement records, plus the
distance-consistency statistics used to accept or reject a campaign."""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

from .geometry import RuleId, RuleViolation
from .kernels import get_backend
from .records import MeasurementRecord, PowerDelayProfile, mw_to_dbm

DEFAULT_DETECTION_MARGIN_DB = 20.0
DEFAULT_SPREAD_DB = 1.0
DEFAULT_STD_DB = 1.1

# Pulse main lobe spans two bins (null to null).
PULSE_WIDTH_BINS = 2


class NoSignalError(ValueError):
    """No PDP bin rises above the detection threshold."""


def first_arriving_component_power(
    pdp: PowerDelayProfile,
    detection_margin: float = DEFAULT_DETECTION_MARGIN_DB,
    *,
    backend: Optional[str] = None,
) -> float:
    """Power in dBm of the first resolvable component of ``pdp``.

    The earliest bin above ``noise_floor + detection_margin`` is moved to the
    local maximum within one pulse width, and the linear power within one
    pulse width on either side of that maximum is summed with the nominal
    noise floor removed from every bin.
    """
    threshold = 10.0 ** ((pdp.noise_floor + detection_margin) / 10.0)
    bins = np.ascontiguousarray(pdp.bins_mw)
    start, peak, power_mw = get_backend(backend).first_path(bins, threshold, PULSE_WIDTH_BINS)
    if start < 0:
        raise NoSignalError(
            f"no bin exceeds noise floor {pdp.noise_floor:.1f} dBm + {detection_margin:.1f} dB"
        )
    n_window = min(peak + PULSE_WIDTH_BINS, bins.size - 1) - max(peak - PULSE_WIDTH_BINS, 0) + 1
    floor_mw = 10.0 ** (pdp.noise_floor / 10.0)
    # the peak bin alone clears the threshold, so the corrected sum stays positive
    return float(mw_to_dbm(power_mw - n_window * floor_mw))


def first_path_window(pdp: PowerDelayProfile, detection_margin: float = DEFAULT_DETECTION_MARGIN_DB):
    """Delay interval (ns) integrated by :func:`first_arriving_component_power`."""
    threshold = 10.0 ** ((pdp.noise_floor + detection_margin) / 10.0)
    start, peak, _ = get_backend().first_path(
        np.ascontiguousarray(pdp.bins_mw), threshold, PULSE_WIDTH_BINS
    )
    if start < 0:
        raise NoSignalError("no signal above detection threshold")
    lo = max(peak - PULSE_WIDTH_BINS, 0)
    hi = min(peak + PULSE_WIDTH_BINS, pdp.bins.size - 1)
    return pdp.delays[lo], pdp.delays[hi]


def check_multipath_margin(
    pdp: PowerDelayProfile,
    margin: float = DEFAULT_DETECTION_MARGIN_DB,
    detection_margin: float = DEFAULT_DETECTION_MARGIN_DB,
) -> list[RuleViolation]:
    """Flag later components that are not at least ``margin`` dB below the first path.

    Such components are resolvable and can be removed in post-processing, so
    the result is advisory.
    """
    threshold = 10.0 ** ((pdp.noise_floor + detection_margin) / 10.0)
    bins = np.ascontiguousarray(pdp.bins_mw)
    start, peak, _ = get_backend().first_path(bins, threshold, PULSE_WIDTH_BINS)
    if start < 0:
        return []
    limit = pdp.bins[peak] - margin
    tail = pdp.bins[peak + PULSE_WIDTH_BINS + 1 :]
    if tail.size == 0:
        return []
    worst = float(tail.max())
    if worst <= limit:
        return []
    idx = peak + PULSE_WIDTH_BINS + 1 + int(tail.argmax())
    return [
        RuleViolation(
            RuleId.MULTIPATH_MARGIN,
            float(pdp.bins[peak] - worst),
            margin,
            "dB",
            f"component at {pdp.delays[idx]:.2f} ns is only "
            f"{pdp.bins[peak] - worst:.1f} dB below the first path",
        )
    ]


def link_loss(record: MeasurementRecord) -> float:
    """P_t - P_r + G_TX + G_RX, with or without a MUT in the path."""
    return (
        record.transmit_power
        - record.received_power_first_path
        + record.gain_tx
        + record.gain_rx
    )


def path_loss(record: MeasurementRecord) -> float:
    """Free-space path loss with antenna gains removed (co- or cross-polarized)."""
    if record.mut_present:
        raise ValueError("path_loss expects a free-space record; use link_loss for MUT records")
    return link_loss(record)


def xpd(pl_cross: float, pl_co: float) -> float:
    return pl_cross - pl_co


@dataclass(frozen=True)
class ConsistencyReport:
    per_distance_values: dict[float, float]
    mean: float
    std_dev: float
    spread: float
    pass_: bool
    threshold_spread: float
    threshold_std: float

    @property
    def passed(self) -> bool:
        return self.pass_

    def to_dict(self) -> dict:
        return {
            "per_distance_values": [
                {"distance_m": d, "value_db": v} for d, v in sorted(self.per_distance_values.items())
            ],
            "mean": self.mean,
            "std_dev": self.std_dev,
            "spread": self.spread,
            "pass": self.pass_,
            "threshold_spread": self.threshold_spread,
            "threshold_std": self.threshold_std,
        }


def consistency(
    values: Mapping[float, float],
    threshold_spread: float = DEFAULT_SPREAD_DB,
    threshold_std: float = DEFAULT_STD_DB,
) -> ConsistencyReport:
    """Mean, sample standard deviation and spread of per-distance estimates."""
    if len(values) < 2:
        raise ValueError("consistency needs values at two or more distances")
    data = [float(v) for v in values.values()]
    mean = statistics.fmean(data)
    std = statistics.stdev(data)
    spread = max(data) - min(data)
    return ConsistencyReport(
        per_distance_values={float(d): float(v) for d, v in values.items()},
        mean=mean,
        std_dev=std,
        spread=spread,
        pass_=spread <= threshold_spread and std <= threshold_std,
        threshold_spread=threshold_spread,
        threshold_std=threshold_std,
    )


def cross_combination_check(means: Sequence[float], tolerance: float = 1.0) -> bool:
    """True when the mean XPDs of different antenna combinations agree within ``tolerance``."""
    if len(means) < 1:
        raise ValueError("need at least one mean")
    return max(means) - min(means) <= tolerance


@dataclass(frozen=True)
class PenetrationResult:
    loss: float
    normalized_loss: float
    polarization_pair: str
    distance: float

    def to_dict(self) -> dict:
        return {
            "loss_db": self.loss,
            "normalized_loss_db_per_cm": self.normalized_loss,
            "polarization_pair": self.polarization_pair,
            "distance_m": self.distance,
        }


def _check_mut_record(record: MeasurementRecord, baseline_distance: Optional[float]) -> None:
    if not record.mut_present:
        raise ValueError("penetration loss needs a record with the MUT in place")
    if baseline_distance is not None and not math.isclose(
        baseline_distance, record.distance, rel_tol=1e-9, abs_tol=1e-9
    ):
        raise ValueError(
            f"baseline measured at {baseline_distance} m but MUT record at {record.distance} m"
        )


def penetration_loss_copol(
    mut_record: MeasurementRecord,
    baseline_pl: float,
    *,
    baseline_distance: Optional[float] = None,
) -> PenetrationResult:
    _check_mut_record(mut_record, baseline_distance)
    if not mut_record.co_polarized:
        raise ValueError("co-polarized penetration loss needs a co-polarized record")
    loss = link_loss(mut_record) - baseline_pl
    return PenetrationResult(
        loss, loss / mut_record.mut_thickness, mut_record.pol_pair, mut_record.distance
    )


def penetration_loss_crosspol(
    mut_record: MeasurementRecord,
    baseline_pl_copol: float,
    xpd: float,
    *,
    baseline_distance: Optional[float] = None,
    literal: bool = False,
    baseline_pl_cross: Optional[float] = None,
) -> PenetrationResult:
    """Cross-polarized penetration loss.

    By default the cross-polarized free-space reference is the co-polarized
    path loss plus ``xpd``. With ``literal`` the measured cross-polarized path
    loss is used and ``xpd`` is subtracted on top of it.
    """
    _check_mut_record(mut_record, baseline_distance)
    if mut_record.co_polarized:
        raise ValueError("cross-polarized penetration loss needs a cross-polarized record")
    if literal:
        reference = baseline_pl_cross if baseline_pl_cross is not None else baseline_pl_copol + xpd
        loss = link_loss(mut_record) - reference - xpd
    else:
        loss = link_loss(mut_record) - baseline_pl_copol - xpd
    return PenetrationResult(
        loss, loss / mut_record.mut_thickness, mut_record.pol_pair, mut_record.distance
    )
