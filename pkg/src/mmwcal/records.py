"""Power delay profiles, measurement records and their text formats."""

from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .geometry import Polarization

PDP_HEADER = ("delay_ns", "power_dbm")
RECORD_HEADER = (
    "distance_m",
    "tx_pol",
    "rx_pol",
    "pt_dbm",
    "pr_dbm",
    "gtx_dbi",
    "grx_dbi",
    "mut_present",
    "mut_thickness_cm",
)


class RecordFormatError(ValueError):
    """Raised when a record or PDP file does not follow its column layout."""


def dbm_to_mw(dbm):
    return np.power(10.0, np.asarray(dbm, dtype=np.float64) / 10.0)


def mw_to_dbm(mw):
    return 10.0 * np.log10(mw)


@dataclass(frozen=True, eq=False)
class PowerDelayProfile:
    bin_width: float  # ns
    bins: np.ndarray  # dBm per bin
    noise_floor: float  # dBm
    first_bin_delay: float = 0.0  # ns

    def __post_init__(self) -> None:
        bins = np.asarray(self.bins, dtype=np.float64)
        if not self.bin_width > 0:
            raise ValueError("bin_width must be positive")
        if bins.ndim != 1 or not np.all(np.isfinite(bins)):
            raise ValueError("bins must be a finite 1-D sequence")
        bins.setflags(write=False)
        object.__setattr__(self, "bins", bins)

    @property
    def delays(self) -> np.ndarray:
        return self.first_bin_delay + self.bin_width * np.arange(self.bins.size)

    @property
    def bins_mw(self) -> np.ndarray:
        return dbm_to_mw(self.bins)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(",".join(PDP_HEADER) + "\n")
        for t, p in zip(self.delays, self.bins):
            buf.write(f"{t:.6f},{p:.6f}\n")
        return buf.getvalue()


def write_pdp(pdp: PowerDelayProfile, path: str | os.PathLike) -> None:
    _atomic_write(Path(path), pdp.to_csv())


def read_pdp(path: str | os.PathLike, noise_floor: Optional[float] = None) -> PowerDelayProfile:
    """Load a ``delay_ns,power_dbm`` file.

    The file carries no noise floor, so unless one is given it is estimated
    as the median bin power.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != PDP_HEADER:
            raise RecordFormatError(f"{path}: expected header {','.join(PDP_HEADER)}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                rows.append((float(row[0]), float(row[1])))
            except (ValueError, IndexError) as exc:
                raise RecordFormatError(f"{path}:{lineno}: {exc}") from None
    if len(rows) < 2:
        raise RecordFormatError(f"{path}: need at least two bins")
    delays = np.array([r[0] for r in rows])
    power = np.array([r[1] for r in rows])
    steps = np.diff(delays)
    if np.any(steps <= 0) or not np.allclose(steps, steps[0], rtol=1e-4, atol=1e-6):
        raise RecordFormatError(f"{path}: delays must be evenly spaced and increasing")
    floor = float(np.median(power)) if noise_floor is None else noise_floor
    return PowerDelayProfile(float(steps.mean()), power, floor, float(delays[0]))


@dataclass(frozen=True)
class MeasurementRecord:
    distance: float
    tx_pol: Polarization
    rx_pol: Polarization
    transmit_power: float
    received_power_first_path: float
    gain_tx: float
    gain_rx: float
    mut_present: bool = False
    mut_thickness: Optional[float] = None
    pdp: Optional[PowerDelayProfile] = field(default=None, compare=False, repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "tx_pol", Polarization(self.tx_pol))
        object.__setattr__(self, "rx_pol", Polarization(self.rx_pol))
        if not self.distance > 0:
            raise ValueError("distance must be positive")
        for name in ("transmit_power", "received_power_first_path", "gain_tx", "gain_rx"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.mut_present and not (self.mut_thickness and self.mut_thickness > 0):
            raise ValueError("mut_thickness must be positive when a MUT is present")

    @property
    def co_polarized(self) -> bool:
        return self.tx_pol == self.rx_pol

    @property
    def pol_pair(self) -> str:
        return f"{self.tx_pol.value}-{self.rx_pol.value}"


def _fmt(x: float) -> str:
    return f"{x:.6f}"


def records_to_csv(records: Iterable[MeasurementRecord]) -> str:
    buf = io.StringIO()
    buf.write(",".join(RECORD_HEADER) + "\n")
    for r in records:
        buf.write(
            ",".join(
                [
                    _fmt(r.distance),
                    r.tx_pol.value,
                    r.rx_pol.value,
                    _fmt(r.transmit_power),
                    _fmt(r.received_power_first_path),
                    _fmt(r.gain_tx),
                    _fmt(r.gain_rx),
                    "true" if r.mut_present else "false",
                    _fmt(r.mut_thickness) if r.mut_present else "",
                ]
            )
            + "\n"
        )
    return buf.getvalue()


def write_records(records: Iterable[MeasurementRecord], path: str | os.PathLike) -> None:
    _atomic_write(Path(path), records_to_csv(records))


def _parse_bool(text: str) -> bool:
    value = text.strip().lower()
    if value == "true":
        return True
    if value == "false":
        return False
    raise ValueError(f"expected true/false, got {text!r}")


def read_records(path: str | os.PathLike) -> list[MeasurementRecord]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != RECORD_HEADER:
            raise RecordFormatError(f"{path}: expected header {','.join(RECORD_HEADER)}")
        out = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(RECORD_HEADER):
                raise RecordFormatError(
                    f"{path}:{lineno}: expected {len(RECORD_HEADER)} columns, got {len(row)}"
                )
            try:
                mut = _parse_bool(row[7])
                thickness = float(row[8]) if row[8].strip() else None
                out.append(
                    MeasurementRecord(
                        distance=float(row[0]),
                        tx_pol=Polarization(row[1].strip()),
                        rx_pol=Polarization(row[2].strip()),
                        transmit_power=float(row[3]),
                        received_power_first_path=float(row[4]),
                        gain_tx=float(row[5]),
                        gain_rx=float(row[6]),
                        mut_present=mut,
                        mut_thickness=thickness if mut else None,
                    )
                )
            except ValueError as exc:
                raise RecordFormatError(f"{path}:{lineno}: {exc}") from None
    return out


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)
