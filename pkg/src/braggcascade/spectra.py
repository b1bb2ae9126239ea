from __future__ import annotations
import csv
import dataclasses
import json
from pathlib import Path
from typing import Any, Optional, Sequence, Union
import numpy as np
from .typing import NDArray, WavelengthLike
from .tools import (
    InvalidInput,
    NoNotchFound,
    NotchTooShallow,
    SpectrumFormatError,
    WindowOutOfRange,
)

CSV_HEADER = ["wavelength_nm", "transmission_linear", "transmission_db"]

DEFAULT_OFFBAND = (30.0, 40.0)
"""Distance range (nm) from the notch center used as off-band reference."""

FLAT_THRESHOLD_DB = 0.1
"""Spectra whose level varies less than this are considered flat."""

_TINY = np.finfo(np.float64).tiny
_TOLERANCE = 1e-9


def _as_grid(wavelengths: WavelengthLike) -> NDArray:
    x = np.asarray(wavelengths, dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise InvalidInput("Wavelength grid must be a non-empty vector")
    if np.any(np.diff(x) <= 0):
        raise InvalidInput("Wavelength grid must be strictly increasing")
    return x


def _power(values, name: str, size: int) -> NDArray:
    p = np.asarray(values, dtype=np.float64)
    if p.shape != (size,):
        raise InvalidInput(f"{name} has shape {p.shape}, expected ({size},)")
    if np.any(~np.isfinite(p)) or np.any(p < -_TOLERANCE) or np.any(p > 1 + _TOLERANCE):
        raise InvalidInput(f"{name} must lie within [0, 1]")
    return np.clip(p, 0.0, 1.0)


@dataclasses.dataclass(frozen=True, eq=False)
class Spectrum:
    """Sampled power transmission of a filter.

    Parameters
    ----------
    wavelengths : NDArray
        Strictly increasing wavelengths (nm).
    transmission : NDArray
        Power transmission in [0, 1] at each wavelength.
    reflection : Optional[NDArray]
        Power reflected at the input, when known.
    metadata : dict
        Composition law, realization id and a hash of the simulated cascade.
    """

    wavelengths: NDArray
    transmission: NDArray
    reflection: Optional[NDArray] = None
    metadata: dict[str, Any] = dataclasses.field(default_factory=dict)

    def __post_init__(self):
        x = _as_grid(self.wavelengths)
        object.__setattr__(self, "wavelengths", x)
        object.__setattr__(
            self, "transmission", _power(self.transmission, "transmission", x.size)
        )
        if self.reflection is not None:
            object.__setattr__(
                self, "reflection", _power(self.reflection, "reflection", x.size)
            )

    def __len__(self) -> int:
        return self.wavelengths.size

    @property
    def transmission_db(self) -> NDArray:
        return 10 * np.log10(np.maximum(self.transmission, _TINY))

    def levels_db(self) -> NDArray:
        """Level used by the metric extractors (dB)."""
        return self.transmission_db


@dataclasses.dataclass(frozen=True, eq=False)
class MeasuredSpectrum:
    """Detector reading of a spectrum, in dBm, clipped at the detector floor."""

    wavelengths: NDArray
    power_dbm: NDArray
    detector_floor: float
    metadata: dict[str, Any] = dataclasses.field(default_factory=dict)

    def __post_init__(self):
        x = _as_grid(self.wavelengths)
        object.__setattr__(self, "wavelengths", x)
        p = np.asarray(self.power_dbm, dtype=np.float64)
        if p.shape != x.shape:
            raise InvalidInput("Power and wavelength arrays differ in shape")
        object.__setattr__(self, "power_dbm", p)

    def __len__(self) -> int:
        return self.wavelengths.size

    def levels_db(self) -> NDArray:
        return self.power_dbm


@dataclasses.dataclass(frozen=True)
class MeasurementChain:
    """Source, fiber-chip coupling and detector of a transmission measurement.

    Parameters
    ----------
    source_power : float, default = 10.0
        Laser output power (dBm).
    coupling_loss : float, default = 0.0
        Loss of each of the two fiber-chip couplers (dB).
    detector_floor : float, default = -90.0
        Noise floor of the detector (dBm).
    """

    source_power: float = 10.0
    coupling_loss: float = 0.0
    detector_floor: float = -90.0

    def __post_init__(self):
        if not self.detector_floor < self.source_power:
            raise InvalidInput("Detector floor must lie below the source power")
        if self.coupling_loss < 0:
            raise InvalidInput("Coupling loss must be non-negative")

    @property
    def reference_dbm(self) -> float:
        """Received power for a lossless device."""
        return self.source_power - 2 * self.coupling_loss


CT400 = MeasurementChain(detector_floor=-75.0)
"""Swept-laser component tester with a floor of about -75 dBm."""

OSA = MeasurementChain(detector_floor=-90.0)
"""Optical spectrum analyzer with a floor around -90 dBm."""


def apply_measurement_chain(
    spectrum: Union[Spectrum, MeasuredSpectrum], chain: MeasurementChain
) -> MeasuredSpectrum:
    """Convert a transmission spectrum into the clipped detector reading.

    A spectrum that is already a detector reading is only clipped again, so
    that applying the same chain twice equals applying it once.
    """
    if isinstance(spectrum, MeasuredSpectrum):
        floor = max(spectrum.detector_floor, chain.detector_floor)
        power = np.maximum(spectrum.power_dbm, floor)
    else:
        floor = chain.detector_floor
        power = np.maximum(chain.reference_dbm + spectrum.transmission_db, floor)
    return MeasuredSpectrum(
        spectrum.wavelengths, power, floor, dict(spectrum.metadata)
    )


def reflected_power_dbm(
    reflection: NDArray, chain: MeasurementChain
) -> NDArray:
    """Reading at a circulator port for the given reflected power fraction."""
    level = 10 * np.log10(np.maximum(np.asarray(reflection), _TINY))
    return np.maximum(chain.reference_dbm + level, chain.detector_floor)


@dataclasses.dataclass(frozen=True)
class RejectionReport:
    """Rejection of a notch, with the levels it derives from (dB or dBm)."""

    rejection_db: float
    clipped: bool
    offband_level: float
    minimum_level: float
    center_nm: float


def _offband_mask(
    wavelengths: NDArray,
    center: float,
    offband_window: Union[None, tuple[float, float], Sequence[tuple[float, float]]],
) -> NDArray:
    if offband_window is None:
        distance = np.abs(wavelengths - center)
        mask = (distance >= DEFAULT_OFFBAND[0]) & (distance <= DEFAULT_OFFBAND[1])
        if not np.any(mask):
            farthest = np.max(distance)
            mask = (distance >= 0.75 * farthest) & (distance > 0)
    else:
        windows = offband_window
        if len(windows) == 2 and np.isscalar(windows[0]):
            windows = [windows]  # type: ignore
        mask = np.zeros(wavelengths.shape, dtype=bool)
        for lo, hi in windows:  # type: ignore
            mask |= (wavelengths >= lo) & (wavelengths <= hi)
    if not np.any(mask):
        raise WindowOutOfRange(
            f"Off-band window {offband_window} does not overlap the grid "
            f"[{wavelengths[0]}, {wavelengths[-1]}] nm"
        )
    return mask


def _reference_level(spectrum, levels, center, offband_window, reference_db) -> float:
    if reference_db is not None:
        return float(reference_db)
    mask = _offband_mask(spectrum.wavelengths, center, offband_window)
    return float(np.median(levels[mask]))


def extract_rejection_db(
    spectrum: Union[Spectrum, MeasuredSpectrum],
    offband_window=None,
    reference_db: Optional[float] = None,
) -> RejectionReport:
    """Rejection of the deepest notch of `spectrum`.

    The rejection is the median level over the off-band window minus the
    minimum level of the spectrum.

    Parameters
    ----------
    spectrum : Spectrum | MeasuredSpectrum
        True transmission or detector reading.
    offband_window : tuple[float, float] | list[tuple[float, float]], optional
        Wavelength ranges (nm) for the off-band reference. Defaults to the
        points 30 to 40 nm away from the notch, or to the outer quarter of
        the grid when it is narrower than that.
    reference_db : float, optional
        Known off-band level, replacing the median.

    Returns
    -------
    RejectionReport
        The rejection and a flag telling whether the minimum sits on the
        detector floor.

    Raises
    ------
    InvalidInput
        If the minimum of a spectrum that is not flat lies on the first or
        last wavelength, so that the notch is not resolved by the grid.
    """
    levels = spectrum.levels_db()
    i = int(np.argmin(levels))
    if (i == 0 or i == levels.size - 1) and np.ptp(levels) >= FLAT_THRESHOLD_DB:
        raise InvalidInput(
            f"Minimum transmission at the grid edge {spectrum.wavelengths[i]} nm; "
            "widen the grid around the notch"
        )
    center = float(spectrum.wavelengths[i])
    offband = _reference_level(spectrum, levels, center, offband_window, reference_db)
    minimum = float(levels[i])
    clipped = isinstance(spectrum, MeasuredSpectrum) and bool(
        minimum <= spectrum.detector_floor + _TOLERANCE
    )
    return RejectionReport(offband - minimum, clipped, offband, minimum, center)


def _crossing(x: NDArray, y: NDArray, i: int, j: int, level: float) -> float:
    return x[i] + (level - y[i]) * (x[j] - x[i]) / (y[j] - y[i])


def _vertex(x: NDArray, y: NDArray, i: int) -> float:
    """Abscissa of the parabola through points i-1, i, i+1."""
    if i <= 0 or i >= x.size - 1:
        return float(x[i])
    x0, x1, x2 = x[i - 1 : i + 2]
    y0, y1, y2 = y[i - 1 : i + 2]
    denominator = (x1 - x0) * (y1 - y2) - (x1 - x2) * (y1 - y0)
    if denominator == 0:
        return float(x1)
    numerator = (x1 - x0) ** 2 * (y1 - y2) - (x1 - x2) ** 2 * (y1 - y0)
    return float(x1 - 0.5 * numerator / denominator)


def _floor_end(levels: NDArray, start: int) -> int:
    """Last index of the run of levels equal to ``levels[start]``."""
    (above,) = np.nonzero(levels[start:] != levels[start])
    return start + int(above[0]) - 1 if above.size else levels.size - 1


def _flanking_maximum(levels: NDArray, start: int, direction: int) -> int:
    # Equal neighbours, as on a clipped floor or a flat top, do not end the climb.
    side = levels[start::-1] if direction < 0 else levels[start:]
    steps = np.diff(side)
    (rising,) = np.nonzero(steps > 0)
    if rising.size == 0:
        raise NotchTooShallow("The notch has no flanking maximum within the grid")
    (falling,) = np.nonzero(steps[rising[0] :] < 0)
    if falling.size == 0:
        return start + direction * int(np.argmax(side))
    stop = int(rising[0] + falling[0])
    while side[stop - 1] == side[stop]:
        stop -= 1
    return start + direction * stop


def extract_bandwidth_nm(
    spectrum: Union[Spectrum, MeasuredSpectrum],
    criterion: str = "3dB",
    offband_window=None,
    reference_db: Optional[float] = None,
) -> float:
    """Width of the deepest notch.

    Parameters
    ----------
    spectrum : Spectrum | MeasuredSpectrum
        Spectrum to analyze.
    criterion : str, default = "3dB"
        ``"3dB"`` measures the distance between the crossings of the level
        3 dB below the off-band reference that flank the minimum, linearly
        interpolated between grid points. ``"null-to-null"`` measures the
        distance between the transmission maxima flanking the notch, refined
        by parabolic interpolation.
    offband_window, reference_db :
        Off-band reference, as in :func:`extract_rejection_db`.
    """
    x = spectrum.wavelengths
    levels = spectrum.levels_db()
    i = int(np.argmin(levels))
    if criterion == "3dB":
        offband = _reference_level(
            spectrum, levels, float(x[i]), offband_window, reference_db
        )
        threshold = offband - 3.0
        if not levels[i] < threshold:
            raise NotchTooShallow(
                f"Notch depth {offband - levels[i]:.3g} dB is below 3 dB"
            )
        (left,) = np.nonzero(levels[:i] >= threshold)
        (right,) = np.nonzero(levels[i:] >= threshold)
        if left.size == 0 or right.size == 0:
            raise NotchTooShallow("The 3 dB crossings lie outside the grid")
        l, r = int(left[-1]), i + int(right[0])
        return _crossing(x, levels, r - 1, r, threshold) - _crossing(
            x, levels, l, l + 1, threshold
        )
    elif criterion == "null-to-null":
        if np.max(levels) - levels[i] < FLAT_THRESHOLD_DB:
            raise NotchTooShallow("Spectrum is flat")
        l = _flanking_maximum(levels, i, -1)
        r = _flanking_maximum(levels, i, +1)
        return _vertex(x, levels, r) - _vertex(x, levels, l)
    raise InvalidInput(f"Unknown bandwidth criterion {criterion!r}")


def extract_center_nm(spectrum: Union[Spectrum, MeasuredSpectrum]) -> float:
    """Wavelength of minimum transmission, refined by a parabola over the
    three nearest grid points, or the middle of a flat minimum such as a
    clipped detector floor."""
    levels = spectrum.levels_db()
    if np.max(levels) - np.min(levels) < FLAT_THRESHOLD_DB:
        raise NoNotchFound("Spectrum is flat within 0.1 dB")
    x = spectrum.wavelengths
    i = int(np.argmin(levels))
    j = _floor_end(levels, i)
    if j > i:
        return float(0.5 * (x[i] + x[j]))
    return _vertex(x, levels, i)


def spectrum_metrics(
    spectrum: Union[Spectrum, MeasuredSpectrum],
    offband_window=None,
    reference_db: Optional[float] = None,
) -> dict[str, Any]:
    """Collect every metric of `spectrum` in a JSON-ready dictionary.

    Metrics that are undefined for this spectrum (a flat spectrum has no
    center) are reported as None.
    """
    report = extract_rejection_db(spectrum, offband_window, reference_db)
    output: dict[str, Any] = {
        "rejection_db": report.rejection_db,
        "clipped": report.clipped,
        "offband_level": report.offband_level,
        "minimum_level": report.minimum_level,
    }
    try:
        output["center_nm"] = extract_center_nm(spectrum)
    except NoNotchFound:
        output["center_nm"] = None
    for key, criterion in (
        ("bandwidth_3db_nm", "3dB"),
        ("bandwidth_null_nm", "null-to-null"),
    ):
        try:
            output[key] = extract_bandwidth_nm(
                spectrum, criterion, offband_window, reference_db
            )
        except NotchTooShallow:
            output[key] = None
    return output


def _format(x: float) -> str:
    return "%.17g" % x


def write_spectrum_csv(spectrum: Spectrum, path: Union[str, Path]) -> Path:
    """Write `spectrum` as CSV plus a JSON sidecar with its metadata.

    Numbers are written with 17 significant digits, so that reading the file
    back recovers the same floating-point values.
    """
    path = Path(path)
    with open(path, "w", newline="") as file:
        writer = csv.writer(file, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for w, t, d in zip(
            spectrum.wavelengths, spectrum.transmission, spectrum.transmission_db
        ):
            writer.writerow([_format(w), _format(t), _format(d)])
    sidecar = {
        "format": "braggcascade-spectrum",
        "version": 1,
        "points": len(spectrum),
        "metadata": spectrum.metadata,
    }
    with open(path.with_suffix(".json"), "w") as file:
        json.dump(sidecar, file, indent=2, sort_keys=True)
        file.write("\n")
    return path


def read_spectrum_csv(path: Union[str, Path]) -> Spectrum:
    """Read a spectrum written by :func:`write_spectrum_csv` or by an
    external tool using the same three columns.

    Raises
    ------
    SpectrumFormatError
        With the number of the first malformed line.
    """
    path = Path(path)
    wavelengths: list[float] = []
    transmission: list[float] = []
    with open(path, newline="") as file:
        reader = csv.reader(file)
        for row in reader:
            line = reader.line_num
            if line == 1:
                if [c.strip() for c in row] != CSV_HEADER:
                    raise SpectrumFormatError(line, f"unexpected header {row}")
                continue
            if not row:
                continue
            if len(row) != len(CSV_HEADER):
                raise SpectrumFormatError(line, f"expected 3 columns, got {len(row)}")
            try:
                w, t = float(row[0]), float(row[1])
            except ValueError:
                raise SpectrumFormatError(line, f"not a number in {row}")
            if not (0 <= t <= 1):
                raise SpectrumFormatError(line, f"transmission {t} outside [0, 1]")
            if wavelengths and not w > wavelengths[-1]:
                raise SpectrumFormatError(line, "wavelengths are not increasing")
            wavelengths.append(w)
            transmission.append(t)
    if not wavelengths:
        raise SpectrumFormatError(1, "file contains no data")
    metadata: dict[str, Any] = {}
    sidecar = path.with_suffix(".json")
    if sidecar.exists():
        with open(sidecar) as file:
            metadata = json.load(file).get("metadata", {})
    return Spectrum(np.array(wavelengths), np.array(transmission), metadata=metadata)


__all__ = [
    "Spectrum",
    "MeasuredSpectrum",
    "MeasurementChain",
    "CT400",
    "OSA",
    "RejectionReport",
    "apply_measurement_chain",
    "reflected_power_dbm",
    "extract_rejection_db",
    "extract_bandwidth_nm",
    "extract_center_nm",
    "spectrum_metrics",
    "write_spectrum_csv",
    "read_spectrum_csv",
]
