from __future__ import annotations
import dataclasses
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable, Optional, Sequence
import numpy as np
from scipy.signal import lfilter  # type: ignore
from .typing import NDArray, Perturbation, WavelengthLike
from .tools import CalibrationFailed, InvalidInput, NoNotchFound, NotchTooShallow, make_logger
from .modes import DispersionModel, WaveguideGeometry, dneff_dwidth
from .cmt import GratingSpec
from .tmm import DEFAULT_LINK_LENGTH, CascadeSpec, cascade_spectrum
from .spectra import (
    MeasurementChain,
    Spectrum,
    apply_measurement_chain,
    extract_bandwidth_nm,
    extract_center_nm,
    extract_rejection_db,
)

DEFAULT_INDEX_SENSITIVITY = 7.5e-4
"""Change of the TE0 + TE1 index sum per nm of width of a 1150 nm strip."""

DEFAULT_FORWARD_SCATTERING = 1e-9
"""Forward scattering out of the guided mode per nm of guide and per nm² of
local width error (1/nm³)."""

PERCENTILES = (5, 25, 75, 95)

SATURATION_MODES = ("single-section", "incoherent-fixed-section")

_BIAS_STREAM = 0
_SECTION_STREAM = 1
_LINK_STREAM = 2


@dataclasses.dataclass(frozen=True)
class NoiseModel:
    """Statistics of the fabrication width errors.

    The local width deviation along each section is a stationary Gaussian
    first-order autoregressive process. On top of it, every chip realization
    (trial) gets one common width offset shared by all its sections. The
    local deviation also scatters guided light forward, out of the grating
    mode, at a rate proportional to its square; the common offset does not.

    Parameters
    ----------
    sigma_width : float, default = 0.0
        Standard deviation of the local width deviation (nm).
    correlation_length : float, default = 10000.0
        Correlation length of the local deviation (nm); may be infinite.
    wafer_bias_sigma : float, default = 0.0
        Standard deviation of the chip-wide width offset (nm).
    seed : int, default = 0
        Root seed of all random streams.
    index_sensitivity : float, default = DEFAULT_INDEX_SENSITIVITY
        Change of the index sum of the coupled modes per nm of width (1/nm).
    forward_scattering : float, default = DEFAULT_FORWARD_SCATTERING
        Scattering rate per nm² of local width deviation (1/nm³); zero
        leaves only the phase errors.
    """

    sigma_width: float = 0.0
    correlation_length: float = 10_000.0
    wafer_bias_sigma: float = 0.0
    seed: int = 0
    index_sensitivity: float = DEFAULT_INDEX_SENSITIVITY
    forward_scattering: float = DEFAULT_FORWARD_SCATTERING

    def __post_init__(self):
        if not self.sigma_width >= 0:
            raise InvalidInput(f"sigma_width must be non-negative: {self.sigma_width}")
        if not self.correlation_length > 0:
            raise InvalidInput(
                f"correlation_length must be positive: {self.correlation_length}"
            )
        if not self.wafer_bias_sigma >= 0:
            raise InvalidInput(
                f"wafer_bias_sigma must be non-negative: {self.wafer_bias_sigma}"
            )
        if int(self.seed) != self.seed or not 0 <= self.seed < 2**64:
            raise InvalidInput(f"seed must be a 64-bit unsigned integer: {self.seed}")
        if not np.isfinite(self.index_sensitivity):
            raise InvalidInput("index_sensitivity must be finite")
        if not 0 <= self.forward_scattering < np.inf:
            raise InvalidInput(
                f"forward_scattering must be finite and non-negative: "
                f"{self.forward_scattering}"
            )

    @property
    def noiseless(self) -> bool:
        return self.sigma_width == 0 and self.wafer_bias_sigma == 0

    def replace(self, **kwdargs) -> NoiseModel:
        return dataclasses.replace(self, **kwdargs)

    @classmethod
    def for_geometry(
        cls,
        geometry: WaveguideGeometry,
        spec: GratingSpec,
        wavelength: float = 1550.0,
        **kwdargs,
    ) -> NoiseModel:
        """Model whose index sensitivity is derived from the cross-section."""
        geometry = geometry.with_width(spec.avg_width)
        sensitivity = sum(dneff_dwidth(geometry, wavelength, m) for m in spec.modes)
        return cls(index_sensitivity=float(sensitivity), **kwdargs)


def _generator(model: NoiseModel, *keys: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(model.seed), *keys]))


def ar1_process(
    count: int,
    step: float,
    sigma: float,
    correlation_length: float,
    rng: np.random.Generator,
) -> NDArray:
    """Stationary Gaussian AR(1) samples at spacing `step`.

    The correlation between neighbours is ``exp(-step / correlation_length)``
    and every sample has standard deviation `sigma`.
    """
    eps = rng.standard_normal(count)
    rho = math.exp(-step / correlation_length)
    drive = sigma * math.sqrt(1 - rho * rho) * eps
    drive[0] = sigma * eps[0]
    return lfilter([1.0], [1.0, -rho], drive)


def wafer_bias(model: NoiseModel, trial_index: int) -> float:
    """Chip-wide width offset (nm) of trial `trial_index`."""
    rng = _generator(model, int(trial_index), _BIAS_STREAM)
    return model.wafer_bias_sigma * float(rng.standard_normal())


def sample_width(
    model: NoiseModel,
    spec: GratingSpec,
    trial_index: int,
    section_index: int = 0,
) -> NDArray:
    """Local width deviation (nm) of each segment of one section.

    Deterministic in ``(model.seed, trial_index, section_index)`` and free of
    the wafer offset.
    """
    if model.sigma_width == 0:
        return np.zeros(spec.segment_count)
    rng = _generator(model, int(trial_index), _SECTION_STREAM, int(section_index))
    return ar1_process(
        spec.segment_count,
        spec.segment_length,
        model.sigma_width,
        model.correlation_length,
        rng,
    )


def sample_realization(
    model: NoiseModel,
    spec: GratingSpec,
    trial_index: int,
    section_index: int = 0,
) -> Perturbation:
    """Index-sum perturbation of each segment of one section.

    Deterministic in ``(model.seed, trial_index, section_index)``; the wafer
    offset depends only on the trial and is shared by all sections.
    """
    if model.noiseless:
        return np.zeros(spec.segment_count)
    width = sample_width(model, spec, trial_index, section_index)
    return model.index_sensitivity * (width + wafer_bias(model, trial_index))


def sample_cascade(
    model: NoiseModel, cascade: CascadeSpec, trial_index: int
) -> list[Perturbation]:
    """Perturbations of every section of `cascade` in one trial."""
    return [
        sample_realization(model, section, trial_index, i)
        for i, section in enumerate(cascade.sections)
    ]


def sample_scattering(
    model: NoiseModel, cascade: CascadeSpec, trial_index: int
) -> Optional[list[NDArray]]:
    """Forward scattering rate (1/nm) of every segment of every section.

    The rate of a segment is ``forward_scattering * w²`` for its local width
    deviation ``w``, the same one entering :func:`sample_realization`. None
    when the model does not scatter.
    """
    if model.sigma_width == 0 or model.forward_scattering == 0:
        return None
    return [
        model.forward_scattering * sample_width(model, section, trial_index, i) ** 2
        for i, section in enumerate(cascade.sections)
    ]


def sample_link_offsets(
    model: NoiseModel, cascade: CascadeSpec, trial_index: int
) -> NDArray:
    """Effective-index offset of each link in one trial.

    Each link sees an independent width error of standard deviation
    `sigma_width` plus the wafer offset, converted with half the index-sum
    sensitivity since a link guides a single mode.
    """
    links = len(cascade.link_lengths)
    if model.noiseless or links == 0:
        return np.zeros(links)
    rng = _generator(model, int(trial_index), _LINK_STREAM)
    width = model.sigma_width * rng.standard_normal(links)
    return 0.5 * model.index_sensitivity * (width + wafer_bias(model, trial_index))


@dataclasses.dataclass(frozen=True)
class TrialRecord:
    """Metrics of one Monte Carlo trial.

    `true_rejection_db` is the rejection of the simulated transmission when a
    measurement chain is applied, and equals `rejection_db` otherwise.
    """

    trial_index: int
    rejection_db: float
    bandwidth_nm: float
    center_nm: float
    clipped: bool
    true_rejection_db: float


def _json_float(x: float) -> Optional[float]:
    return None if not np.isfinite(x) else float(x)


@dataclasses.dataclass(frozen=True)
class EnsembleStats:
    """Aggregated rejection and bandwidth statistics of a Monte Carlo ensemble.

    Parameters
    ----------
    trials : int
        Number of trials.
    median_rejection : float
        Median rejection (dB).
    percentiles : tuple[float, float, float, float]
        5th, 25th, 75th and 95th percentiles of the rejection (dB).
    median_bandwidth : float
        Median 3 dB bandwidth (nm), NaN when no trial has a 3 dB notch.
    records : tuple[TrialRecord, ...]
        Per-trial metrics sorted by trial index.
    spectra : tuple[Spectrum, ...]
        Spectra of the trials, when requested.
    """

    trials: int
    median_rejection: float
    percentiles: tuple[float, float, float, float]
    median_bandwidth: float
    records: tuple[TrialRecord, ...]
    spectra: tuple[Spectrum, ...] = ()

    @classmethod
    def from_records(
        cls, records: Sequence[TrialRecord], spectra: Sequence[Spectrum] = ()
    ) -> EnsembleStats:
        records = tuple(sorted(records, key=lambda r: r.trial_index))
        if not records:
            raise InvalidInput("An ensemble needs at least one trial")
        rejection = np.array([r.rejection_db for r in records])
        bandwidth = np.array([r.bandwidth_nm for r in records])
        finite = bandwidth[np.isfinite(bandwidth)]
        return cls(
            trials=len(records),
            median_rejection=float(np.median(rejection)),
            percentiles=tuple(float(p) for p in np.percentile(rejection, PERCENTILES)),  # type: ignore
            median_bandwidth=float(np.median(finite)) if finite.size else math.nan,
            records=records,
            spectra=tuple(spectra),
        )

    @property
    def rejections(self) -> NDArray:
        return np.array([r.rejection_db for r in self.records])

    def to_document(self) -> dict[str, Any]:
        """JSON-ready summary, with undefined values as None."""
        return {
            "trials": self.trials,
            "median_rejection_db": self.median_rejection,
            "percentiles_db": dict(
                (f"p{p}", v) for p, v in zip(PERCENTILES, self.percentiles)
            ),
            "median_bandwidth_nm": _json_float(self.median_bandwidth),
            "records": [
                {
                    "trial_index": r.trial_index,
                    "rejection_db": r.rejection_db,
                    "bandwidth_nm": _json_float(r.bandwidth_nm),
                    "center_nm": _json_float(r.center_nm),
                    "clipped": r.clipped,
                    "true_rejection_db": r.true_rejection_db,
                }
                for r in self.records
            ],
        }


def _run_trial(
    cascade: CascadeSpec,
    model: NoiseModel,
    trial_index: int,
    grid: NDArray,
    dispersion: DispersionModel,
    chain: Optional[MeasurementChain],
    offband_window: Any,
    reference_db: Optional[float],
) -> tuple[TrialRecord, Spectrum]:
    realization = None if model.noiseless else sample_cascade(model, cascade, trial_index)
    offsets = (
        sample_link_offsets(model, cascade, trial_index)
        if cascade.composition == "coherent"
        else None
    )
    spectrum = cascade_spectrum(
        cascade,
        grid,
        dispersion,
        realization,
        offsets,
        realization_id=trial_index,
        scattering_rates=sample_scattering(model, cascade, trial_index),
    )
    true_report = extract_rejection_db(spectrum, offband_window, reference_db)
    target = spectrum if chain is None else apply_measurement_chain(spectrum, chain)
    report = (
        true_report
        if chain is None
        else extract_rejection_db(target, offband_window, reference_db)
    )
    try:
        bandwidth = extract_bandwidth_nm(target, "3dB", offband_window, reference_db)
    except NotchTooShallow:
        bandwidth = math.nan
    try:
        center = extract_center_nm(target)
    except NoNotchFound:
        center = math.nan
    record = TrialRecord(
        trial_index,
        report.rejection_db,
        bandwidth,
        center,
        report.clipped,
        true_report.rejection_db,
    )
    return record, spectrum


def monte_carlo(
    cascade: CascadeSpec,
    model: NoiseModel,
    trials: int,
    grid: WavelengthLike,
    dispersion: DispersionModel,
    chain: Optional[MeasurementChain] = None,
    offband_window: Any = None,
    reference_db: Optional[float] = None,
    workers: int = 1,
    keep_spectra: bool = False,
) -> EnsembleStats:
    """Rejection and bandwidth statistics over independent fabrication trials.

    Trial ``k`` uses the realization ``sample_cascade(model, cascade, k)``, so
    the statistics are identical for any number of `workers`.

    Parameters
    ----------
    cascade : CascadeSpec
        Cascade to simulate.
    model : NoiseModel
        Fabrication noise.
    trials : int
        Number of trials, at least one.
    grid : ArrayLike
        Wavelengths (nm).
    dispersion : DispersionModel
        Effective indices of the grating modes.
    chain : MeasurementChain, optional
        When given, metrics are extracted from the detector reading.
    offband_window, reference_db :
        Off-band reference of the metrics; see
        :func:`braggcascade.spectra.extract_rejection_db`.
    workers : int, default = 1
        Number of threads evaluating trials.
    keep_spectra : bool, default = False
        Store the spectrum of every trial in the result.

    Returns
    -------
    EnsembleStats
        Statistics and per-trial records.
    """
    if int(trials) != trials or trials < 1:
        raise InvalidInput(f"trials must be a positive integer: {trials}")
    if workers < 1:
        raise InvalidInput(f"workers must be positive: {workers}")
    x = np.asarray(grid, dtype=np.float64)

    def run(k: int) -> tuple[TrialRecord, Spectrum]:
        return _run_trial(
            cascade, model, k, x, dispersion, chain, offband_window, reference_db
        )

    with make_logger() as logger:
        logger(
            f"monte_carlo: {trials} trials of {len(cascade.sections)} "
            f"{cascade.composition} sections, σ={model.sigma_width} nm"
        )
        if model.noiseless:
            record, spectrum = run(0)
            results = [
                (dataclasses.replace(record, trial_index=k), spectrum)
                for k in range(trials)
            ]
        elif workers == 1:
            results = [run(k) for k in range(trials)]
        else:
            with ThreadPoolExecutor(max_workers=workers) as executor:
                results = list(executor.map(run, range(trials)))
        stats = EnsembleStats.from_records(
            [r for r, _ in results], [s for _, s in results] if keep_spectra else ()
        )
        logger(
            f"monte_carlo: median {stats.median_rejection:.3f} dB, "
            f"p5-p95 {stats.percentiles[0]:.3f}-{stats.percentiles[3]:.3f} dB"
        )
    return stats


def _saturation_cascade(
    length: float,
    mode: str,
    section: GratingSpec,
    section_length: float,
    link_length: float,
) -> CascadeSpec:
    if mode == "single-section":
        return CascadeSpec((section.replace(length=length),))
    count = math.ceil(length / section_length - 1e-9)
    return CascadeSpec.uniform(
        section.replace(length=section_length), count, link_length, "incoherent"
    )


def saturation_curve(
    lengths: Sequence[float],
    model: NoiseModel,
    trials: int,
    mode: str,
    section: GratingSpec,
    grid: WavelengthLike,
    dispersion: DispersionModel,
    section_length: float = 50_000.0,
    link_length: float = DEFAULT_LINK_LENGTH,
    **kwdargs,
) -> list[tuple[float, float]]:
    """Median rejection as a function of total grating length.

    In ``"single-section"`` mode each length is one grating. In
    ``"incoherent-fixed-section"`` mode a length is covered by
    ``ceil(length / section_length)`` sections of `section_length` composed
    incoherently. Extra keyword arguments are passed to :func:`monte_carlo`.
    """
    if mode not in SATURATION_MODES:
        raise InvalidInput(f"Unknown saturation mode {mode!r}")
    values = [float(L) for L in lengths]
    if not values or any(b <= a for a, b in zip(values, values[1:])):
        raise InvalidInput("Lengths must be a non-empty ascending sequence")
    curve = []
    with make_logger() as logger:
        for length in values:
            cascade = _saturation_cascade(
                length, mode, section, section_length, link_length
            )
            stats = monte_carlo(cascade, model, trials, grid, dispersion, **kwdargs)
            logger(f"saturation_curve: L={length} nm, median {stats.median_rejection:.3f} dB")
            curve.append((length, stats.median_rejection))
    return curve


def _bisect_sigma(
    median: Callable[[float], float],
    target: float,
    sigma_start: float,
    tolerance: float,
    max_doublings: int,
    max_iterations: int,
) -> tuple[float, float]:
    # Doubles until the rejection drops below target, then bisects.
    lo, hi = 0.0, sigma_start
    value = median(hi)
    doublings = 0
    while value > target:
        doublings += 1
        if doublings > max_doublings:
            raise CalibrationFailed(f"Rejection stays above {target} dB up to σ={hi} nm")
        lo, hi = hi, 2 * hi
        value = median(hi)
    with make_logger(2) as logger:
        for iteration in range(max_iterations):
            sigma = 0.5 * (lo + hi)
            value = median(sigma)
            logger(f"calibrate_sigma: iteration {iteration}, σ={sigma:.6g} nm, {value:.3f} dB")
            if abs(value - target) <= tolerance:
                return sigma, value
            if value > target:
                lo = sigma
            else:
                hi = sigma
    raise CalibrationFailed(
        f"Calibration stopped after {max_iterations} iterations at "
        f"{value:.3f} dB for target {target} dB"
    )


def calibrate_sigma(
    target_plateau_db: float,
    plateau_onset: float,
    spec: GratingSpec,
    trials: int,
    grid: WavelengthLike,
    dispersion: DispersionModel,
    model: Optional[NoiseModel] = None,
    length_factors: Sequence[float] = (1.0, 4 / 3, 5 / 3),
    tolerance: float = 0.5,
    plateau_tolerance: float = 2.0,
    plateau_spread: float = 3.0,
    sigma_start: float = 1.0,
    max_doublings: int = 20,
    max_iterations: int = 40,
    **kwdargs,
) -> NoiseModel:
    """Width noise that makes single-section rejection saturate at a target.

    The median rejection of a single section of length `plateau_onset` is
    driven to `target_plateau_db` by bisection on `sigma_width`. The medians
    at every length ``plateau_onset * length_factors`` must then stay within
    `plateau_tolerance` of the target and within `plateau_spread` of each
    other; the rejection of a noisy grating only stops growing with length
    when forward scattering is enabled in the model.

    Parameters
    ----------
    target_plateau_db : float
        Saturated rejection to reproduce (dB).
    plateau_onset : float
        Grating length where saturation starts (nm).
    spec : GratingSpec
        Section whose length is varied.
    trials : int
        Monte Carlo trials per evaluation.
    grid : ArrayLike
        Wavelengths (nm).
    dispersion : DispersionModel
        Effective indices of the grating modes.
    model : NoiseModel, optional
        Model providing every other noise parameter.
    length_factors : Sequence[float], default = (1, 4/3, 5/3)
        Lengths where the plateau is checked, relative to the onset; all
        at least one.
    tolerance : float, default = 0.5
        Accepted deviation of the onset median from the target (dB).
    plateau_tolerance : float, default = 2.0
        Accepted deviation of every checked median from the target (dB).
    plateau_spread : float, default = 3.0
        Accepted difference between the checked medians (dB).

    Returns
    -------
    NoiseModel
        `model` with the calibrated `sigma_width`.

    Raises
    ------
    CalibrationFailed
        If the noiseless rejection is below the target, no noise level
        brings the rejection below it, the bisection does not converge or
        the rejection keeps changing with length beyond the onset.
    """
    if model is None:
        model = NoiseModel()
    if not plateau_onset >= spec.period:
        raise InvalidInput(f"Plateau onset too short: {plateau_onset}")
    factors = sorted({1.0, *(float(f) for f in length_factors)})
    if factors[0] < 1:
        raise InvalidInput(f"Length factors must be at least one: {length_factors}")
    onset = CascadeSpec((spec.replace(length=plateau_onset),))

    def median(sigma: float, cascade: CascadeSpec = onset) -> float:
        stats = monte_carlo(
            cascade, model.replace(sigma_width=sigma), trials, grid, dispersion, **kwdargs
        )
        return stats.median_rejection

    with make_logger() as logger:
        noiseless = median(0.0)
        logger(f"calibrate_sigma: noiseless rejection {noiseless:.3f} dB")
        if noiseless < target_plateau_db - tolerance:
            raise CalibrationFailed(
                f"Target {target_plateau_db} dB exceeds the noiseless rejection "
                f"{noiseless:.3f} dB at {plateau_onset} nm"
            )
        sigma, value = 0.0, noiseless
        if abs(noiseless - target_plateau_db) > tolerance:
            sigma, value = _bisect_sigma(
                median, target_plateau_db, sigma_start, tolerance, max_doublings, max_iterations
            )
        logger(f"calibrate_sigma: σ={sigma:.6g} nm gives {value:.3f} dB")
        medians = [value]
        for factor in factors[1:]:
            length = plateau_onset * factor
            check = median(sigma, CascadeSpec((spec.replace(length=length),)))
            logger(f"calibrate_sigma: L={length} nm gives {check:.3f} dB")
            if abs(check - target_plateau_db) > plateau_tolerance:
                raise CalibrationFailed(
                    f"Median rejection {check:.2f} dB at {length} nm departs from "
                    f"the {target_plateau_db} dB plateau by more than "
                    f"{plateau_tolerance} dB at σ={sigma:.6g} nm"
                )
            medians.append(check)
        if max(medians) - min(medians) > plateau_spread:
            raise CalibrationFailed(
                f"Median rejections {medians} spread by more than {plateau_spread} dB"
            )
    return model.replace(sigma_width=sigma)


def compare_compositions(
    section: GratingSpec,
    count: int,
    model: NoiseModel,
    trials: int,
    grid: WavelengthLike,
    dispersion: DispersionModel,
    link_length: float = DEFAULT_LINK_LENGTH,
    **kwdargs,
) -> tuple[EnsembleStats, EnsembleStats]:
    """Ensembles of the same sections composed coherently and incoherently.

    Both ensembles use the same grating realizations, since these depend
    only on the seed, the trial and the section index.
    """
    coherent = CascadeSpec.uniform(section, count, link_length, "coherent")
    incoherent = CascadeSpec.uniform(section, count, link_length, "incoherent")
    return (
        monte_carlo(coherent, model, trials, grid, dispersion, **kwdargs),
        monte_carlo(incoherent, model, trials, grid, dispersion, **kwdargs),
    )


__all__ = [
    "DEFAULT_INDEX_SENSITIVITY",
    "DEFAULT_FORWARD_SCATTERING",
    "SATURATION_MODES",
    "NoiseModel",
    "ar1_process",
    "wafer_bias",
    "sample_width",
    "sample_realization",
    "sample_cascade",
    "sample_scattering",
    "sample_link_offsets",
    "TrialRecord",
    "EnsembleStats",
    "monte_carlo",
    "saturation_curve",
    "calibrate_sigma",
    "compare_compositions",
]
