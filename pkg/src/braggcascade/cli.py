"""Command-line front end: ``braggcascade {modes,simulate,montecarlo,design,analyze}``.

Every command reads one JSON configuration (see :class:`RunConfig`), writes
its outputs and the effective configuration to the output directory, and
prints a JSON report on standard output. Exit status is 0 on success, 2 for
invalid input, 3 for infeasible targets or failed calibration and 4 for I/O
errors.
"""

from __future__ import annotations
import argparse
import csv
import dataclasses
import json
import math
import typing
from pathlib import Path
from typing import Any, Callable, Optional, Sequence, Union
import numpy as np
import h5py  # type: ignore
from . import tools
from .typing import NDArray
from .tools import (
    BraggError,
    CalibrationFailed,
    ConfigError,
    InfeasibleTarget,
    InvalidInput,
    NoGuidedMode,
    NoResonanceInWindow,
    SpectrumFormatError,
    make_logger,
)
from .modes import (
    ConstantDispersion,
    DispersionModel,
    GeometryDispersion,
    TableDispersion,
    WaveguideGeometry,
    dneff_dwidth,
    effective_index_2d,
    group_index,
)
from .cmt import (
    MODE_PAIRS,
    GratingSpec,
    bragg_wavelength,
    estimate_kappa,
    mean_group_index,
)
from .tmm import DEFAULT_LINK_LENGTH, CascadeSpec, cascade_spectrum
from .fabnoise import (
    DEFAULT_FORWARD_SCATTERING,
    DEFAULT_INDEX_SENSITIVITY,
    NoiseModel,
    calibrate_sigma,
    monte_carlo,
    sample_cascade,
    sample_link_offsets,
    sample_scattering,
)
from .spectra import (
    CT400,
    OSA,
    MeasurementChain,
    Spectrum,
    apply_measurement_chain,
    read_spectrum_csv,
    reflected_power_dbm,
    spectrum_metrics,
    write_spectrum_csv,
)
from .design import DesignTarget, solve_count, solve_section
from .hdf5 import write_ensemble

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_INFEASIBLE = 3
EXIT_IO = 4

CHAINS = {"ct400": CT400, "osa": OSA}

SCAN_SAMPLES = 51
"""Samples of the phase-matching scan when dispersion is solved from geometry."""


@dataclasses.dataclass(frozen=True)
class DispersionConfig:
    """Source of the effective indices.

    ``kind`` is ``"geometry"`` (solve the cross-section), ``"constant"``
    (one index per mode in `indices`) or ``"table"`` (`table` holds one row
    of indices per mode, sampled at `wavelengths`). `samples` is the number
    of solver points used to tabulate geometry dispersion over the grid.
    """

    kind: str = "geometry"
    indices: tuple[float, ...] = ()
    wavelengths: tuple[float, ...] = ()
    table: tuple[tuple[float, ...], ...] = ()
    samples: int = 41

    def __post_init__(self):
        if self.kind not in ("geometry", "constant", "table"):
            raise InvalidInput(f"Unknown dispersion kind {self.kind!r}")
        if self.kind == "constant" and not self.indices:
            raise InvalidInput("Constant dispersion needs indices")
        if self.kind == "table" and not (self.wavelengths and self.table):
            raise InvalidInput("Table dispersion needs wavelengths and table")
        if self.samples < 4:
            raise InvalidInput(f"At least four tabulation samples needed: {self.samples}")


@dataclasses.dataclass(frozen=True)
class CascadeConfig:
    """Number of sections and links; `section_length` overrides the grating
    length and a missing `link_index` is solved from the link geometry."""

    sections: int = 10
    section_length: Optional[float] = None
    link_length: float = DEFAULT_LINK_LENGTH
    composition: str = "incoherent"
    link_phases: Optional[tuple[float, ...]] = None
    link_index: Optional[float] = None
    link_loss_db: float = 0.0
    te1_leakage: float = 0.0

    def __post_init__(self):
        if self.sections < 1:
            raise InvalidInput(f"sections must be positive: {self.sections}")


@dataclasses.dataclass(frozen=True)
class NoiseConfig:
    sigma_width: float = 0.0
    correlation_length: float = 10_000.0
    wafer_bias_sigma: float = 0.0
    index_sensitivity: float = DEFAULT_INDEX_SENSITIVITY
    forward_scattering: float = DEFAULT_FORWARD_SCATTERING


@dataclasses.dataclass(frozen=True)
class MeasurementConfig:
    """Detector model; ``chain`` is ``"none"``, ``"ct400"``, ``"osa"`` or
    ``"custom"``. A missing `detector_floor` takes the preset floor."""

    chain: str = "none"
    source_power: float = 10.0
    coupling_loss: float = 0.0
    detector_floor: Optional[float] = None

    def __post_init__(self):
        if self.chain not in ("none", "custom", *CHAINS):
            raise InvalidInput(f"Unknown measurement chain {self.chain!r}")
        if self.chain == "custom" and self.detector_floor is None:
            raise InvalidInput("A custom chain needs a detector_floor")
        self.build()

    def build(self) -> Optional[MeasurementChain]:
        if self.chain == "none":
            return None
        floor = self.detector_floor
        if floor is None:
            floor = CHAINS[self.chain].detector_floor
        return MeasurementChain(self.source_power, self.coupling_loss, floor)


@dataclasses.dataclass(frozen=True)
class GridConfig:
    """Wavelength grid ``center ± span`` with spacing `step` (nm).

    Without `center` the grid is centered on the resonance of the grating.
    `offband_window` and `reference_db` set the off-band reference of the
    rejection metrics.
    """

    center: Optional[float] = None
    span: float = 40.0
    step: float = 0.01
    offband_window: Optional[tuple[tuple[float, float], ...]] = None
    reference_db: Optional[float] = None

    def __post_init__(self):
        if not self.span > 0 or not self.step > 0 or self.step > self.span:
            raise InvalidInput(f"Invalid grid span {self.span} and step {self.step}")

    def wavelengths(self, center: float) -> NDArray:
        n = int(round(self.span / self.step))
        return center + self.step * np.arange(-n, n + 1)


@dataclasses.dataclass(frozen=True)
class CalibrationConfig:
    """Noise calibration, run before simulating when `target_db` is set."""

    target_db: Optional[float] = None
    onset: float = 300_000.0
    trials: int = 50
    tolerance: float = 0.5
    length_factors: tuple[float, ...] = (1.0, 4 / 3, 5 / 3)
    plateau_tolerance: float = 2.0


@dataclasses.dataclass(frozen=True)
class TargetConfig:
    min_rejection: float = 80.0
    bandwidth: float = 3.0
    tolerance: float = 0.05
    center: float = 1550.0
    max_total_length: Optional[float] = None
    max_section_length: float = 250_000.0
    kappa_min: float = 0.0
    kappa_max: float = 2e-4
    cap: int = 32
    margin: int = 1

    def design_target(self) -> DesignTarget:
        return DesignTarget(
            self.min_rejection,
            self.bandwidth,
            self.tolerance,
            self.center,
            self.max_total_length,
        )


@dataclasses.dataclass(frozen=True)
class RunConfig:
    """Complete parameter set of a command.

    The defaults describe a 220 nm silicon strip on buried oxide with air
    cladding, a 290 nm period grating of 50 % duty cycle on a 1150 nm strip
    with 50 nm corrugation, and 400 nm wide, 20 µm long links.
    """

    geometry: WaveguideGeometry = dataclasses.field(default_factory=WaveguideGeometry)
    link_geometry: WaveguideGeometry = dataclasses.field(
        default_factory=lambda: WaveguideGeometry(core_width=400.0)
    )
    dispersion: DispersionConfig = dataclasses.field(default_factory=DispersionConfig)
    grating: GratingSpec = dataclasses.field(default_factory=GratingSpec)
    cascade: CascadeConfig = dataclasses.field(default_factory=CascadeConfig)
    noise: NoiseConfig = dataclasses.field(default_factory=NoiseConfig)
    measurement: MeasurementConfig = dataclasses.field(default_factory=MeasurementConfig)
    grid: GridConfig = dataclasses.field(default_factory=GridConfig)
    calibration: CalibrationConfig = dataclasses.field(default_factory=CalibrationConfig)
    target: TargetConfig = dataclasses.field(default_factory=TargetConfig)
    trials: int = 200
    seed: int = 0
    workers: int = 1
    output_dir: str = "."

    def __post_init__(self):
        if self.trials < 1:
            raise InvalidInput(f"trials must be positive: {self.trials}")
        if not 0 <= self.seed < 2**64:
            raise InvalidInput(f"seed must be a 64-bit unsigned integer: {self.seed}")
        if self.workers < 1:
            raise InvalidInput(f"workers must be positive: {self.workers}")

    def replace(self, **kwdargs) -> RunConfig:
        return dataclasses.replace(self, **kwdargs)

    def noise_model(self) -> NoiseModel:
        return NoiseModel(
            sigma_width=self.noise.sigma_width,
            correlation_length=self.noise.correlation_length,
            wafer_bias_sigma=self.noise.wafer_bias_sigma,
            seed=self.seed,
            index_sensitivity=self.noise.index_sensitivity,
            forward_scattering=self.noise.forward_scattering,
        )


INFINITIES = {"Infinity": math.inf, "-Infinity": -math.inf}
"""Strings standing for infinite numbers in strict JSON documents."""


def _join(path: str, key: Union[str, int]) -> str:
    if isinstance(key, int):
        return f"{path}[{key}]"
    return f"{path}.{key}" if path else key


def _convert(value: Any, hint: Any, path: str) -> Any:
    if dataclasses.is_dataclass(hint):
        return _build(hint, value, path)
    origin, args = typing.get_origin(hint), typing.get_args(hint)
    if origin is Union:
        if value is None and type(None) in args:
            return None
        (hint,) = [a for a in args if a is not type(None)]
        return _convert(value, hint, path)
    if origin is tuple:
        if not isinstance(value, list):
            raise ConfigError(path, "expected a list")
        if len(args) == 2 and args[1] is Ellipsis:
            args = (args[0],) * len(value)
        elif len(value) != len(args):
            raise ConfigError(path, f"expected {len(args)} items")
        return tuple(_convert(v, a, _join(path, i)) for i, (v, a) in enumerate(zip(value, args)))
    if hint is bool:
        if not isinstance(value, bool):
            raise ConfigError(path, "expected true or false")
        return value
    if hint is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(path, "expected an integer")
        return value
    if hint is float:
        if isinstance(value, str) and value in INFINITIES:
            return INFINITIES[value]
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(path, "expected a number")
        return float(value)
    if hint is str:
        if not isinstance(value, str):
            raise ConfigError(path, "expected a string")
        return value
    raise ConfigError(path, f"unsupported field type {hint}")


def _build(cls: Any, data: Any, path: str) -> Any:
    if not isinstance(data, dict):
        raise ConfigError(path, "expected an object")
    hints = typing.get_type_hints(cls)
    names = [f.name for f in dataclasses.fields(cls)]
    unknown = sorted(set(data) - set(names))
    if unknown:
        raise ConfigError(_join(path, unknown[0]), "unknown field")
    kwdargs = {
        name: _convert(value, hints[name], _join(path, name))
        for name, value in data.items()
    }
    try:
        return cls(**kwdargs)
    except InvalidInput as error:
        if isinstance(error, ConfigError):
            raise
        raise ConfigError(path or "config", str(error)) from error


def parse_config(document: Any) -> RunConfig:
    """Validate a JSON configuration document and build the :class:`RunConfig`.

    Raises
    ------
    ConfigError
        Naming the dotted path of the first offending field.
    """
    if not isinstance(document, dict):
        raise ConfigError("", "configuration must be a JSON object")
    if "geometry" not in document:
        raise ConfigError("geometry", "missing required field")
    return _build(RunConfig, document, "")


def config_to_document(config: RunConfig) -> dict[str, Any]:
    """Effective configuration with every default resolved."""
    return dataclasses.asdict(config)


def load_config(path: Optional[Union[str, Path]]) -> RunConfig:
    if path is None:
        return RunConfig()
    with open(path) as file:
        try:
            document = json.load(file)
        except json.JSONDecodeError as error:
            raise ConfigError("", f"invalid JSON: {error}") from error
    return parse_config(document)


def _clean(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        if math.isinf(value):
            return "Infinity" if value > 0 else "-Infinity"
        return None if math.isnan(value) else float(value)
    return value


def dumps(document: Any) -> str:
    """Deterministic JSON rendering used by all output files."""
    return json.dumps(_clean(document), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _write_json(path: Path, document: Any) -> Path:
    path.write_text(dumps(document))
    return path


@dataclasses.dataclass
class Setup:
    """Objects shared by the simulation commands."""

    cascade: CascadeSpec
    dispersion: DispersionModel
    grid: NDArray
    center: float
    noise: NoiseModel
    chain: Optional[MeasurementChain]


def base_dispersion(config: RunConfig) -> DispersionModel:
    settings = config.dispersion
    if settings.kind == "constant":
        return ConstantDispersion(*settings.indices)
    if settings.kind == "table":
        return TableDispersion(settings.wavelengths, settings.table)
    return GeometryDispersion(config.geometry)


def _grid_dispersion(
    config: RunConfig, grating: GratingSpec, grid: NDArray
) -> DispersionModel:
    base = base_dispersion(config)
    if not isinstance(base, GeometryDispersion):
        return base
    samples = np.linspace(grid[0] - 1.0, grid[-1] + 1.0, config.dispersion.samples)
    return base.tabulate(samples, modes=sorted(set(grating.modes)))


def _resonance(config: RunConfig, grating: GratingSpec) -> float:
    if config.grid.center is not None:
        return config.grid.center
    base = base_dispersion(config)
    samples = SCAN_SAMPLES if isinstance(base, GeometryDispersion) else 101
    return bragg_wavelength(grating, base, samples=samples).lambda0


def build_cascade(config: RunConfig, center: float) -> CascadeSpec:
    settings = config.cascade
    section = config.grating
    if settings.section_length is not None:
        section = section.replace(length=settings.section_length)
    link_index = settings.link_index
    if link_index is None:
        link_index = effective_index_2d(config.link_geometry, center, 0).n_eff
    links = settings.sections - 1
    return CascadeSpec.uniform(
        section,
        settings.sections,
        settings.link_length,
        settings.composition,
        link_phases=settings.link_phases,
        link_index=link_index,
        link_loss_db=(settings.link_loss_db,) * links,
        te1_leakage=settings.te1_leakage,
    )


def prepare(config: RunConfig) -> Setup:
    """Resolve grid, dispersion, cascade, calibrated noise and detector."""
    with make_logger() as logger:
        center = _resonance(config, config.grating)
        grid = config.grid.wavelengths(center)
        dispersion = _grid_dispersion(config, config.grating, grid)
        cascade = build_cascade(config, center)
        logger(
            f"prepare: center {center:.6f} nm, {grid.size} wavelengths, "
            f"{len(cascade.sections)} {cascade.composition} sections"
        )
        noise = config.noise_model()
        calibration = config.calibration
        if calibration.target_db is not None:
            noise = calibrate_sigma(
                calibration.target_db,
                calibration.onset,
                cascade.sections[0],
                calibration.trials,
                grid,
                dispersion,
                model=noise,
                length_factors=calibration.length_factors,
                tolerance=calibration.tolerance,
                plateau_tolerance=calibration.plateau_tolerance,
                offband_window=config.grid.offband_window,
                reference_db=config.grid.reference_db,
                workers=config.workers,
            )
            logger(f"prepare: calibrated σ={noise.sigma_width:.6g} nm")
    return Setup(cascade, dispersion, grid, center, noise, config.measurement.build())


def _metrics(
    spectrum: Spectrum, chain: Optional[MeasurementChain], grid: GridConfig
) -> dict[str, Any]:
    document: dict[str, Any] = {
        "true": spectrum_metrics(spectrum, grid.offband_window, grid.reference_db)
    }
    if chain is not None:
        measured = apply_measurement_chain(spectrum, chain)
        document["measured"] = spectrum_metrics(
            measured, grid.offband_window, grid.reference_db
        )
        document["chain"] = dataclasses.asdict(chain)
    return document


def cmd_modes(config: RunConfig, out: Path) -> dict[str, Any]:
    """Effective and group indices, width sensitivities and resonances."""
    wavelength = config.grid.center if config.grid.center is not None else 1550.0
    geometry = config.geometry
    modes: dict[str, Any] = {}
    for m in (0, 1):
        try:
            n_eff = effective_index_2d(geometry, wavelength, m).n_eff
            modes[f"TE{m}"] = {
                "guided": True,
                "n_eff": n_eff,
                "n_g": group_index(geometry, wavelength, m),
                "dneff_dwidth": dneff_dwidth(geometry, wavelength, m),
            }
        except NoGuidedMode:
            modes[f"TE{m}"] = {"guided": False}
    link: dict[str, Any] = {}
    for m in (0, 1):
        try:
            link[f"TE{m}"] = {
                "guided": True,
                "n_eff": effective_index_2d(config.link_geometry, wavelength, m).n_eff,
            }
        except NoGuidedMode:
            link[f"TE{m}"] = {"guided": False}
    report: dict[str, Any] = {
        "wavelength_nm": wavelength,
        "geometry": dataclasses.asdict(geometry),
        "modes": modes,
        "link": link,
    }
    dispersion = GeometryDispersion(geometry)
    for pair in MODE_PAIRS:
        try:
            solution = bragg_wavelength(
                config.grating.replace(mode_pair=pair), dispersion, samples=SCAN_SAMPLES
            )
            report[f"{pair}_lambda0_nm"] = solution.lambda0
        except (NoGuidedMode, NoResonanceInWindow):
            report[f"{pair}_lambda0_nm"] = None
    try:
        report["kappa_estimate"] = estimate_kappa(geometry, config.grating, wavelength)
    except NoGuidedMode:
        report["kappa_estimate"] = None
    _write_json(out / "modes.json", report)
    return report


def cmd_simulate(config: RunConfig, out: Path) -> dict[str, Any]:
    """Spectrum of trial 0 of the configured cascade, with its metrics."""
    setup = prepare(config)
    cascade, noise = setup.cascade, setup.noise
    realization = None if noise.noiseless else sample_cascade(noise, cascade, 0)
    offsets = (
        sample_link_offsets(noise, cascade, 0)
        if cascade.composition == "coherent"
        else None
    )
    spectrum = cascade_spectrum(
        cascade,
        setup.grid,
        setup.dispersion,
        realization,
        offsets,
        realization_id=0,
        scattering_rates=sample_scattering(noise, cascade, 0),
    )
    document = _metrics(spectrum, setup.chain, config.grid)
    if spectrum.reflection is not None:
        peak = float(np.max(spectrum.reflection))
        document["max_reflection_db"] = 10 * math.log10(peak) if peak > 0 else None
        if setup.chain is not None:
            document["max_reflected_dbm"] = float(
                np.max(reflected_power_dbm(spectrum.reflection, setup.chain))
            )
    document["sigma_width_nm"] = noise.sigma_width
    write_spectrum_csv(spectrum, out / "spectrum.csv")
    _write_json(out / "metrics.json", document)
    return document


TRIAL_COLUMNS = [
    "trial_index",
    "rejection_db",
    "bandwidth_nm",
    "center_nm",
    "clipped",
    "true_rejection_db",
]


def _write_trials_csv(path: Path, records) -> None:
    with open(path, "w", newline="") as file:
        writer = csv.writer(file, lineterminator="\n")
        writer.writerow(TRIAL_COLUMNS)
        for r in records:
            writer.writerow(
                [
                    r.trial_index,
                    "%.17g" % r.rejection_db,
                    "%.17g" % r.bandwidth_nm,
                    "%.17g" % r.center_nm,
                    int(r.clipped),
                    "%.17g" % r.true_rejection_db,
                ]
            )


def cmd_montecarlo(config: RunConfig, out: Path) -> dict[str, Any]:
    """Ensemble statistics of the configured cascade."""
    setup = prepare(config)
    stats = monte_carlo(
        setup.cascade,
        setup.noise,
        config.trials,
        setup.grid,
        setup.dispersion,
        chain=setup.chain,
        offband_window=config.grid.offband_window,
        reference_db=config.grid.reference_db,
        workers=config.workers,
    )
    document = stats.to_document()
    document["noise"] = dataclasses.asdict(setup.noise)
    _write_json(out / "ensemble.json", document)
    _write_trials_csv(out / "trials.csv", stats.records)
    with h5py.File(out / "ensemble.hdf5", "w") as file:
        write_ensemble(file, "ensemble", stats)
    return document


def cmd_design(config: RunConfig, out: Path) -> dict[str, Any]:
    """Section geometry and count meeting the configured target."""
    settings = config.target
    target = settings.design_target()
    base = base_dispersion(config)
    n_g = mean_group_index(config.grating, base, target.center)
    grating = config.grating
    section = solve_section(
        target,
        n_g,
        (settings.kappa_min, settings.kappa_max),
        period=grating.period,
        max_length=settings.max_section_length,
        duty_cycle=grating.duty_cycle,
        bragg_order=grating.bragg_order,
        mode_pair=grating.mode_pair,
        avg_width=grating.avg_width,
        corrugation=grating.corrugation,
        segment_periods=grating.segment_periods,
    )
    center = _resonance(config, section)
    grid = config.grid.wavelengths(center)
    dispersion = _grid_dispersion(config, section, grid)
    design = solve_count(
        target,
        section,
        config.noise_model(),
        config.trials,
        grid,
        dispersion,
        link_length=config.cascade.link_length,
        margin=settings.margin,
        cap=settings.cap,
        chain=config.measurement.build(),
        offband_window=config.grid.offband_window,
        reference_db=config.grid.reference_db,
        workers=config.workers,
    )
    document = design.to_document()
    document["group_index"] = n_g
    document["resonance_nm"] = center
    _write_json(out / "design.json", document)
    return document


def cmd_analyze(config: RunConfig, out: Path, path: Union[str, Path]) -> dict[str, Any]:
    """Metrics of a spectrum read from CSV."""
    spectrum = read_spectrum_csv(path)
    document = _metrics(spectrum, config.measurement.build(), config.grid)
    _write_json(out / "metrics.json", document)
    return document


COMMANDS: dict[str, Callable[..., dict[str, Any]]] = {
    "modes": cmd_modes,
    "simulate": cmd_simulate,
    "montecarlo": cmd_montecarlo,
    "design": cmd_design,
}


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="braggcascade",
        description="Simulate and design cascaded waveguide Bragg notch filters.",
    )
    commands = parser.add_subparsers(dest="command", required=True)
    for name in (*COMMANDS, "analyze"):
        sub = commands.add_parser(name, help=(COMMANDS.get(name) or cmd_analyze).__doc__)
        if name == "analyze":
            sub.add_argument("spectrum", type=Path, help="spectrum CSV file")
        sub.add_argument("--config", type=Path, help="JSON configuration file")
        sub.add_argument("--seed", type=int, help="root random seed")
        sub.add_argument("--out", type=Path, help="output directory")
        sub.add_argument("--trials", type=int, help="Monte Carlo trials")
        sub.add_argument("--grid-step", type=float, help="wavelength step (nm)")
        sub.add_argument("--workers", type=int, help="threads for Monte Carlo trials")
        sub.add_argument(
            "--chain", choices=["none", *CHAINS], help="measurement chain preset"
        )
        sub.add_argument(
            "-v", "--verbose", action="count", default=0, help="increase debug output"
        )
    return parser


def apply_overrides(config: RunConfig, args: argparse.Namespace) -> RunConfig:
    """Command-line flags take precedence over the configuration file."""
    changes: dict[str, Any] = {}
    for name in ("seed", "trials", "workers"):
        if getattr(args, name) is not None:
            changes[name] = getattr(args, name)
    if args.out is not None:
        changes["output_dir"] = str(args.out)
    if args.grid_step is not None:
        changes["grid"] = dataclasses.replace(config.grid, step=args.grid_step)
    if args.chain is not None:
        changes["measurement"] = dataclasses.replace(config.measurement, chain=args.chain)
    return dataclasses.replace(config, **changes) if changes else config


def _exit_code(error: BaseException) -> int:
    if isinstance(error, (OSError, SpectrumFormatError)):
        return EXIT_IO
    if isinstance(
        error, (InfeasibleTarget, CalibrationFailed, NoResonanceInWindow, NoGuidedMode)
    ):
        return EXIT_INFEASIBLE
    return EXIT_INVALID


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run the command line and return the exit status."""
    args = make_parser().parse_args(argv)
    old_level = tools.set_debug_level(max(tools.DEBUG, args.verbose))
    try:
        config = apply_overrides(load_config(args.config), args)
        out = Path(config.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        _write_json(out / "config.json", config_to_document(config))
        if args.command == "analyze":
            document = cmd_analyze(config, out, args.spectrum)
        else:
            document = COMMANDS[args.command](config, out)
    except (BraggError, OSError) as error:
        print(dumps({"error": type(error).__name__, "message": str(error)}), end="")
        return _exit_code(error)
    finally:
        tools.set_debug_level(old_level)
    print(dumps(document), end="")
    return EXIT_OK


__all__ = [
    "RunConfig",
    "parse_config",
    "config_to_document",
    "load_config",
    "prepare",
    "cmd_modes",
    "cmd_simulate",
    "cmd_montecarlo",
    "cmd_design",
    "cmd_analyze",
    "main",
]
