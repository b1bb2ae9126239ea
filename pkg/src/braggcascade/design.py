from __future__ import annotations
import dataclasses
import math
from typing import Any, Optional
import numpy as np
from scipy.optimize import brentq  # type: ignore
from .typing import WavelengthLike
from .tools import InfeasibleTarget, InvalidInput, make_logger
from .modes import DispersionModel
from .cmt import GratingSpec, bandwidth_nm, mean_group_index, peak_rejection_db
from .tmm import DEFAULT_LINK_LENGTH, CascadeSpec
from .fabnoise import NoiseModel, monte_carlo

DEFAULT_MAX_SECTION_LENGTH = 10_000_000.0
"""Longest section considered by :func:`solve_section` (nm)."""

MAX_SECTIONS = 32


@dataclasses.dataclass(frozen=True)
class DesignTarget:
    """Requirements of a cascaded notch filter.

    Parameters
    ----------
    min_rejection : float, default = 80.0
        Rejection that the 25th percentile of the ensemble must reach (dB).
    bandwidth : float, default = 3.0
        Null-to-null bandwidth of each section (nm).
    tolerance : float, default = 0.05
        Relative tolerance on the bandwidth.
    center : float, default = 1550.0
        Design wavelength (nm).
    max_total_length : float, optional
        Upper bound on the length of the cascade, links included (nm).
    """

    min_rejection: float = 80.0
    bandwidth: float = 3.0
    tolerance: float = 0.05
    center: float = 1550.0
    max_total_length: Optional[float] = None

    def __post_init__(self):
        if not self.min_rejection > 0:
            raise InvalidInput(f"min_rejection must be positive: {self.min_rejection}")
        if not self.bandwidth > 0:
            raise InvalidInput(f"bandwidth must be positive: {self.bandwidth}")
        if not 0 < self.tolerance < 1:
            raise InvalidInput(f"tolerance must lie in (0, 1): {self.tolerance}")
        if not self.center > 0:
            raise InvalidInput(f"center must be positive: {self.center}")
        if self.max_total_length is not None and not self.max_total_length > 0:
            raise InvalidInput("max_total_length must be positive")


@dataclasses.dataclass(frozen=True)
class CascadeDesign:
    """Section geometry and count meeting a :class:`DesignTarget`."""

    section: GratingSpec
    section_count: int
    link_length: float
    predicted_noiseless_rejection: float
    predicted_bandwidth: float
    per_section_median: float
    median_rejection: float
    percentile_25: float

    @property
    def cascade(self) -> CascadeSpec:
        return CascadeSpec.uniform(self.section, self.section_count, self.link_length)

    def to_document(self) -> dict[str, Any]:
        return {
            "section": dataclasses.asdict(self.section),
            "section_count": self.section_count,
            "link_length_nm": self.link_length,
            "total_length_nm": self.cascade.total_length,
            "predicted_noiseless_rejection_db": self.predicted_noiseless_rejection,
            "predicted_bandwidth_nm": self.predicted_bandwidth,
            "per_section_median_db": self.per_section_median,
            "median_rejection_db": self.median_rejection,
            "percentile_25_db": self.percentile_25,
        }


def solve_section(
    target: DesignTarget,
    n_g: float,
    kappa_bounds: tuple[float, float],
    period: float = 290.0,
    max_length: Optional[float] = None,
    **kwdargs,
) -> GratingSpec:
    """Section with the target null-to-null bandwidth and the largest coupling.

    The bandwidth fixes a curve in the (κ, L) plane on which longer sections
    need stronger coupling. The largest coupling in `kappa_bounds` whose
    length stays below the allowed maximum is chosen, since it gives the
    deepest notch, and the length then follows from the bandwidth formula by
    a bracketed root search. When the bounds cannot reach the bandwidth
    exactly, the closest section is accepted if its bandwidth is within
    `target.tolerance` of the target.

    Parameters
    ----------
    target : DesignTarget
        Bandwidth and center wavelength.
    n_g : float
        Group index of the grating modes.
    kappa_bounds : tuple[float, float]
        Achievable range of coupling coefficients (1/nm).
    period : float, default = 290.0
        Grating period (nm).
    max_length : float, optional
        Longest acceptable section (nm). Defaults to `target.max_total_length`
        or to ``DEFAULT_MAX_SECTION_LENGTH``.
    **kwdargs :
        Other :class:`GratingSpec` fields.

    Raises
    ------
    InfeasibleTarget
        If no coupling in range yields the bandwidth within tolerance with a
        length between one period and the allowed maximum.
    """
    kmin, kmax = kappa_bounds
    if not 0 <= kmin <= kmax:
        raise InvalidInput(f"Invalid coupling bounds {kappa_bounds}")
    if not n_g > 0:
        raise InvalidInput(f"Group index must be positive: {n_g}")
    lambda0, width = target.center, target.bandwidth
    longest = min(
        x
        for x in (max_length, target.max_total_length, DEFAULT_MAX_SECTION_LENGTH)
        if x is not None
    )
    shortest = period
    if not longest > shortest:
        raise InfeasibleTarget(f"Maximum length {longest} nm is below one period")
    a = width * np.pi * n_g / lambda0**2
    upper = a * a - (np.pi / longest) ** 2
    if upper < kmin * kmin:
        # Narrowest reachable notch.
        kappa, length = kmin, longest
    elif kmax * kmax >= upper:
        kappa, length = math.sqrt(upper), longest
    else:
        kappa = kmax

        def excess(length: float) -> float:
            return bandwidth_nm(lambda0, n_g, kappa, length) - width

        if excess(shortest) < 0:
            # Widest reachable notch.
            length = shortest
        else:
            length = float(brentq(excess, shortest, longest, xtol=1e-6))
    achieved = bandwidth_nm(lambda0, n_g, kappa, length)
    with make_logger() as logger:
        logger(
            f"solve_section: κ={kappa:.6g} /nm, L={length:.3f} nm, "
            f"bandwidth {achieved:.6g} nm"
        )
    if abs(achieved - width) > target.tolerance * width:
        raise InfeasibleTarget(
            f"Closest bandwidth {achieved:.6g} nm misses the {width} nm target by "
            f"more than {100 * target.tolerance:g}% with κ in {kappa_bounds} "
            f"and L in [{shortest}, {longest}] nm"
        )
    return GratingSpec(period=period, length=length, kappa=kappa, **kwdargs)


def section_count_estimate(
    min_rejection: float, per_section_db: float, margin: int = 1
) -> int:
    """Sections needed if the per-section median rejections add in dB."""
    if not per_section_db > 0:
        raise InfeasibleTarget("Sections provide no rejection")
    return math.ceil(min_rejection / per_section_db) + margin


def solve_count(
    target: DesignTarget,
    section: GratingSpec,
    noise: NoiseModel,
    trials: int,
    grid: WavelengthLike,
    dispersion: DispersionModel,
    link_length: float = DEFAULT_LINK_LENGTH,
    margin: int = 1,
    cap: int = MAX_SECTIONS,
    **kwdargs,
) -> CascadeDesign:
    """Number of incoherently cascaded sections meeting the rejection target.

    Starts from :func:`section_count_estimate` with the Monte Carlo median of
    one section, and adds sections until the 25th percentile of the cascade
    ensemble reaches `target.min_rejection`. Extra keyword arguments go to
    :func:`braggcascade.fabnoise.monte_carlo`.

    Raises
    ------
    InfeasibleTarget
        When more than `cap` sections, or a cascade longer than
        `target.max_total_length`, would be needed.
    """
    single = monte_carlo(
        CascadeSpec((section,)), noise, trials, grid, dispersion, **kwdargs
    )
    per_section = single.median_rejection
    count = section_count_estimate(target.min_rejection, per_section, margin)
    with make_logger() as logger:
        logger(f"solve_count: {per_section:.3f} dB per section, starting at {count}")
        while count <= cap:
            cascade = CascadeSpec.uniform(section, count, link_length, "incoherent")
            if (
                target.max_total_length is not None
                and cascade.total_length > target.max_total_length
            ):
                break
            stats = monte_carlo(cascade, noise, trials, grid, dispersion, **kwdargs)
            logger(
                f"solve_count: N={count}, p25 {stats.percentiles[1]:.3f} dB, "
                f"median {stats.median_rejection:.3f} dB"
            )
            if stats.percentiles[1] >= target.min_rejection:
                return CascadeDesign(
                    section=section,
                    section_count=count,
                    link_length=link_length,
                    predicted_noiseless_rejection=count
                    * peak_rejection_db(section.kappa, section.length),
                    predicted_bandwidth=bandwidth_nm(
                        target.center,
                        mean_group_index(section, dispersion, target.center),
                        section.kappa,
                        section.length,
                    ),
                    per_section_median=per_section,
                    median_rejection=stats.median_rejection,
                    percentile_25=stats.percentiles[1],
                )
            count += 1
    raise InfeasibleTarget(
        f"{target.min_rejection} dB needs more than {min(count, cap)} sections "
        f"of {per_section:.2f} dB within the allowed length"
    )


__all__ = [
    "DesignTarget",
    "CascadeDesign",
    "solve_section",
    "section_count_estimate",
    "solve_count",
]
