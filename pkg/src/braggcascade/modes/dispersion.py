from __future__ import annotations
from abc import ABC, abstractmethod
from typing import Optional, Sequence, Union
import numpy as np
from scipy.interpolate import make_interp_spline  # type: ignore
from ..typing import NDArray, Wavelength, WavelengthLike
from ..tools import InvalidInput, make_logger
from .slab import WaveguideGeometry, effective_index_2d


def _as_output(value: NDArray) -> Union[float, NDArray]:
    return float(value) if value.ndim == 0 else value


class DispersionModel(ABC):
    """Rule mapping a wavelength and a mode order to an effective index.

    Subclasses evaluate scalars and arrays of wavelengths alike. The
    attribute `window` is the closed wavelength interval where the model is
    defined.
    """

    kind: str
    window: tuple[float, float] = (0.0, np.inf)

    @abstractmethod
    def n_eff(self, wavelength: Wavelength, mode_order: int = 0) -> Wavelength: ...

    def index_sum(self, wavelength: Wavelength, modes: tuple[int, int]) -> Wavelength:
        """Sum of the effective indices of the two modes coupled by a grating."""
        return self.n_eff(wavelength, modes[0]) + self.n_eff(wavelength, modes[1])

    def shifted(self, offset: float) -> ShiftedDispersion:
        """Same model with every effective index displaced by `offset`."""
        return ShiftedDispersion(self, offset)

    def _check_window(self, wavelength: NDArray) -> None:
        lo, hi = self.window
        if wavelength.size and (np.min(wavelength) < lo or np.max(wavelength) > hi):
            raise InvalidInput(
                f"Wavelengths outside the dispersion window [{lo}, {hi}] nm"
            )


class ConstantDispersion(DispersionModel):
    """Wavelength-independent effective indices, one per mode order.

    Parameters
    ----------
    *indices : float
        Effective index of mode orders 0, 1, ...
    """

    kind = "constant"
    indices: tuple[float, ...]

    def __init__(self, *indices: float):
        if not indices or min(indices) <= 0:
            raise InvalidInput(f"Invalid constant effective indices {indices}")
        self.indices = tuple(float(n) for n in indices)

    def n_eff(self, wavelength: Wavelength, mode_order: int = 0) -> Wavelength:
        if not 0 <= mode_order < len(self.indices):
            raise InvalidInput(f"No effective index for mode order {mode_order}")
        shape = np.shape(wavelength)
        return _as_output(np.full(shape, self.indices[mode_order]))

    def __repr__(self) -> str:
        return f"ConstantDispersion{self.indices}"


class TableDispersion(DispersionModel):
    """Effective indices interpolated from tabulated values.

    Uses cubic splines when four or more samples are available and
    lower-degree interpolants otherwise; two samples define a linear model.

    Parameters
    ----------
    wavelengths : ArrayLike
        Strictly increasing sample wavelengths (nm).
    indices : Sequence[ArrayLike]
        One sequence of effective indices per tabulated mode.
    modes : Sequence[int], optional
        Mode order of each row of `indices`. Defaults to ``0, 1, ...``.
    """

    kind = "table"

    def __init__(
        self,
        wavelengths: WavelengthLike,
        indices: Sequence[WavelengthLike],
        modes: Optional[Sequence[int]] = None,
    ):
        x = np.asarray(wavelengths, dtype=np.float64)
        if x.ndim != 1 or x.size < 2 or np.any(np.diff(x) <= 0):
            raise InvalidInput("Table wavelengths must be strictly increasing")
        table = [np.asarray(n, dtype=np.float64) for n in indices]
        if not table or any(n.shape != x.shape for n in table):
            raise InvalidInput("Each table of indices must match the wavelengths")
        orders = tuple(range(len(table))) if modes is None else tuple(modes)
        if len(orders) != len(table) or len(set(orders)) != len(orders):
            raise InvalidInput(f"Mode orders {orders} do not label the table rows")
        self.wavelengths = x
        self.table = table
        self.modes = orders
        self.window = (float(x[0]), float(x[-1]))
        degree = min(3, x.size - 1)
        self._splines = {
            m: make_interp_spline(x, n, k=degree) for m, n in zip(orders, table)
        }

    def n_eff(self, wavelength: Wavelength, mode_order: int = 0) -> Wavelength:
        if mode_order not in self._splines:
            raise InvalidInput(f"No effective index for mode order {mode_order}")
        x = np.asarray(wavelength, dtype=np.float64)
        self._check_window(x)
        return _as_output(np.asarray(self._splines[mode_order](x)))


class GeometryDispersion(DispersionModel):
    """Effective indices solved on demand from a waveguide cross-section.

    Each wavelength costs one effective-index solve per mode; use
    :meth:`tabulate` before evaluating dense grids.
    """

    kind = "geometry"

    def __init__(self, geometry: WaveguideGeometry):
        self.geometry = geometry

    def n_eff(self, wavelength: Wavelength, mode_order: int = 0) -> Wavelength:
        x = np.asarray(wavelength, dtype=np.float64)
        output = np.array(
            [effective_index_2d(self.geometry, w, mode_order).n_eff for w in x.flat]
        )
        return _as_output(output.reshape(x.shape))

    def tabulate(
        self, wavelengths: WavelengthLike, modes: Sequence[int] = (0, 1)
    ) -> TableDispersion:
        """Solve the geometry at the given wavelengths and return the table."""
        x = np.asarray(wavelengths, dtype=np.float64)
        with make_logger() as logger:
            logger(
                f"Tabulating dispersion of {self.geometry} over "
                f"[{x[0]}, {x[-1]}] nm with {x.size} samples"
            )
            table = [self.n_eff(x, m) for m in modes]
        return TableDispersion(x, table, modes=modes)


class ShiftedDispersion(DispersionModel):
    """Dispersion of `base` with all effective indices displaced by `offset`."""

    def __init__(self, base: DispersionModel, offset: float):
        self.base = base
        self.offset = float(offset)
        self.kind = base.kind
        self.window = base.window

    def n_eff(self, wavelength: Wavelength, mode_order: int = 0) -> Wavelength:
        return self.base.n_eff(wavelength, mode_order) + self.offset


__all__ = [
    "DispersionModel",
    "ConstantDispersion",
    "TableDispersion",
    "GeometryDispersion",
    "ShiftedDispersion",
]
