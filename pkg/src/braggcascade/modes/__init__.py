from .slab import (
    N_SILICON,
    N_OXIDE,
    N_AIR,
    WaveguideGeometry,
    ModeSolution,
    dispersion_residual,
    solve_slab_te,
    effective_index_2d,
    group_index,
    dneff_dwidth,
)
from .dispersion import (
    DispersionModel,
    ConstantDispersion,
    TableDispersion,
    GeometryDispersion,
    ShiftedDispersion,
)

__all__ = [
    "N_SILICON",
    "N_OXIDE",
    "N_AIR",
    "WaveguideGeometry",
    "ModeSolution",
    "dispersion_residual",
    "solve_slab_te",
    "effective_index_2d",
    "group_index",
    "dneff_dwidth",
    "DispersionModel",
    "ConstantDispersion",
    "TableDispersion",
    "GeometryDispersion",
    "ShiftedDispersion",
]
