from __future__ import annotations
import json
from typing import Any, Union
import numpy as np
import h5py  # type: ignore
from .tools import InvalidInput
from .spectra import Spectrum
from .fabnoise import EnsembleStats, TrialRecord

Parent = Union[h5py.File, h5py.Group]


def _read_hdf5_item_as_path(
    item: Union[h5py.File, h5py.Group, h5py.Dataset], output: list[tuple[str, Any]]
) -> list[tuple[str, Any]]:
    for subitem in item.values():
        if isinstance(subitem, h5py.Dataset):
            output.append((subitem.name, subitem[()]))
        else:
            _read_hdf5_item_as_path(subitem, output)
    return output


def read_full_hdf5_as_paths(filename: str) -> dict[str, Any]:
    """Every dataset of the file, keyed by its absolute path."""
    with h5py.File(filename, "r") as file:
        return {key: value for key, value in _read_hdf5_item_as_path(file, [])}


def _read_hdf5_item(item: Union[h5py.File, h5py.Group, h5py.Dataset]) -> Any:
    if isinstance(item, h5py.Dataset):
        return item[()]
    output: dict = {key: _read_hdf5_item(subitem) for key, subitem in item.items()}
    output["_attrs"] = list(item.attrs.items())
    return output


def read_full_hdf5(filename: str) -> dict:
    """Nested dictionary with the datasets and attributes of the file."""
    with h5py.File(filename, "r") as file:
        return _read_hdf5_item(file)


def _open_group(parent: Parent, name: str, kind: str) -> h5py.Group:
    if name in parent:
        g = parent[name]
        if (
            isinstance(g, h5py.Group)
            and g.attrs.get("type") == kind
            and g.attrs.get("version") == 1
        ):
            return g
    raise InvalidInput(f"Unable to read {kind} from HDF5 group {parent.name}/{name}")


def write_spectrum(parent: Parent, name: str, spectrum: Spectrum) -> None:
    """Write a spectrum to an HDF5 file or group.

    Parameters
    ----------
    parent : h5py.File | h5py.Group
        The file or group where the spectrum is created.
    name : str
        Name of the subgroup under which the datasets are stored.
    spectrum : Spectrum
        The spectrum to save.

    Examples
    --------
    >>> import h5py
    >>> import numpy as np
    >>> from braggcascade import GratingSpec, ConstantDispersion, hdf5
    >>> from braggcascade.cmt import uniform_grating_spectrum
    >>> grid = np.linspace(1530, 1545, 1501)
    >>> s = uniform_grating_spectrum(GratingSpec(), grid, ConstantDispersion(2.75, 2.55))
    >>> with h5py.File("data.hdf5", "w") as file:
    ...     hdf5.write_spectrum(file, "spectrum", s)
    """
    assert isinstance(spectrum, Spectrum)
    g = parent.create_group(name)
    g.attrs["type"] = "Spectrum"
    g.attrs["version"] = 1
    g.attrs["metadata"] = json.dumps(spectrum.metadata, sort_keys=True)
    g.create_dataset("wavelengths", data=spectrum.wavelengths, track_times=False)
    g.create_dataset("transmission", data=spectrum.transmission, track_times=False)
    if spectrum.reflection is not None:
        g.create_dataset("reflection", data=spectrum.reflection, track_times=False)


def read_spectrum(parent: Parent, name: str) -> Spectrum:
    """Read a spectrum written by :func:`write_spectrum`."""
    g = _open_group(parent, name, "Spectrum")
    reflection = g["reflection"][()] if "reflection" in g else None
    return Spectrum(
        g["wavelengths"][()],
        g["transmission"][()],
        reflection,
        json.loads(g.attrs["metadata"]),
    )


_RECORD_FIELDS = (
    "trial_index",
    "rejection_db",
    "bandwidth_nm",
    "center_nm",
    "clipped",
    "true_rejection_db",
)


def write_ensemble(parent: Parent, name: str, stats: EnsembleStats) -> None:
    """Write Monte Carlo statistics, per-trial records and, when present, the
    spectra of every trial."""
    assert isinstance(stats, EnsembleStats)
    g = parent.create_group(name)
    g.attrs["type"] = "EnsembleStats"
    g.attrs["version"] = 1
    g.attrs["trials"] = stats.trials
    g.attrs["median_rejection"] = stats.median_rejection
    g.attrs["percentiles"] = np.asarray(stats.percentiles)
    g.attrs["median_bandwidth"] = stats.median_bandwidth
    for field in _RECORD_FIELDS:
        g.create_dataset(
            field,
            data=np.array([getattr(r, field) for r in stats.records]),
            track_times=False,
        )
    if stats.spectra:
        spectra = g.create_group("spectra")
        for record, spectrum in zip(stats.records, stats.spectra):
            write_spectrum(spectra, f"trial[{record.trial_index}]", spectrum)


def read_ensemble(parent: Parent, name: str) -> EnsembleStats:
    """Read statistics written by :func:`write_ensemble`."""
    g = _open_group(parent, name, "EnsembleStats")
    columns = [g[field][()] for field in _RECORD_FIELDS]
    records = tuple(
        TrialRecord(int(k), float(r), float(b), float(c), bool(f), float(t))
        for k, r, b, c, f, t in zip(*columns)
    )
    spectra: tuple[Spectrum, ...] = ()
    if "spectra" in g:
        spectra = tuple(
            read_spectrum(g["spectra"], f"trial[{r.trial_index}]") for r in records
        )
    return EnsembleStats(
        trials=int(g.attrs["trials"]),
        median_rejection=float(g.attrs["median_rejection"]),
        percentiles=tuple(float(p) for p in g.attrs["percentiles"]),  # type: ignore
        median_bandwidth=float(g.attrs["median_bandwidth"]),
        records=records,
        spectra=spectra,
    )


__all__ = [
    "read_full_hdf5_as_paths",
    "read_full_hdf5",
    "write_spectrum",
    "read_spectrum",
    "write_ensemble",
    "read_ensemble",
]
