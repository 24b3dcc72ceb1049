"""On-disk formats.

Images are written as a triple sharing one base path:

* ``<base>.pgm``        8-bit P2 preview, min-max normalized
* ``<base>.geom``       geometry sidecar: ``key = value`` lines with
                        height, width, origin_x/y (m), spacing_x/y (m)
* ``<base>.float.txt``  float64 values, whitespace-separated rows,
                        ``%.17g`` so values round-trip exactly

CSV formats (header line included, ``%.17g`` floats):

* signal           ``t,s_x[,s_y]``
* trajectory       ``t,x,y[,vx,vy]`` (SI units; velocities are computed
                   by forward differences when the columns are absent)
* transfer function ``bin,channel,re,im`` (unusable bins omitted)
* SNR profile      ``bin,channel,snr``

A core-operator field becomes one image triple per populated entry
(``<prefix>_A<row><col>``) plus ``<prefix>_entries.txt`` naming them.
``manifest.txt`` lists every file a pipeline run wrote, one per line.
"""

from __future__ import annotations

import os

import numpy as np

from .forward import CoreOperatorField, ScanSignal
from .geometry import ConcentrationImage, GridGeometry
from .preprocessing import SnrProfile, TransferFunction
from .scanner import Trajectory, trajectory_from_samples

FLOAT_FMT = "%.17g"


def _fmt(value) -> str:
    """Exact-round-trip float rendering (plain ``repr`` of a Python float)."""
    return repr(float(value))


def save_image(base: str, values: np.ndarray, geometry: GridGeometry) -> list:
    """Write the preview/geometry/values triple; returns the paths."""
    values = np.asarray(values, dtype=float)
    if values.shape != tuple(geometry.shape):
        raise ValueError(f"values shape {values.shape} does not match grid {geometry.shape}")
    paths = [base + ".pgm", base + ".geom", base + ".float.txt"]

    lo, hi = float(values.min()), float(values.max())
    scale = 255.0 / (hi - lo) if hi > lo else 0.0
    preview = np.round((values - lo) * scale).astype(int)
    h, w = values.shape
    with open(paths[0], "w") as f:
        f.write(f"P2\n{w} {h}\n255\n")
        for row in preview:
            f.write(" ".join(str(v) for v in row) + "\n")

    with open(paths[1], "w") as f:
        f.write(f"height = {h}\n")
        f.write(f"width = {w}\n")
        f.write(f"origin_x = {_fmt(geometry.origin[0])}\n")
        f.write(f"origin_y = {_fmt(geometry.origin[1])}\n")
        f.write(f"spacing_x = {_fmt(geometry.spacing[0])}\n")
        f.write(f"spacing_y = {_fmt(geometry.spacing[1])}\n")

    np.savetxt(paths[2], values, fmt=FLOAT_FMT)
    return paths


def load_image(base: str) -> ConcentrationImage:
    meta = {}
    with open(base + ".geom") as f:
        for line in f:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, value = line.partition("=")
            meta[key.strip()] = value.strip()
    geometry = GridGeometry(
        shape=(int(meta["height"]), int(meta["width"])),
        spacing=(float(meta["spacing_x"]), float(meta["spacing_y"])),
        origin=(float(meta["origin_x"]), float(meta["origin_y"])),
    )
    values = np.loadtxt(base + ".float.txt", ndmin=2)
    return ConcentrationImage(values=values, geometry=geometry)


def save_signal(path: str, signal: ScanSignal) -> None:
    header = "t," + ",".join(f"s_{axis}" for axis in ("x", "y", "z")[: signal.n_channels])
    data = np.column_stack([signal.times(), signal.values])
    np.savetxt(path, data, fmt=FLOAT_FMT, delimiter=",", header=header, comments="")


def load_signal(path: str) -> ScanSignal:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[0] < 2:
        raise ValueError(f"signal file {path} needs at least two samples")
    dt = data[1, 0] - data[0, 0]
    if dt <= 0:
        raise ValueError(f"signal file {path} has non-increasing time stamps")
    return ScanSignal(values=data[:, 1:], sample_rate=1.0 / dt)


def save_trajectory(path: str, trajectory: Trajectory) -> None:
    data = np.column_stack([trajectory.times, trajectory.positions, trajectory.velocities])
    np.savetxt(path, data, fmt=FLOAT_FMT, delimiter=",", header="t,x,y,vx,vy", comments="")


def load_trajectory(path: str) -> Trajectory:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[1] == 5:
        return Trajectory(
            times=data[:, 0],
            positions=data[:, 1:3],
            velocities=data[:, 3:5],
            source="sampled",
        )
    if data.shape[1] == 3:
        return trajectory_from_samples(data[:, 1:3], data[:, 0])
    raise ValueError(f"trajectory file {path} must have columns t,x,y[,vx,vy]")


def save_transfer_function(path: str, tf: TransferFunction) -> None:
    with open(path, "w") as f:
        f.write("bin,channel,re,im\n")
        n_channels, n_bins = tf.spectra.shape
        for c in range(n_channels):
            for b in range(n_bins):
                if tf.usable[c, b]:
                    v = tf.spectra[c, b]
                    f.write(f"{b},{c},{_fmt(v.real)},{_fmt(v.imag)}\n")


def load_transfer_function(path: str, n_channels: int, n_bins: int) -> TransferFunction:
    spectra = np.zeros((n_channels, n_bins), dtype=complex)
    usable = np.zeros((n_channels, n_bins), dtype=bool)
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    for b, c, re, im in data:
        spectra[int(c), int(b)] = re + 1j * im
        usable[int(c), int(b)] = True
    return TransferFunction(spectra=spectra, usable=usable)


def save_snr_profile(path: str, profile: SnrProfile) -> None:
    with open(path, "w") as f:
        f.write("bin,channel,snr\n")
        n_channels, n_bins = profile.values.shape
        for c in range(n_channels):
            for b in range(n_bins):
                f.write(f"{b},{c},{_fmt(profile.values[c, b])}\n")


def load_snr_profile(path: str, n_channels: int, n_bins: int, thresholds=None) -> SnrProfile:
    values = np.zeros((n_channels, n_bins))
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    for b, c, snr in data:
        values[int(c), int(b)] = snr
    if thresholds is None:
        thresholds = np.zeros(n_channels)
    return SnrProfile(values=values, thresholds=np.asarray(thresholds, dtype=float))


def save_core_field(directory: str, prefix: str, field: CoreOperatorField) -> list:
    paths = []
    entries_path = os.path.join(directory, f"{prefix}_entries.txt")
    with open(entries_path, "w") as f:
        f.write(f"dimension = {field.dimension}\n")
        f.write(f"rows = {','.join(str(r) for r in field.populated_rows)}\n")
        for (row, col) in sorted(field.entries):
            f.write(f"entry = {row},{col}\n")
    paths.append(entries_path)
    for (row, col) in sorted(field.entries):
        base = os.path.join(directory, f"{prefix}_A{row}{col}")
        paths.extend(save_image(base, field.entries[(row, col)], field.geometry))
    return paths


def load_core_field(directory: str, prefix: str) -> CoreOperatorField:
    entries_path = os.path.join(directory, f"{prefix}_entries.txt")
    dimension, rows, keys = None, (), []
    with open(entries_path) as f:
        for line in f:
            key, _, value = line.strip().partition("=")
            key, value = key.strip(), value.strip()
            if key == "dimension":
                dimension = int(value)
            elif key == "rows":
                rows = tuple(int(v) for v in value.split(",") if v)
            elif key == "entry":
                row, col = value.split(",")
                keys.append((int(row), int(col)))
    entries = {}
    geometry = None
    for row, col in keys:
        image = load_image(os.path.join(directory, f"{prefix}_A{row}{col}"))
        entries[(row, col)] = image.values
        geometry = image.geometry
    return CoreOperatorField(
        entries=entries, dimension=dimension, geometry=geometry, populated_rows=rows
    )


def write_manifest(directory: str, paths: list) -> str:
    manifest = os.path.join(directory, "manifest.txt")
    with open(manifest, "w") as f:
        for p in sorted(os.path.relpath(p, directory) for p in paths):
            f.write(p + "\n")
    return manifest


def read_manifest(directory: str) -> list:
    with open(os.path.join(directory, "manifest.txt")) as f:
        return [line.strip() for line in f if line.strip()]
