"""On-disk formats: field maps, distortion screens, codebooks, gain maps.

Field and distortion files are CSV with a one-line typed header::

    beamshadow-field v1, N=<n>, theta=<start>:<step>:<end>, phi=<start>:<step>:<end>, label=<tag>
    antenna,theta_deg,phi_deg,re,im
    0,0.0,0.0,0.1778...,0.0
    ...

Rows are antenna-major, then theta-major, phi-minor, covering every grid
cell exactly once.  Floats are written with ``repr`` so a read/write round
trip reproduces every sample bit for bit.  Distortion files use the magic
``beamshadow-distortion v1`` and columns ``antenna,theta_deg,phi_deg,amp,
phase_rad``.  Readers validate ordering, row count, and finiteness and
report the offending line on failure.
"""

from __future__ import annotations

import re
from pathlib import Path

import numpy as np

from .distortion import DistortionField
from .fields import AntennaFieldMap
from .sphere import SphericalGrid, make_grid

__all__ = [
    "FileFormatError",
    "write_field_file",
    "read_field_file",
    "write_distortion_file",
    "read_distortion_file",
    "write_codebook_csv",
    "write_gain_map_csv",
]

FIELD_MAGIC = "beamshadow-field v1"
DISTORTION_MAGIC = "beamshadow-distortion v1"
_FIELD_COLUMNS = "antenna,theta_deg,phi_deg,re,im"
_DISTORTION_COLUMNS = "antenna,theta_deg,phi_deg,amp,phase_rad"

_HEADER_RE = re.compile(
    r"^(?P<magic>beamshadow-[a-z]+ v1), N=(?P<n>\d+), "
    r"theta=(?P<t0>[^:,]+):(?P<ts>[^:,]+):(?P<t1>[^:,]+), "
    r"phi=(?P<p0>[^:,]+):(?P<ps>[^:,]+):(?P<p1>[^:,]+), "
    r"label=(?P<label>.*)$"
)


class FileFormatError(ValueError):
    """Raised when a beamshadow file is malformed; messages carry path:line."""


def _fmt(x: float) -> str:
    return repr(float(x))


def _header_line(magic: str, n_antennas: int, grid: SphericalGrid, label: str) -> str:
    if "\n" in label or "\r" in label:
        raise ValueError("label must not contain newlines")
    return (
        f"{magic}, N={n_antennas}, "
        f"theta={_fmt(grid.theta_start)}:{_fmt(grid.theta_step)}:{_fmt(grid.theta_end)}, "
        f"phi={_fmt(grid.phi_start)}:{_fmt(grid.phi_step)}:{_fmt(grid.phi_end)}, "
        f"label={label}"
    )


def _write_rows(fh, grid: SphericalGrid, per_antenna, value_fmt) -> None:
    theta_s = [_fmt(t) for t in grid.thetas]
    phi_s = [_fmt(p) for p in grid.phis]
    for a, block in enumerate(per_antenna):
        prefix = str(a)
        for it, th in enumerate(theta_s):
            row = block[it]
            for ip, ph in enumerate(phi_s):
                fh.write(f"{prefix},{th},{ph},{value_fmt(row[ip])}\n")


def write_field_file(field: AntennaFieldMap, path) -> None:
    """Write a field map in the beamshadow-field v1 format."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        fh.write(_header_line(FIELD_MAGIC, field.n_antennas, field.grid, field.label) + "\n")
        fh.write(_FIELD_COLUMNS + "\n")
        _write_rows(
            fh,
            field.grid,
            field.samples,
            lambda z: f"{_fmt(z.real)},{_fmt(z.imag)}",
        )


def write_distortion_file(distortion: DistortionField, path) -> None:
    """Write a distortion field in the beamshadow-distortion v1 format."""
    path = Path(path)
    amp, phase = distortion.amp, distortion.phase
    with path.open("w", newline="") as fh:
        fh.write(
            _header_line(DISTORTION_MAGIC, distortion.n_antennas, distortion.grid, distortion.label)
            + "\n"
        )
        fh.write(_DISTORTION_COLUMNS + "\n")
        theta_s = [_fmt(t) for t in distortion.grid.thetas]
        phi_s = [_fmt(p) for p in distortion.grid.phis]
        for a in range(distortion.n_antennas):
            for it, th in enumerate(theta_s):
                arow, prow = amp[a, it], phase[a, it]
                for ip, ph in enumerate(phi_s):
                    fh.write(f"{a},{th},{ph},{_fmt(arow[ip])},{_fmt(prow[ip])}\n")


def _parse_header(path: Path, line: str, magic: str, columns: str, second: str):
    m = _HEADER_RE.match(line.rstrip("\n"))
    if m is None or m.group("magic") != magic:
        raise FileFormatError(f"{path}:1: not a '{magic}' file")
    try:
        n = int(m.group("n"))
        grid = make_grid(
            float(m.group("ts")),
            float(m.group("ps")),
            (float(m.group("t0")), float(m.group("t1"))),
            (float(m.group("p0")), float(m.group("p1"))),
        )
    except ValueError as exc:
        raise FileFormatError(f"{path}:1: bad header: {exc}") from exc
    if n < 1:
        raise FileFormatError(f"{path}:1: antenna count must be >= 1")
    if second.rstrip("\n") != columns:
        raise FileFormatError(f"{path}:2: expected column header '{columns}'")
    return n, grid, m.group("label")


def _read_table(path, magic: str, columns: str, n_values: int):
    """Parse header plus ordered data rows; returns (n, grid, label, values).

    values is a float array of shape (rows, n_values) in file order.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        header = fh.readline()
        if not header:
            raise FileFormatError(f"{path}:1: empty file")
        n, grid, label = _parse_header(path, header, magic, columns, fh.readline())
        n_theta, n_phi = grid.shape
        total = n * n_theta * n_phi
        values = np.empty((total, n_values))
        thetas, phis = grid.thetas, grid.phis
        count = 0
        for lineno, line in enumerate(fh, start=3):
            line = line.strip()
            if not line:
                raise FileFormatError(f"{path}:{lineno}: blank line inside data")
            if count >= total:
                raise FileFormatError(
                    f"{path}:{lineno}: more data rows than the header's "
                    f"{total} (N={n} x {n_theta} x {n_phi})"
                )
            parts = line.split(",")
            if len(parts) != 3 + n_values:
                raise FileFormatError(
                    f"{path}:{lineno}: expected {3 + n_values} fields, got {len(parts)}"
                )
            try:
                a = int(parts[0])
                th = float(parts[1])
                ph = float(parts[2])
                vals = [float(v) for v in parts[3:]]
            except ValueError as exc:
                raise FileFormatError(f"{path}:{lineno}: {exc}") from exc
            ia, rem = divmod(count, n_theta * n_phi)
            it, ip = divmod(rem, n_phi)
            if a != ia or abs(th - thetas[it]) > 1e-9 or abs(ph - phis[ip]) > 1e-9:
                raise FileFormatError(
                    f"{path}:{lineno}: row out of order: expected antenna {ia}, "
                    f"theta {thetas[it]}, phi {phis[ip]}"
                )
            for v in vals:
                if not np.isfinite(v):
                    raise FileFormatError(f"{path}:{lineno}: non-finite value {v}")
            values[count] = vals
            count += 1
        if count != total:
            raise FileFormatError(
                f"{path}: expected {total} data rows (N={n} x {n_theta} x {n_phi}), "
                f"found {count}"
            )
    return n, grid, label, values


def read_field_file(path) -> AntennaFieldMap:
    """Read a beamshadow-field v1 file back into an AntennaFieldMap."""
    n, grid, label, values = _read_table(path, FIELD_MAGIC, _FIELD_COLUMNS, 2)
    samples = (values[:, 0] + 1j * values[:, 1]).reshape(n, grid.n_theta, grid.n_phi)
    return AntennaFieldMap(grid=grid, samples=samples, label=label)


def read_distortion_file(path) -> DistortionField:
    """Read a beamshadow-distortion v1 file back into a DistortionField."""
    path = Path(path)
    n, grid, label, values = _read_table(path, DISTORTION_MAGIC, _DISTORTION_COLUMNS, 2)
    shape = (n, grid.n_theta, grid.n_phi)
    try:
        return DistortionField(
            grid=grid,
            amp=values[:, 0].reshape(shape),
            phase=values[:, 1].reshape(shape),
            label=label,
        )
    except ValueError as exc:
        raise FileFormatError(f"{path}: {exc}") from exc


def write_codebook_csv(codebook, path) -> None:
    """Dump codebook entries as CSV rows ``entry,antenna,re,im,tag``."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        fh.write("entry,antenna,re,im,tag\n")
        for k, entry in enumerate(codebook.entries):
            for i, w in enumerate(entry.weights):
                fh.write(f"{k},{i},{_fmt(w.real)},{_fmt(w.imag)},{entry.tag}\n")


def write_gain_map_csv(grid: SphericalGrid, gain_db: np.ndarray, path) -> None:
    """Dump a gain map as CSV rows ``theta_deg,phi_deg,gain_db``.

    Masked-out cells (NaN) are written as ``nan``; exact nulls as ``-inf``.
    """
    gain_db = np.asarray(gain_db, dtype=float)
    if gain_db.shape != grid.shape:
        raise ValueError(f"gain map shape {gain_db.shape} does not match grid {grid.shape}")
    path = Path(path)
    with path.open("w", newline="") as fh:
        fh.write("theta_deg,phi_deg,gain_db\n")
        theta_s = [_fmt(t) for t in grid.thetas]
        phi_s = [_fmt(p) for p in grid.phis]
        for it, th in enumerate(theta_s):
            row = gain_db[it]
            for ip, ph in enumerate(phi_s):
                fh.write(f"{th},{ph},{_fmt(row[ip])}\n")
