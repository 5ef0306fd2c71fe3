"""Uniform periodic grids and second-order difference operators.

Scalar fields are plain arrays of shape ``grid.shape``; vector fields carry
a leading component axis, shape ``(d, *grid.shape)``. Every operator wraps
periodically on each axis and never mutates its input.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError

__all__ = ["Grid", "N_FLOOR", "write_snapshot", "read_snapshot"]

N_FLOOR = 1e-12


@dataclass(frozen=True)
class Grid:
    """Periodic box ``[0, L)^d`` with ``points`` nodes per axis.

    Parameters
    ----------
    dimension : int
        1 or 2.
    points : int
        Nodes per axis, at least 8.
    length : float
        Box length per axis.
    """

    dimension: int
    points: int
    length: float

    def __post_init__(self):
        if self.dimension not in (1, 2):
            raise DomainError(f"grids exist for d = 1 or 2, got {self.dimension}")
        if int(self.points) != self.points or self.points < 8:
            raise DomainError(f"need an integer number of points >= 8, got {self.points}")
        if not self.length > 0:
            raise DomainError(f"length must be positive, got {self.length}")

    @property
    def spacing(self):
        return self.length / self.points

    @property
    def shape(self):
        return (self.points,) * self.dimension

    @property
    def cell_volume(self):
        return self.spacing**self.dimension

    @property
    def size(self):
        return self.points**self.dimension

    def axis(self):
        """Node coordinates along one axis, ``x_i = i * h``."""
        return np.arange(self.points) * self.spacing

    def coordinates(self):
        """Tuple of coordinate arrays, each of shape ``grid.shape``."""
        x = self.axis()
        return tuple(np.meshgrid(*([x] * self.dimension), indexing="ij"))

    def integrate(self, f):
        """Riemann sum over the box (exact for trigonometric polynomials)."""
        return float(np.sum(f) * self.cell_volume)

    # -- operators -------------------------------------------------------

    def partial(self, f, axis):
        """Central first derivative along ``axis``."""
        return (np.roll(f, -1, axis=axis) - np.roll(f, 1, axis=axis)) / (2.0 * self.spacing)

    def gradient(self, f):
        """Central-difference gradient, shape ``(d, *shape)``."""
        f = np.asarray(f, dtype=float)
        return np.stack([self.partial(f, a) for a in range(self.dimension)])

    def divergence(self, v):
        """Central-difference divergence; its grid sum telescopes to zero."""
        v = np.asarray(v, dtype=float)
        out = np.zeros(self.shape)
        for a in range(self.dimension):
            out += self.partial(v[a], a)
        return out

    def laplacian(self, f):
        """Compact 3-point (d=1) or 5-point (d=2) Laplacian."""
        f = np.asarray(f, dtype=float)
        out = -2.0 * self.dimension * f
        for a in range(self.dimension):
            out = out + np.roll(f, 1, axis=a) + np.roll(f, -1, axis=a)
        return out / self.spacing**2

    def curl_tensor(self, u):
        """Antisymmetric ``R[i, j] = d_j u_i - d_i u_j``, shape ``(d, d, *shape)``."""
        u = np.asarray(u, dtype=float)
        d = self.dimension
        R = np.zeros((d, d) + self.shape)
        for i in range(d):
            for j in range(i + 1, d):
                r = self.partial(u[i], j) - self.partial(u[j], i)
                R[i, j] = r
                R[j, i] = -r
        return R

    # -- face operators used by flux-form schemes ------------------------

    def forward_difference(self, f, axis):
        """``(f[i+1] - f[i]) / h``, located on the face ``i + 1/2``."""
        return (np.roll(f, -1, axis=axis) - f) / self.spacing

    def backward_divergence(self, flux, axis):
        """``(F[i+1/2] - F[i-1/2]) / h`` for face-centred ``flux``."""
        return (flux - np.roll(flux, 1, axis=axis)) / self.spacing


def _format_header(t, grid, extra=()):
    lines = [f"# t={t!r} d={grid.dimension} n={grid.points} L={grid.length!r}"]
    lines.extend(f"# {line}" for line in extra)
    return lines


def write_snapshot(path_or_buffer, t, grid, columns, provenance=()):
    """Write node values as CSV.

    Parameters
    ----------
    path_or_buffer : str, Path or text buffer
    t : float
        Snapshot time.
    grid : Grid
    columns : dict of str -> ndarray
        Scalar fields of shape ``grid.shape``; written in insertion order.
    provenance : sequence of str
        Extra comment lines placed after the grid header.
    """
    names = list(columns)
    idx_names = ["i", "j"][: grid.dimension]
    pos_names = ["x", "y"][: grid.dimension]
    lines = _format_header(t, grid, provenance)
    lines.append(",".join(idx_names + pos_names + names))
    x = grid.axis()
    flat = [np.asarray(columns[k], dtype=float).reshape(-1) for k in names]
    for node, multi in enumerate(np.ndindex(*grid.shape)):
        parts = [str(i) for i in multi]
        parts += [repr(float(x[i])) for i in multi]
        parts += [repr(float(col[node])) for col in flat]
        lines.append(",".join(parts))
    text = "\n".join(lines) + "\n"
    if hasattr(path_or_buffer, "write"):
        path_or_buffer.write(text)
    else:
        with open(path_or_buffer, "w", encoding="utf-8") as fh:
            fh.write(text)


def read_snapshot(path_or_buffer):
    """Inverse of :func:`write_snapshot`; returns ``(t, grid, columns)``."""
    if hasattr(path_or_buffer, "read"):
        text = path_or_buffer.read()
    else:
        with open(path_or_buffer, encoding="utf-8") as fh:
            text = fh.read()
    lines = text.splitlines()
    meta = dict(item.split("=", 1) for item in lines[0].lstrip("#").split())
    grid = Grid(int(meta["d"]), int(meta["n"]), float(meta["L"]))
    body = [ln for ln in lines[1:] if not ln.startswith("#")]
    names = body[0].split(",")[2 * grid.dimension :]
    data = np.loadtxt(io.StringIO("\n".join(body[1:])), delimiter=",", ndmin=2)
    columns = {
        name: data[:, 2 * grid.dimension + k].reshape(grid.shape) for k, name in enumerate(names)
    }
    return float(meta["t"]), grid, columns
