"""Uniform grids on phase space and position space, and the fields sampled on them.

Phase-space arrays are laid out with axes ``(q_1..q_D, p_1..p_D)``; position
arrays with axes ``(x_1..x_D)``. Point coordinates are
``min + i * (max - min) / (n - 1)``, endpoints included.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..errors import GridMismatch, InvalidExtent, TooCoarse

EPS_BOUNDARY = 1e-8
BOUNDARY_BAND = 2
MIN_POINTS = 8


def _as_tuple(v, D=None):
    if np.isscalar(v):
        return (float(v),) if D is None else (float(v),) * D
    return tuple(float(x) for x in v)


def _check_axis(lo, hi, n, label):
    if not (np.isfinite(lo) and np.isfinite(hi)) or lo >= hi:
        raise InvalidExtent(f"{label} extent [{lo}, {hi}] is empty or reversed")
    if n < MIN_POINTS:
        raise TooCoarse(f"{label} has {n} points; at least {MIN_POINTS} are required")


def trapezoid_weights(n: int, h: float) -> np.ndarray:
    w = np.full(n, h)
    w[0] = w[-1] = 0.5 * h
    return w


def _edge_mask(shape, band):
    mask = np.zeros(shape, dtype=bool)
    for ax, n in enumerate(shape):
        b = min(band, n)
        idx = [slice(None)] * len(shape)
        idx[ax] = slice(0, b)
        mask[tuple(idx)] = True
        idx[ax] = slice(n - b, n)
        mask[tuple(idx)] = True
    return mask


@dataclass(frozen=True)
class PhaseGrid:
    """Uniform grid over the 2D-dimensional phase space."""

    q_min: tuple
    q_max: tuple
    p_min: tuple
    p_max: tuple
    n_q: tuple
    n_p: tuple

    def __post_init__(self):
        D = len(self.q_min)
        if D not in (1, 2):
            raise InvalidExtent(f"spatial dimension must be 1 or 2, got {D}")
        for name in ("q_max", "p_min", "p_max", "n_q", "n_p"):
            if len(getattr(self, name)) != D:
                raise InvalidExtent(f"{name} has {len(getattr(self, name))} entries, expected {D}")
        for i in range(D):
            _check_axis(self.q_min[i], self.q_max[i], self.n_q[i], f"q[{i}]")
            _check_axis(self.p_min[i], self.p_max[i], self.n_p[i], f"p[{i}]")

    @property
    def D(self) -> int:
        return len(self.q_min)

    @property
    def shape(self) -> tuple:
        return tuple(self.n_q) + tuple(self.n_p)

    @property
    def dq(self) -> tuple:
        return tuple((b - a) / (n - 1) for a, b, n in zip(self.q_min, self.q_max, self.n_q))

    @property
    def dp(self) -> tuple:
        return tuple((b - a) / (n - 1) for a, b, n in zip(self.p_min, self.p_max, self.n_p))

    @property
    def spacing(self) -> tuple:
        return self.dq + self.dp

    @property
    def lower(self) -> tuple:
        return tuple(self.q_min) + tuple(self.p_min)

    @property
    def upper(self) -> tuple:
        return tuple(self.q_max) + tuple(self.p_max)

    def q_axis(self, i: int = 0) -> np.ndarray:
        return self.q_min[i] + np.arange(self.n_q[i]) * self.dq[i]

    def p_axis(self, i: int = 0) -> np.ndarray:
        return self.p_min[i] + np.arange(self.n_p[i]) * self.dp[i]

    def axes(self) -> list:
        return [self.q_axis(i) for i in range(self.D)] + [self.p_axis(i) for i in range(self.D)]

    def mesh(self):
        """Return ``(q, p)`` with shapes ``(D, *shape)``."""
        grids = np.meshgrid(*self.axes(), indexing="ij")
        D = self.D
        return np.stack(grids[:D]), np.stack(grids[D:])

    def points(self) -> np.ndarray:
        """All grid points as a ``(2D, *shape)`` array."""
        q, p = self.mesh()
        return np.concatenate([q, p])

    def weights(self) -> np.ndarray:
        """Trapezoid weights for ``prod(dq dp)`` (no ``2 pi hbar`` factor)."""
        w = np.ones(())
        for n, h in zip(self.shape, self.spacing):
            w = np.multiply.outer(w, trapezoid_weights(n, h))
        return w

    def measure(self, hbar: float) -> np.ndarray:
        return self.weights() / (2.0 * np.pi * hbar) ** self.D

    def index_of(self, z) -> tuple:
        """Nearest grid index to a phase-space point ``(q..., p...)``."""
        z = np.asarray(z, dtype=float)
        return tuple(
            int(np.clip(np.rint((z[k] - self.lower[k]) / self.spacing[k]), 0, self.shape[k] - 1))
            for k in range(2 * self.D)
        )

    def to_index_coords(self, z: np.ndarray) -> np.ndarray:
        """Fractional index coordinates of points ``z`` with shape ``(2D, ...)``."""
        lo = np.asarray(self.lower).reshape((-1,) + (1,) * (z.ndim - 1))
        h = np.asarray(self.spacing).reshape((-1,) + (1,) * (z.ndim - 1))
        return (z - lo) / h

    def contains(self, z, margin: int = 0) -> np.ndarray:
        c = self.to_index_coords(np.asarray(z, dtype=float))
        n = np.asarray(self.shape).reshape((-1,) + (1,) * (c.ndim - 1))
        return np.all((c >= margin) & (c <= n - 1 - margin), axis=0)


def make_grid(q_range, p_range, n_q, n_p=None) -> PhaseGrid:
    """Build a phase grid.

    ``q_range``/``p_range`` are ``(min, max)`` pairs, or sequences of pairs for
    D = 2. Counts may be a single int or one per dimension.
    """
    q_range = np.asarray(q_range, dtype=float)
    p_range = np.asarray(p_range, dtype=float)
    if q_range.ndim == 1:
        q_range = q_range[None]
    if p_range.ndim == 1:
        p_range = p_range[None]
    D = q_range.shape[0]
    n_p = n_q if n_p is None else n_p
    n_q = tuple(int(n) for n in np.broadcast_to(n_q, (D,)))
    n_p = tuple(int(n) for n in np.broadcast_to(n_p, (D,)))
    return PhaseGrid(
        q_min=tuple(q_range[:, 0]), q_max=tuple(q_range[:, 1]),
        p_min=tuple(p_range[:, 0]), p_max=tuple(p_range[:, 1]),
        n_q=n_q, n_p=n_p,
    )


def square_grid(half_width: float, n: int, D: int = 1, center=None) -> PhaseGrid:
    """Symmetric grid ``[c - w, c + w]`` on every phase axis."""
    c = np.zeros(2 * D) if center is None else np.asarray(center, dtype=float)
    q = [(c[i] - half_width, c[i] + half_width) for i in range(D)]
    p = [(c[D + i] - half_width, c[D + i] + half_width) for i in range(D)]
    return make_grid(q, p, n)


@dataclass(frozen=True)
class PositionGrid:
    x_min: tuple
    x_max: tuple
    n_x: tuple

    def __post_init__(self):
        D = len(self.x_min)
        if D not in (1, 2) or len(self.x_max) != D or len(self.n_x) != D:
            raise InvalidExtent("position grid needs matching 1 or 2 dimensional extents")
        for i in range(D):
            _check_axis(self.x_min[i], self.x_max[i], self.n_x[i], f"x[{i}]")

    @property
    def D(self) -> int:
        return len(self.x_min)

    @property
    def shape(self) -> tuple:
        return tuple(self.n_x)

    @property
    def dx(self) -> tuple:
        return tuple((b - a) / (n - 1) for a, b, n in zip(self.x_min, self.x_max, self.n_x))

    def axis(self, i: int = 0) -> np.ndarray:
        return self.x_min[i] + np.arange(self.n_x[i]) * self.dx[i]

    def mesh(self) -> np.ndarray:
        return np.stack(np.meshgrid(*[self.axis(i) for i in range(self.D)], indexing="ij"))

    def weights(self) -> np.ndarray:
        w = np.ones(())
        for n, h in zip(self.n_x, self.dx):
            w = np.multiply.outer(w, trapezoid_weights(n, h))
        return w


def make_position_grid(x_range, n_x) -> PositionGrid:
    x_range = np.asarray(x_range, dtype=float)
    if x_range.ndim == 1:
        x_range = x_range[None]
    D = x_range.shape[0]
    n_x = tuple(int(n) for n in np.broadcast_to(n_x, (D,)))
    return PositionGrid(x_min=tuple(x_range[:, 0]), x_max=tuple(x_range[:, 1]), n_x=n_x)


def _frozen(values, dtype):
    a = np.array(values, dtype=dtype, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class PhaseField:
    """Complex amplitude sampled on a :class:`PhaseGrid`."""

    grid: PhaseGrid
    values: np.ndarray
    time_tag: float = 0.0

    def __post_init__(self):
        v = _frozen(self.values, complex)
        if v.shape != self.grid.shape:
            raise GridMismatch(f"values shape {v.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("phase field contains non-finite values")
        object.__setattr__(self, "values", v)

    def norm_sq(self, hbar: float = 1.0) -> float:
        return float(np.sum(np.abs(self.values) ** 2 * self.grid.measure(hbar)))

    def norm(self, hbar: float = 1.0) -> float:
        return np.sqrt(self.norm_sq(hbar))

    def inner(self, other: "PhaseField", hbar: float = 1.0) -> complex:
        same_grid(self, other)
        return complex(np.sum(np.conj(self.values) * other.values * self.grid.measure(hbar)))

    def boundary_mass(self) -> float:
        return boundary_mass(self.values, self.grid.weights())

    def with_values(self, values, time_tag=None) -> "PhaseField":
        return PhaseField(self.grid, values, self.time_tag if time_tag is None else time_tag)

    def at(self, z) -> complex:
        return complex(self.values[self.grid.index_of(z)])


@dataclass(frozen=True)
class DensityField:
    """Non-negative phase-space density."""

    grid: PhaseGrid
    values: np.ndarray
    time_tag: float = 0.0

    def __post_init__(self):
        v = _frozen(self.values, float)
        if v.shape != self.grid.shape:
            raise GridMismatch(f"values shape {v.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(v)) or np.any(v < 0):
            raise ValueError("density must be finite and non-negative")
        object.__setattr__(self, "values", v)

    def mass(self, hbar: float = 1.0) -> float:
        return float(np.sum(self.values * self.grid.measure(hbar)))

    def boundary_mass(self) -> float:
        return boundary_mass(np.sqrt(self.values), self.grid.weights())

    @classmethod
    def from_field(cls, eta: PhaseField) -> "DensityField":
        return cls(eta.grid, np.abs(eta.values) ** 2, eta.time_tag)


@dataclass(frozen=True)
class PositionWavefunction:
    grid: PositionGrid
    values: np.ndarray
    time_tag: float = 0.0

    def __post_init__(self):
        v = _frozen(self.values, complex)
        if v.shape != self.grid.shape:
            raise GridMismatch(f"values shape {v.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("wavefunction contains non-finite values")
        object.__setattr__(self, "values", v)

    def norm_sq(self) -> float:
        return float(np.sum(np.abs(self.values) ** 2 * self.grid.weights()))

    def norm(self) -> float:
        return np.sqrt(self.norm_sq())

    def inner(self, other: "PositionWavefunction") -> complex:
        if self.grid != other.grid:
            raise GridMismatch("wavefunctions live on different position grids")
        return complex(np.sum(np.conj(self.values) * other.values * self.grid.weights()))

    def boundary_mass(self) -> float:
        return boundary_mass(self.values, self.grid.weights())

    def with_values(self, values, time_tag=None) -> "PositionWavefunction":
        return PositionWavefunction(self.grid, values, self.time_tag if time_tag is None else time_tag)


def boundary_mass(values: np.ndarray, weights: np.ndarray, band: int = BOUNDARY_BAND) -> float:
    """Fraction of ``sum |v|^2 w`` that sits within ``band`` cells of the grid edge."""
    dens = np.abs(values) ** 2 * weights
    total = dens.sum()
    if total == 0.0:
        return 0.0
    return float(dens[_edge_mask(values.shape, band)].sum() / total)


def same_grid(*fields) -> PhaseGrid:
    grid = fields[0].grid
    for f in fields[1:]:
        if f.grid != grid:
            raise GridMismatch("fields are sampled on different phase grids")
    return grid


def l2_relative(a: np.ndarray, b: np.ndarray, weights=None) -> float:
    """``||a - b|| / ||b||`` under optional quadrature weights."""
    w = 1.0 if weights is None else weights
    den = np.sqrt(np.sum(np.abs(b) ** 2 * w))
    return float(np.sqrt(np.sum(np.abs(a - b) ** 2 * w)) / den)
