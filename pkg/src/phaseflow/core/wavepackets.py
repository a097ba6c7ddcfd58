"""Gaussian wavepacket family, Hermite polynomials, and oscillator eigenstates."""
from __future__ import annotations

from dataclasses import dataclass
from math import lgamma, pi

import numpy as np
from scipy.special import erfc

from ..errors import DegreeTooHigh, GridTooSmall, UsageError
from .grids import EPS_BOUNDARY, PhaseField, PhaseGrid, PositionGrid, PositionWavefunction
from .models import Harmonic, HamiltonianModel

MAX_DEGREE = 30
GAUGES = ("none", "energy", "kvn")


@dataclass(frozen=True)
class WavepacketFamily:
    """Parameters of ``u_qp(x) = u0(x - q) exp(i p.(x - q)/hbar) exp(i phi)``.

    ``u0`` is the normalized Gaussian ``(2 pi sigma^2)^(-D/4) exp(-|x|^2 / 4 sigma^2)``.
    """

    sigma: float = 1.0
    hbar: float = 1.0
    gauge: str = "none"

    def __post_init__(self):
        if not (self.sigma > 0 and self.hbar > 0):
            raise UsageError("sigma and hbar must be positive")
        if self.gauge not in GAUGES:
            raise UsageError(f"gauge must be one of {GAUGES}, got {self.gauge!r}")

    def envelope(self, dx):
        """``u0`` evaluated at displacements ``dx`` of shape ``(D, ...)``."""
        dx = np.asarray(dx, dtype=float)
        D = dx.shape[0]
        return (2 * pi * self.sigma**2) ** (-D / 4) * np.exp(-np.sum(dx**2, axis=0) / (4 * self.sigma**2))

    def envelope_1d(self, dx):
        return (2 * pi * self.sigma**2) ** (-0.25) * np.exp(-(dx**2) / (4 * self.sigma**2))

    def gauge_phase(self, q, p, t=0.0, model: HamiltonianModel | None = None, action=None):
        """Extra phase ``phi(q, p, t)`` selected by ``gauge``.

        ``energy``: ``-H t / hbar``. ``kvn``: ``S / hbar`` with ``S`` supplied as
        ``action`` (Hamilton's principal function accumulated along characteristics).
        """
        if self.gauge == "none":
            return 0.0
        if self.gauge == "energy":
            if model is None:
                raise UsageError("energy gauge needs the Hamiltonian model")
            return -model.H(np.atleast_1d(q), np.atleast_1d(p)) * t / self.hbar
        if action is None:
            raise UsageError("kvn gauge needs the accumulated action S(q, p, t)")
        return np.asarray(action) / self.hbar


def coherent_sigma(model: Harmonic, hbar: float = 1.0) -> float:
    """Width for which the family are the oscillator's coherent states: ``zeta / sqrt(2)``."""
    return model.zeta(hbar) / np.sqrt(2.0)


def _tail_fraction(center, sigma, lo, hi):
    # |u0|^2 is a normal density with standard deviation sigma
    s = np.sqrt(2.0) * sigma
    return 0.5 * (erfc((center - lo) / s) + erfc((hi - center) / s))


def make_wavepacket(family: WavepacketFamily, q, p, xgrid: PositionGrid, t: float = 0.0,
                    model: HamiltonianModel | None = None, action=None,
                    eps_boundary: float = EPS_BOUNDARY) -> PositionWavefunction:
    q = np.atleast_1d(np.asarray(q, dtype=float))
    p = np.atleast_1d(np.asarray(p, dtype=float))
    D = xgrid.D
    if q.shape != (D,) or p.shape != (D,):
        raise UsageError(f"wavepacket centre must have {D} components")
    tail = 1.0 - np.prod([1.0 - _tail_fraction(q[i], family.sigma, xgrid.x_min[i], xgrid.x_max[i])
                          for i in range(D)])
    if tail > eps_boundary:
        raise GridTooSmall(f"wavepacket tail mass {tail:.3e} outside the position grid exceeds {eps_boundary:.1e}")
    x = xgrid.mesh()
    shape = (D,) + (1,) * D
    dx = x - q.reshape(shape)
    phase = np.sum(p.reshape(shape) * dx, axis=0) / family.hbar
    u = family.envelope(dx) * np.exp(1j * phase)
    phi = family.gauge_phase(q, p, t, model, action)
    return PositionWavefunction(xgrid, u * np.exp(1j * np.squeeze(phi)), time_tag=t)


def hermite(n: int, x):
    """Physicists' Hermite polynomial ``H_n(x)`` by the three-term recurrence."""
    if n < 0 or n > MAX_DEGREE or int(n) != n:
        raise DegreeTooHigh(f"Hermite degree must be an integer in [0, {MAX_DEGREE}], got {n}")
    x = np.asarray(x)
    h0 = np.ones_like(x, dtype=np.result_type(x, float))
    if n == 0:
        return h0 if h0.ndim else h0[()]
    h1 = 2 * x * h0
    for k in range(1, int(n)):
        h0, h1 = h1, 2 * x * h1 - 2 * k * h0
    return h1


def hermite_gaussian_integral(n: int, alpha: float, z):
    """Closed form of ``int exp(-(x - z)^2) H_n(alpha x) dx`` for ``0 < alpha < 1``."""
    r = np.sqrt(1 - alpha**2)
    return np.sqrt(np.pi) * r**n * hermite(n, alpha * np.asarray(z) / r)


def ho_eigenstate(n: int, model: Harmonic, xgrid: PositionGrid, hbar: float = 1.0) -> PositionWavefunction:
    """Analytic oscillator eigenfunction ``psi_n`` (Hermite-function recurrence)."""
    if n < 0 or n > MAX_DEGREE:
        raise DegreeTooHigh(f"level must be in [0, {MAX_DEGREE}], got {n}")
    xi = xgrid.axis(0) / model.zeta(hbar)
    f0 = (pi * model.zeta(hbar) ** 2) ** (-0.25) * np.exp(-0.5 * xi**2)
    f1 = np.sqrt(2.0) * xi * f0
    if n == 0:
        f1 = f0
    for k in range(1, n):
        f0, f1 = f1, np.sqrt(2.0 / (k + 1)) * xi * f1 - np.sqrt(k / (k + 1)) * f0
    return PositionWavefunction(xgrid, f1.astype(complex))


def ho_eta_values(n: int, model: Harmonic, hbar: float, q, p):
    """Closed-form phase-space eigenfunction at arbitrary ``(q, p)`` arrays."""
    if n < 0 or n > MAX_DEGREE:
        raise DegreeTooHigh(f"level must be in [0, {MAX_DEGREE}], got {n}")
    m, w = model.m, model.omega
    z = np.sqrt(m * w / (2 * hbar)) * (q - 1j * p / (m * w))
    gauss = np.exp(-(m * w**2 * q**2 / 2 - 1j * w * p * q + p**2 / (2 * m)) / (2 * hbar * w))
    return z**n * np.exp(-0.5 * lgamma(n + 1)) * gauss


def ho_eigen_eta(n: int, model: Harmonic, grid: PhaseGrid, hbar: float = 1.0,
                 eps_boundary: float = EPS_BOUNDARY) -> PhaseField:
    if grid.D != 1:
        raise UsageError("the closed-form oscillator states are one-dimensional")
    q, p = grid.mesh()
    eta = PhaseField(grid, ho_eta_values(n, model, hbar, q[0], p[0]))
    if eta.boundary_mass() > eps_boundary:
        raise GridTooSmall(f"level {n} has boundary mass {eta.boundary_mass():.2e} on this grid")
    return eta
