"""Maps between position space and phase space.

``lift`` expands a wavefunction in the wavepacket family, ``project`` sums the
family back up, and ``project_Q`` applies the closed-form Gaussian overlap
kernel, i.e. the orthogonal projection of an arbitrary phase-space function
onto the image of ``lift``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core.grids import (
    EPS_BOUNDARY, PhaseField, PhaseGrid, PositionGrid, PositionWavefunction, make_grid,
)
from .core.models import HamiltonianModel
from .core.wavepackets import WavepacketFamily
from .errors import GridTooSmall, QuadratureUnderresolved, StationaryPoint, UsageError

METHODS = ("direct", "separable")


def _check_resolution(family, xgrid):
    for h in xgrid.dx:
        if family.sigma < 2 * h:
            raise QuadratureUnderresolved(
                f"sigma={family.sigma:g} is below two position-grid spacings ({2 * h:g})")


def _packet_factors(family, grid, xgrid, d):
    """Per-dimension ``conj(u_qp(x))``, shape ``(n_q, n_p, n_x)``."""
    x = xgrid.axis(d)
    q = grid.q_axis(d)
    p = grid.p_axis(d)
    env = family.envelope_1d(x[None, :] - q[:, None])
    phase = np.exp(-1j * np.multiply.outer(p, x) / family.hbar)
    return env[:, None, :] * phase[None, :, :] * np.exp(1j * np.multiply.outer(q, p) / family.hbar)[:, :, None]


def lift(psi: PositionWavefunction, family: WavepacketFamily, grid: PhaseGrid, method: str = "direct",
         eps_boundary: float = EPS_BOUNDARY) -> PhaseField:
    """``eta(q, p) = int u*_qp(x) psi(x) dx`` by trapezoid quadrature at every grid point."""
    xgrid = psi.grid
    if xgrid.D != grid.D:
        raise UsageError("position and phase grids have different dimensions")
    if method not in METHODS:
        raise UsageError(f"method must be one of {METHODS}")
    _check_resolution(family, xgrid)
    if psi.boundary_mass() > eps_boundary:
        raise GridTooSmall(f"wavefunction boundary mass {psi.boundary_mass():.2e} exceeds {eps_boundary:.1e}")
    f = psi.values * xgrid.weights()
    hb = family.hbar

    if grid.D == 1 and method == "direct":
        x = xgrid.axis(0)
        p = grid.p_axis(0)
        out = np.empty(grid.shape, dtype=complex)
        for i, q in enumerate(grid.q_axis(0)):
            u_conj = family.envelope_1d(x - q)[None, :] * np.exp(-1j * np.multiply.outer(p, x - q) / hb)
            out[i] = u_conj @ f
        return PhaseField(grid, out, psi.time_tag)

    if grid.D == 1:
        x = xgrid.axis(0)
        q, p = grid.q_axis(0), grid.p_axis(0)
        G = family.envelope_1d(x[None, :] - q[:, None]) * f[None, :]
        E = np.exp(-1j * np.multiply.outer(x, p) / hb)
        out = (G @ E) * np.exp(1j * np.multiply.outer(q, p) / hb)
        return PhaseField(grid, out, psi.time_tag)

    A1 = _packet_factors(family, grid, xgrid, 0)
    A2 = _packet_factors(family, grid, xgrid, 1)
    T = np.einsum("cdy,xy->cdx", A2, f)
    out = np.einsum("abx,cdx->acbd", A1, T)
    return PhaseField(grid, out, psi.time_tag)


def project(eta: PhaseField, family: WavepacketFamily, xgrid: PositionGrid, method: str = "direct",
            eps_boundary: float = EPS_BOUNDARY) -> PositionWavefunction:
    """``psi(x) = int (dq dp / 2 pi hbar)^D u_qp(x) eta(q, p)`` by trapezoid quadrature."""
    grid = eta.grid
    if xgrid.D != grid.D:
        raise UsageError("position and phase grids have different dimensions")
    if method not in METHODS:
        raise UsageError(f"method must be one of {METHODS}")
    if eta.boundary_mass() > eps_boundary:
        raise GridTooSmall(f"phase field boundary mass {eta.boundary_mass():.2e} exceeds {eps_boundary:.1e}")
    g = eta.values * grid.measure(family.hbar)
    hb = family.hbar

    if grid.D == 1 and method == "direct":
        x = xgrid.axis(0)
        p = grid.p_axis(0)
        out = np.zeros(xgrid.shape, dtype=complex)
        for i, q in enumerate(grid.q_axis(0)):
            u = family.envelope_1d(x - q)[:, None] * np.exp(1j * np.multiply.outer(x - q, p) / hb)
            out += u @ g[i]
        return PositionWavefunction(xgrid, out, eta.time_tag)

    if grid.D == 1:
        x = xgrid.axis(0)
        q, p = grid.q_axis(0), grid.p_axis(0)
        g = g * np.exp(-1j * np.multiply.outer(q, p) / hb)
        E = np.exp(1j * np.multiply.outer(p, x) / hb)
        env = family.envelope_1d(x[None, :] - q[:, None])
        out = np.sum(env * (g @ E), axis=0)
        return PositionWavefunction(xgrid, out, eta.time_tag)

    U1 = np.conj(_packet_factors(family, grid, xgrid, 0))
    U2 = np.conj(_packet_factors(family, grid, xgrid, 1))
    T = np.einsum("cdy,acbd->aby", U2, g)
    out = np.einsum("abx,aby->xy", U1, T)
    return PositionWavefunction(xgrid, out, eta.time_tag)


def kernel(family: WavepacketFamily, z, zp):
    """Closed-form overlap ``K(z, z') = int u*_z(x) u_z'(x) dx`` of Gaussian packets.

    ``z`` and ``zp`` are ``(q..., p...)`` with leading axis ``2D``; trailing axes broadcast.
    """
    z = np.asarray(z, dtype=float)
    zp = np.asarray(zp, dtype=float)
    D = z.shape[0] // 2
    dq = zp[:D] - z[:D]
    dp = zp[D:] - z[D:]
    s2, hb = family.sigma**2, family.hbar
    expo = (-np.sum(dq**2, axis=0) / (8 * s2) - s2 * np.sum(dp**2, axis=0) / (2 * hb**2)
            - 1j * np.sum((zp[D:] + z[D:]) * dq, axis=0) / (2 * hb))
    return np.exp(expo)


def project_Q(eta: PhaseField, family: WavepacketFamily, eps_boundary: float = EPS_BOUNDARY,
              cutoff: float = 1e-30) -> PhaseField:
    """``eta~(z) = int (dz' / 2 pi hbar) K(z, z') eta(z')`` on the whole grid.

    Grid offsets in ``q`` are handled one at a time, so memory stays
    ``O(n_p^2)``; offsets whose Gaussian factor is below ``cutoff`` are skipped.
    """
    grid = eta.grid
    if grid.D != 1:
        raise UsageError("project_Q is implemented for one-dimensional systems")
    if eta.boundary_mass() > eps_boundary:
        raise GridTooSmall(f"phase field boundary mass {eta.boundary_mass():.2e} exceeds {eps_boundary:.1e}")
    s2, hb = family.sigma**2, family.hbar
    g = eta.values * grid.measure(hb)
    p = grid.p_axis(0)
    nq = grid.n_q[0]
    dq = grid.dq[0]
    gauss_p = np.exp(-s2 * np.subtract.outer(p, p) ** 2 / (2 * hb**2))
    psum = np.add.outer(p, p)
    out = np.zeros(grid.shape, dtype=complex)
    for k in range(-(nq - 1), nq):
        d = k * dq
        a = np.exp(-d * d / (8 * s2))
        if a < cutoff:
            continue
        M = a * gauss_p * np.exp(-1j * psum * d / (2 * hb))
        lo, hi = max(0, -k), min(nq, nq - k)
        out[lo:hi] += g[lo + k:hi + k] @ M.T
    return PhaseField(grid, out, eta.time_tag)


def project_Q_at(eta: PhaseField, family: WavepacketFamily, points) -> np.ndarray:
    """Kernel projection evaluated only at ``points`` (shape ``(2D, M)``)."""
    grid = eta.grid
    pts = np.asarray(points, dtype=float).reshape(2 * grid.D, -1)
    g = (eta.values * grid.measure(family.hbar)).ravel()
    zp = grid.points().reshape(2 * grid.D, -1)
    out = np.empty(pts.shape[1], dtype=complex)
    for m in range(pts.shape[1]):
        out[m] = kernel(family, pts[:, m:m + 1], zp) @ g
    return out


def _spectral_derivative(psi: PositionWavefunction) -> np.ndarray:
    x = psi.grid
    k = 2 * np.pi * np.fft.fftfreq(x.n_x[0], x.dx[0])
    return np.fft.ifft(1j * k * np.fft.fft(psi.values))


def ladder_overlaps(psi: PositionWavefunction, family: WavepacketFamily, grid: PhaseGrid):
    """Overlaps ``int [(x - q) u_qp]* psi`` and ``int [(p^ - p) u_qp]* psi`` by quadrature.

    Evaluated as ``lift(x psi) - q lift(psi)`` and ``lift(p^ psi) - p lift(psi)``
    with a spectral ``p^``; independent of finite differences on the phase grid.
    """
    x = psi.grid.axis(0)
    q, p = grid.mesh()
    eta = lift(psi, family, grid).values
    x_psi = lift(psi.with_values(x * psi.values), family, grid).values
    pdiff = psi.with_values(-1j * family.hbar * _spectral_derivative(psi))
    p_psi = lift(pdiff, family, grid).values
    return (PhaseField(grid, x_psi - q[0] * eta), PhaseField(grid, p_psi - p[0] * eta))


@dataclass(frozen=True)
class SuppressionCurve:
    probe: tuple
    offsets: np.ndarray
    ratios: np.ndarray
    fitted_T: float
    analytic_T: float
    chirp_T: float

    @property
    def relative_width_error(self) -> float:
        return abs(self.fitted_T / self.analytic_T - 1.0)


def timescale(model: HamiltonianModel, family: WavepacketFamily, z) -> float:
    """``[(1/8 sigma^2)|dH/dp|^2 + (sigma^2 / 2 hbar^2)|dH/dq|^2]^(-1/2)``."""
    z = np.asarray(z, dtype=float)
    D = z.shape[0] // 2
    q, p = z[:D, None], z[D:, None]
    gq, gp = model.dH_dq(q, p)[:, 0], model.dH_dp(q, p)[:, 0]
    s2, hb = family.sigma**2, family.hbar
    rate = np.sum(gp**2) / (8 * s2) + s2 * np.sum(gq**2) / (2 * hb**2)
    if rate == 0.0:
        raise StationaryPoint(f"both gradients of H vanish at {tuple(z)}")
    return float(rate ** -0.5)


def ribbon_state(model: HamiltonianModel, family: WavepacketFamily, probe, offset: float,
                 grid: PhaseGrid, tau_extent: float = 6.0, amplitude: float = 1.0) -> PhaseField:
    """Phase-space function concentrated on the straight trajectory segment through ``probe``.

    The segment is ``z0 + v tau`` with ``v = (dH/dp, -dH/dq)`` at the probe and
    phase ``beta/hbar`` where ``beta = (E - H + p.dH/dp) tau``. The transverse
    delta is a Gaussian ridge one grid cell wide, scaled so ``d tau ds = dq dp``.
    """
    z0 = np.asarray(probe, dtype=float)
    q0, p0 = z0[:1, None], z0[1:, None]
    gq, gp = model.dH_dq(q0, p0)[0, 0], model.dH_dp(q0, p0)[0, 0]
    T = timescale(model, family, z0)
    v = np.array([gp, -gq])
    speed = np.hypot(*v)
    q, p = grid.mesh()
    rel = np.stack([q[0] - z0[0], p[0] - z0[1]])
    tau = (rel[0] * v[0] + rel[1] * v[1]) / speed**2
    perp = np.hypot(rel[0] - tau * v[0], rel[1] - tau * v[1])
    w = max(grid.dq[0], grid.dp[0])
    ridge = np.exp(-0.5 * (perp / w) ** 2) / (np.sqrt(2 * np.pi) * w * speed)
    beta = (offset + p0[0, 0] * gp) * tau
    window = np.abs(tau) <= tau_extent * T
    vals = 2 * np.pi * family.hbar * amplitude * np.exp(1j * beta / family.hbar) * ridge * window
    return PhaseField(grid, vals)


def ribbon_grid(model: HamiltonianModel, family: WavepacketFamily, probe, tau_extent: float = 6.0,
                resolution: int = 40) -> PhaseGrid:
    """Grid centred on ``probe`` that holds the ribbon segment with a margin."""
    z0 = np.asarray(probe, dtype=float)
    q0, p0 = z0[:1, None], z0[1:, None]
    gq, gp = model.dH_dq(q0, p0)[0, 0], model.dH_dp(q0, p0)[0, 0]
    T = timescale(model, family, z0)
    h = min(2 * family.sigma, family.hbar / family.sigma) / resolution
    half_q = abs(gp) * tau_extent * T + 12 * h
    half_p = abs(gq) * tau_extent * T + 12 * h
    nq = int(np.ceil(half_q / h))
    npp = int(np.ceil(half_p / h))
    return make_grid((z0[0] - nq * h, z0[0] + nq * h), (z0[1] - npp * h, z0[1] + npp * h),
                     max(2 * nq + 1, 9), max(2 * npp + 1, 9))


def suppression_profile(model: HamiltonianModel, family: WavepacketFamily, probe, offsets,
                        tau_extent: float = 6.0, resolution: int = 40) -> SuppressionCurve:
    """Projected magnitude of a ribbon state at the probe, versus ``E - H``.

    Ratios are normalized by the ``E = H`` value. The fitted width comes from a
    least-squares fit of ``log ratio = -offset^2 T^2 / 4 hbar^2``. ``chirp_T``
    is the width expected when the kernel's ``dp.dq / 2 hbar`` phase along the
    straight segment is retained; it equals ``analytic_T`` when either gradient
    of ``H`` vanishes at the probe.
    """
    if model.D != 1:
        raise UsageError("suppression profiles are implemented for one-dimensional systems")
    z0 = np.asarray(probe, dtype=float)
    T = timescale(model, family, z0)
    grid = ribbon_grid(model, family, z0, tau_extent, resolution)
    offsets = np.asarray(offsets, dtype=float)

    def projected(offset):
        eta = ribbon_state(model, family, z0, offset, grid, tau_extent)
        return abs(project_Q_at(eta, family, z0[:, None])[0])

    ref = projected(0.0)
    ratios = np.array([projected(o) / ref for o in offsets])
    nz = offsets != 0
    x = offsets[nz] ** 2
    slope = np.sum(x * np.log(ratios[nz])) / np.sum(x * x) if np.any(nz) else np.nan
    fitted = 2 * family.hbar * np.sqrt(-slope) if slope < 0 else np.inf

    q0, p0 = z0[:1, None], z0[1:, None]
    gq, gp = model.dH_dq(q0, p0)[0, 0], model.dH_dp(q0, p0)[0, 0]
    a = T**-2
    c = gq * gp / (2 * family.hbar)
    chirp = np.sqrt(a / (a * a + c * c))
    return SuppressionCurve(tuple(z0), offsets, ratios, float(fitted), T, float(chirp))


@dataclass(frozen=True)
class KernelProbe:
    z: tuple
    zp: tuple
    value: complex


def probe_kernel(family: WavepacketFamily, z, zp) -> KernelProbe:
    z = np.asarray(z, dtype=float)
    zp = np.asarray(zp, dtype=float)
    return KernelProbe(tuple(z), tuple(zp), complex(kernel(family, z, zp)))


def projected_momentum(psi: PositionWavefunction, family: WavepacketFamily, grid: PhaseGrid,
                       xgrid: PositionGrid | None = None) -> PositionWavefunction:
    """``project(p * lift(psi))``: momentum applied as a multiplier in phase space."""
    eta = lift(psi, family, grid, method="separable")
    p = grid.mesh()[1][0]
    return project(eta.with_values(p * eta.values), family, xgrid or psi.grid, method="separable")


def spectral_momentum(psi: PositionWavefunction, hbar: float = 1.0) -> PositionWavefunction:
    """``(hbar/i) d psi/dx`` by FFT on the (periodically extended) position grid."""
    return psi.with_values(-1j * hbar * _spectral_derivative(psi))
