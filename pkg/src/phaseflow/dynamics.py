"""Phase-space Schrodinger-Ehrenfest propagation and residual evaluators.

The first-order equation

    d eta/dt = (i/hbar)(p.dH/dp - H) eta - {eta, H}

is solved by the method of characteristics: amplitudes ride along the
classical flow and pick up ``exp(i/hbar int L dt)`` with ``L = p.dH/dp - H``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .classical import (
    FlowConfig, backtrack, check_outflow, flow_map, interpolate, poisson_bracket, remap_schedule,
)
from .core.fd import derivative
from .core.grids import EPS_BOUNDARY, PhaseField, PhaseGrid
from .core.models import HamiltonianModel
from .errors import AllMasked, GaugeUnsupported, GridMismatch, UsageError

GAUGE_KINDS = ("none", "energy", "kvn")


@dataclass(frozen=True)
class GaugeSpec:
    """Extra packet phase ``phi``.

    ``none``: ``phi = 0``. ``energy``: ``phi = -H t / hbar``. ``kvn``:
    ``phi = S / hbar`` with ``S`` the Lagrangian integral along the
    characteristic that ends at ``(q, p)`` after ``time`` (so ``S = 0`` at
    ``time = 0``). ``time`` is used only by the time-independent residual.
    """

    kind: str = "none"
    time: float = 0.0

    def __post_init__(self):
        if self.kind not in GAUGE_KINDS:
            raise UsageError(f"gauge must be one of {GAUGE_KINDS}, got {self.kind!r}")


@dataclass(frozen=True)
class ResidualReport:
    field: PhaseField
    norm: float
    relative: float
    max_abs: float
    mask: np.ndarray | None = None


def _report(values, grid, hbar, reference_norm, mask=None) -> ResidualReport:
    vals = np.where(mask, values, 0.0) if mask is not None else values
    f = PhaseField(grid, vals)
    n = f.norm(hbar)
    rel = n / reference_norm if reference_norm > 0 else (0.0 if n == 0 else np.inf)
    return ResidualReport(f, n, float(rel), float(np.max(np.abs(vals))), mask)


def action_table(model: HamiltonianModel, grid: PhaseGrid, t: float, dt: float = 1e-3) -> np.ndarray:
    """``S(q, p, t)``: Lagrangian integral along the characteristic arriving at each grid point."""
    if not model.autonomous:
        raise GaugeUnsupported("the action table needs an autonomous Hamiltonian")
    if t == 0:
        return np.zeros(grid.shape)
    _, S = backtrack(model, grid.points(), t, dt, with_action=True)
    return S


def regauge(eta: PhaseField, model: HamiltonianModel, hbar: float, source: str, target: str,
            dt: float = 1e-3) -> PhaseField:
    """Convert ``eta`` between gauges at time ``eta.time_tag``.

    Packets with phase ``phi`` give ``eta_phi = exp(-i phi) eta_none``.
    """
    t = eta.time_tag

    def phi(kind):
        if kind == "none":
            return 0.0
        q, p = eta.grid.mesh()
        if kind == "energy":
            return -model.H(q, p) * t / hbar
        return action_table(model, eta.grid, t, dt) / hbar

    for k in (source, target):
        if k not in GAUGE_KINDS:
            raise UsageError(f"gauge must be one of {GAUGE_KINDS}, got {k!r}")
    return eta.with_values(eta.values * np.exp(-1j * (phi(target) - phi(source))))


def se_evolve(eta: PhaseField, model: HamiltonianModel, t_final: float, cfg: FlowConfig = FlowConfig(),
              gauge: GaugeSpec = GaugeSpec(), hbar: float = 1.0, eps_boundary: float = EPS_BOUNDARY) -> PhaseField:
    """Propagate ``eta`` by the first-order equation in the chosen gauge.

    Each output point is traced back to its foot, ``eta`` is interpolated
    there, and the source term is integrated along the segment together with
    the characteristic (one extra RK4 row):

    - ``none``: ``exp(i/hbar int (p.dH/dp - H) dt)``
    - ``energy``: ``exp(i/hbar int p.dH/dp dt)``
    - ``kvn``: no factor (pure transport).
    """
    grid = eta.grid
    if model.D != grid.D:
        raise GridMismatch(f"model has D={model.D} but the field grid has D={grid.D}")
    if not model.autonomous:
        if gauge.kind == "kvn":
            raise GaugeUnsupported("the kvn gauge is only available for autonomous Hamiltonians")
        raise UsageError("propagation supports autonomous Hamiltonians only")
    if t_final < 0:
        raise UsageError("t_final must be non-negative")
    check_outflow(eta.values, grid, eps_boundary, "before propagation")
    if t_final == 0:
        return eta
    D = model.D
    if gauge.kind == "none":
        def rate(z):
            return model.lagrangian(z[:D], z[D:])
    elif gauge.kind == "energy":
        def rate(z):
            return model.p_dot_dHdp(z[:D], z[D:])
    else:
        rate = None

    vals = np.asarray(eta.values)
    pts = grid.points()
    for sub_t, k in remap_schedule(t_final, cfg):
        feet, A = flow_map(model, pts, -sub_t, cfg.dt, rate, n_steps=k)
        vals = interpolate(vals, grid, feet, cfg.interp_order)
        if rate is not None:
            # A was accumulated backwards in time
            vals = vals * np.exp(-1j * A / hbar)
        check_outflow(vals, grid, eps_boundary, "during propagation")
    return PhaseField(grid, vals, eta.time_tag + t_final)


def _hess(model, grid):
    q, p = grid.mesh()
    return q, p, model.d2H_dp2(q, p), model.d2H_dqdp(q, p), model.d2H_dq2(q, p)


def se_rhs_order2(eta: PhaseField, model: HamiltonianModel, hbar: float = 1.0, accuracy: int = 8) -> PhaseField:
    """Second-order correction to ``d eta/dt`` (terms beyond the first-order right side).

    With ``Hpp[i,j] = d2H/dp_i dp_j``, ``Hqp[i,j] = d2H/dq_i dp_j`` and ``Hqq``:

        [-(i/2hbar) p_i p_j Hpp[i,j] - (1/2) Hqp[i,i]] eta
        + p_i [Hpp[i,j] d_qj eta - Hqp[j,i] d_pj eta]
        + (i hbar/2) [Hpp[i,j] d_qi d_qj eta - 2 Hqp[j,i] d_qi d_pj eta + Hqq[i,j] d_pi d_pj eta]
    """
    grid = eta.grid
    if model.D != grid.D:
        raise GridMismatch(f"model has D={model.D} but the field grid has D={grid.D}")
    D = grid.D
    h = grid.spacing
    v = np.asarray(eta.values)
    q, p, Hpp, Hqp, Hqq = _hess(model, grid)

    def d(arr, ax):
        return derivative(arr, ax, h[ax], 1, accuracy)

    eq = [d(v, i) for i in range(D)]
    ep = [d(v, D + i) for i in range(D)]
    out = np.zeros(grid.shape, dtype=complex)
    for i in range(D):
        out -= 0.5 * Hqp[i, i] * v
        for j in range(D):
            out += (-0.5j / hbar) * p[i] * p[j] * Hpp[i, j] * v
            out += p[i] * (Hpp[i, j] * eq[j] - Hqp[j, i] * ep[j])
            if i == j:
                e_qq = derivative(v, i, h[i], 2, accuracy)
                e_pp = derivative(v, D + i, h[D + i], 2, accuracy)
            else:
                e_qq = d(eq[j], i)
                e_pp = d(ep[j], D + i)
            e_qp = d(ep[j], i)
            out += 0.5j * hbar * (Hpp[i, j] * e_qq - 2 * Hqp[j, i] * e_qp + Hqq[i, j] * e_pp)
    return PhaseField(grid, out, eta.time_tag)


def kvn_bracket_term(model: HamiltonianModel, grid: PhaseGrid, t: float, dt: float = 1e-3) -> np.ndarray:
    """``{S, H}`` for the action table at time ``t``: ``L(z) - L(foot of z)``."""
    D = model.D
    pts = grid.points()
    feet = backtrack(model, pts, t, dt)
    return model.lagrangian(pts[:D], pts[D:]) - model.lagrangian(feet[:D], feet[D:])


def tise_residual(eta: PhaseField, E: float, model: HamiltonianModel, order: int = 1, hbar: float = 1.0,
                  gauge: GaugeSpec = GaugeSpec(), accuracy: int = 8, dt: float = 1e-3) -> ResidualReport:
    """``E eta - (H - p.dH/dp + hbar {phi, H}) eta + i hbar {eta, H}`` (order 1).

    Order 2 also subtracts ``i hbar`` times :func:`se_rhs_order2`. Only the
    ``{phi, H}`` part of a gauge survives in the time-independent form, so the
    energy gauge changes nothing and the kvn gauge adds ``{S, H}``.
    """
    if order not in (1, 2):
        raise UsageError("order must be 1 or 2")
    grid = eta.grid
    q, p = grid.mesh()
    v = np.asarray(eta.values)
    src = -model.lagrangian(q, p)
    if gauge.kind == "kvn":
        src = src + kvn_bracket_term(model, grid, gauge.time, dt)
    br = poisson_bracket(eta, model, accuracy).values
    res = E * v - src * v + 1j * hbar * br
    if order == 2:
        res = res - 1j * hbar * se_rhs_order2(eta, model, hbar, accuracy).values
    return _report(res, grid, hbar, eta.norm(hbar))


def _phase_derivative(v, axis, h, mask, accuracy, max_step=np.pi / 2):
    """``d arg(v)/dx`` on a locally unwrapped stencil.

    Phases along the stencil are accumulated from neighbour-to-neighbour
    differences, so no global unwrapping is needed. A stencil is rejected when
    any neighbour step exceeds ``max_step`` (phase unresolved, as next to a
    zero of ``v``).
    """
    from .core.fd import stencil_weights
    m = accuracy // 2
    w = stencil_weights(tuple(range(-m, m + 1)), 1)
    n = v.shape[axis]
    vm = np.moveaxis(v, axis, 0)
    mm = np.moveaxis(mask, axis, 0)
    with np.errstate(invalid="ignore", divide="ignore"):
        step = np.angle(vm[1:] * np.conj(vm[:-1]))  # step[k]: phase(k+1) - phase(k)
    smooth = np.abs(step) <= max_step
    out = np.zeros(vm.shape)
    ok = np.zeros(vm.shape, dtype=bool)
    good = mm[m:n - m].copy()
    rel = np.zeros((2 * m + 1,) + good.shape)
    for j in range(m + 1, 2 * m + 1):
        k = slice(j - 1, n - 2 * m + j - 1)
        rel[j] = rel[j - 1] + step[k]
        good &= smooth[k]
    for j in range(m - 1, -1, -1):
        k = slice(j, n - 2 * m + j)
        rel[j] = rel[j + 1] - step[k]
        good &= smooth[k]
    for j, wj in enumerate(w):
        good &= mm[j:n - 2 * m + j]
        out[m:n - m] += wj * rel[j]
    ok[m:n - m] = good
    return np.moveaxis(out, 0, axis) / h, np.moveaxis(ok, 0, axis)


def amplitude_phase_residuals(eta: PhaseField, E: float, model: HamiltonianModel, hbar: float = 1.0,
                              floor: float = 1e-8, accuracy: int = 8):
    """Residuals of the real and imaginary parts of the time-independent equation.

    ``r_A = {A, H}`` with ``A = |eta|`` and ``r_beta = E - H + p.dH/dp - {beta, H}``
    with ``beta = hbar arg(eta)``. Phase derivatives are taken on locally
    unwrapped stencils. Points are masked when their stencil touches
    ``|eta| < floor * max|eta|``, the grid edge, or a neighbour phase step
    above pi/2 (the phase is unresolved next to zeros of ``eta``).
    """
    grid = eta.grid
    D = grid.D
    v = np.asarray(eta.values)
    amp = np.abs(v)
    if amp.max() == 0:
        raise AllMasked("field is identically zero")
    mask = amp >= floor * amp.max()
    q, p = grid.mesh()
    Hq, Hp = model.dH_dq(q, p), model.dH_dp(q, p)
    valid = mask.copy()
    br_b = np.zeros(grid.shape)
    for i in range(D):
        bq, okq = _phase_derivative(v, i, grid.spacing[i], mask, accuracy)
        bp, okp = _phase_derivative(v, D + i, grid.spacing[D + i], mask, accuracy)
        valid &= okq & okp
        br_b += hbar * (bq * Hp[i] - bp * Hq[i])
    if not valid.any():
        raise AllMasked("no grid point has resolvable phase")
    r_A = poisson_bracket(eta.with_values(amp), model, accuracy).values.real
    r_b = E + model.lagrangian(q, p) - br_b
    amp_norm = PhaseField(grid, amp).norm(hbar)
    ref = PhaseField(grid, np.where(valid, amp, 0.0)).norm(hbar)
    return (_report(r_A, grid, hbar, amp_norm, valid),
            _report(r_b * np.where(valid, 1.0, 0.0), grid, hbar, ref, valid))


def peak_phase_change(eta0: PhaseField, eta1: PhaseField) -> float:
    """Phase of ``eta1`` at its modulus peak relative to ``eta0`` at its peak (radians, in (-pi, pi])."""
    i0 = np.unravel_index(np.argmax(np.abs(eta0.values)), eta0.grid.shape)
    i1 = np.unravel_index(np.argmax(np.abs(eta1.values)), eta1.grid.shape)
    return float(np.angle(eta1.values[i1] * np.conj(eta0.values[i0])))
